use serde::{Deserialize, Serialize};

use super::lattice::{phi_ell, primitive_subgroups, Lattice};
use crate::error::{invalid, Result};

/// Exponent bundle for the height function `f_{ε,ϱ}` and the contraction inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightParams {
    pub dim: usize,
    pub eps: f64,
    pub rho_exp: f64,
    pub alphas: Vec<f64>,
    pub varpi: f64,
    pub betas: Vec<f64>,
    pub beta: f64,
    pub gamma: f64,
    pub gamma0: f64,
}

impl HeightParams {
    /// `gamma = None` selects the top of the admissible range, `ϱβ`.
    pub fn new(dim: usize, alphas: &[f64], eps: f64, rho_exp: f64, gamma: Option<f64>) -> Result<Self> {
        if dim == 0 || alphas.len() != dim {
            return Err(invalid(format!("expected {dim} exponents, got {}", alphas.len())));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(invalid("eps must lie in (0,1)"));
        }
        if !(rho_exp > 0.0 && rho_exp < 1.0) {
            return Err(invalid("rho_exp must lie in (0,1)"));
        }
        if alphas.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(invalid("exponents must be positive"));
        }
        let varpi = alphas
            .iter()
            .enumerate()
            .map(|(i, a)| a * (dim - i) as f64)
            .fold(f64::INFINITY, f64::min);
        let betas = (1..=dim).map(|l| (dim - l + 1) as f64 / varpi).collect();
        let beta = varpi / (dim + 1) as f64;
        let gamma0 = rho_exp * beta - (1.0 - rho_exp) / (1.0 + rho_exp);
        let top = rho_exp * beta;
        let gamma = gamma.unwrap_or(top);
        let slack = 1e-12 * (1.0 + top.abs());
        if !(gamma >= gamma0 - slack && gamma <= top + slack) {
            return Err(invalid(format!("gamma = {gamma} outside [{gamma0}, {top}]")));
        }
        Ok(Self { dim, eps, rho_exp, alphas: alphas.to_vec(), varpi, betas, beta, gamma, gamma0 })
    }

    /// Same exponents with another `ε`.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.dim, &self.alphas, eps, self.rho_exp, Some(self.gamma))
    }

    /// Same exponents with another `γ` (validated).
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.dim, &self.alphas, self.eps, self.rho_exp, Some(gamma))
    }

    /// `β_ℓ = (d−ℓ+1)/ϖ` for `0 ≤ ℓ ≤ d+1`.
    pub fn beta_at(&self, level: usize) -> f64 {
        (self.dim + 1 - level.min(self.dim + 1)) as f64 / self.varpi
    }

    /// Upper end `ϱβ` of the admissible `γ` range.
    pub fn gamma_max(&self) -> f64 {
        self.rho_exp * self.beta
    }

    /// `f_{ε,ϱ}` from precomputed `φ_1..φ_d`.
    pub fn height_from_phis(&self, phis: &[f64]) -> f64 {
        2.0 + phis
            .iter()
            .enumerate()
            .map(|(i, phi)| self.eps.powi(i as i32 + 1) * phi.powf(self.rho_exp / self.betas[i]))
            .sum::<f64>()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightValue {
    pub value: f64,
    pub phis: Vec<f64>,
    /// All `φ_ℓ` certified exact; otherwise `value` is a lower bound.
    pub certified: bool,
}

/// `f_{ε,ϱ}(x) = 2 + Σ_ℓ ε^ℓ φ_ℓ(x)^{ϱ/β_ℓ}`.
pub fn margulis_height(x: &Lattice, params: &HeightParams, radius: f64) -> Result<HeightValue> {
    if x.dim() != params.dim + 1 {
        return Err(invalid(format!("lattice rank {} does not match d+1 = {}", x.dim(), params.dim + 1)));
    }
    let mut phis = Vec::with_capacity(params.dim);
    let mut certified = true;
    for l in 1..=params.dim {
        let r = phi_ell(x, l, radius)?;
        certified &= r.certified;
        phis.push(r.value);
    }
    Ok(HeightValue { value: params.height_from_phis(&phis), phis, certified })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsolationLevel {
    pub level: usize,
    pub phi: f64,
    /// Largest covolume admitted into the threshold set at this level.
    pub covolume_threshold: f64,
    /// Primitive subgroups (up to sign) in the threshold set.
    pub count: usize,
    pub complete: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsolationReport {
    pub eps: f64,
    pub q_norm: f64,
    pub f_eps: f64,
    pub threshold: f64,
    pub below_threshold: bool,
    pub levels: Vec<IsolationLevel>,
    /// At most one element per level.
    pub isolated: bool,
}

/// `F_ε(x) = max_ℓ ε^{ϖℓ} φ_ℓ^{1/β_ℓ}` and the per-level population of the set of monomials
/// within a factor `Q^{2ϖ}` of it. `threshold` is the constant compared with `F_ε`.
pub fn isolation_profile(
    x: &Lattice,
    params: &HeightParams,
    q_norm: f64,
    threshold: f64,
    radius: f64,
) -> Result<IsolationReport> {
    let d = params.dim;
    if x.dim() != d + 1 {
        return Err(invalid("lattice rank does not match the exponents"));
    }
    if !(q_norm >= 1.0) {
        return Err(invalid("Q_norm must be at least 1"));
    }
    let eps = params.eps;
    let mut phis = Vec::with_capacity(d);
    let mut f_eps: f64 = 0.0;
    for l in 1..=d {
        let phi = phi_ell(x, l, radius)?;
        let term = eps.powf(params.varpi * l as f64) * phi.value.powf(1.0 / params.beta_at(l));
        f_eps = f_eps.max(term);
        phis.push(phi);
    }
    let cap = radius.floor().max(1.0) as i64;
    let mut levels = Vec::with_capacity(d);
    for l in 1..=d {
        let bl = params.beta_at(l);
        let bound = (eps.powf(params.varpi * l as f64) * q_norm.powf(2.0 * params.varpi) / f_eps).powf(bl);
        let (subs, complete) = primitive_subgroups(x.basis(), l, bound * (1.0 + 1e-9), cap);
        levels.push(IsolationLevel {
            level: l,
            phi: phis[l - 1].value,
            covolume_threshold: bound,
            count: subs.len(),
            complete: complete && phis[l - 1].certified,
        });
    }
    let isolated = levels.iter().all(|l| l.count <= 1);
    Ok(IsolationReport {
        eps,
        q_norm,
        f_eps,
        threshold,
        below_threshold: f_eps <= threshold,
        levels,
        isolated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cantor_params(d: usize) -> HeightParams {
        let a1 = 2f64.ln() / 3f64.ln();
        let alphas: Vec<f64> = (1..=d).map(|l| a1 * l as f64).collect();
        HeightParams::new(d, &alphas, 0.1, 0.5, None).unwrap()
    }

    #[test]
    fn params_relations() {
        let p = cantor_params(2);
        let a1 = 2f64.ln() / 3f64.ln();
        assert!((p.varpi - 2.0 * a1).abs() < 1e-14);
        assert!((p.beta - 2.0 * a1 / 3.0).abs() < 1e-14);
        for l in 1..=2 {
            for j in 1..=l.min(3 - l) {
                let lhs = p.beta_at(l - j) + p.beta_at(l + j);
                assert!((lhs - 2.0 * p.beta_at(l)).abs() < 1e-12);
            }
        }
        assert!(HeightParams::new(2, &[a1, 2.0 * a1], 0.1, 0.5, Some(1.0)).is_err());
        assert!(HeightParams::new(2, &[a1], 0.1, 0.5, None).is_err());
    }

    #[test]
    fn standard_height() {
        let p = cantor_params(2);
        let h = margulis_height(&Lattice::standard(3), &p, 8.0).unwrap();
        assert!((h.value - (2.0 + 0.1 + 0.01)).abs() < 1e-12);
    }

    #[test]
    fn diagonal_height_d1() {
        let a1 = 2f64.ln() / 3f64.ln();
        let p = HeightParams::new(1, &[a1], 0.1, 0.5, None).unwrap();
        let x = Lattice::from_rows(2, &[0.5, 0.0, 0.0, 2.0]).unwrap();
        let h = margulis_height(&x, &p, 16.0).unwrap();
        assert!((h.value - (2.0 + 0.1 * 2f64.powf(0.5 * a1))).abs() < 1e-12);
    }

    #[test]
    fn cusp_is_isolated() {
        let a1 = 2f64.ln() / 3f64.ln();
        let p = HeightParams::new(1, &[a1], 0.5, 0.5, None).unwrap();
        let h = 1e3;
        let x = Lattice::from_rows(2, &[h, 0.0, 0.0, 1.0 / h]).unwrap();
        let r = isolation_profile(&x, &p, 2.0, 1.0, 1e4).unwrap();
        assert_eq!(r.levels[0].count, 1);
        assert!(r.isolated);
        assert!(!r.below_threshold);
    }

    #[test]
    fn standard_below_threshold() {
        let p = cantor_params(2).with_eps(1e-3).unwrap();
        let r = isolation_profile(&Lattice::standard(3), &p, 1.0, 1.0, 8.0).unwrap();
        assert!(r.below_threshold);
        // With Q = 1 only maximisers survive: the coordinate lines/planes all tie at level 1 and 2.
        assert!(r.levels.iter().any(|l| l.count >= 1));
    }
}
