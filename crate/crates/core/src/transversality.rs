//! Normal vectors of the zero sets of `x ↦ ⟨u(x)v, e_I⟩`, their transversality, the
//! neighbourhood-containment constant, and a Monte Carlo check of the expansion estimate.

use nalgebra::{DMatrix, DVector};
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exterior::{apply_diagonal, apply_unipotent, ExteriorVector};
use crate::ifs::IfsSystem;
use crate::sampling::{par_draw, MeanEstimate};

/// Normal vector `n_I ∈ R^d` for an index set `I ∋ 0`: coordinate `i ∉ I` is
/// `(−1)^p v_J` with `J = (I ∪ {i}) ∖ {0}` and `p` the position of `i` in `J`.
pub fn normal_vector(v: &ExteriorVector, set: &[usize]) -> Result<Vec<f64>> {
    let n = v.ambient();
    check_set(set, n, v.level())?;
    if set[0] != 0 {
        return Err(invalid("index set must contain 0"));
    }
    let d = n - 1;
    let mut out = vec![0.0; d];
    for i in 1..=d {
        if set.contains(&i) {
            continue;
        }
        let mut j: Vec<usize> = set[1..].to_vec();
        j.push(i);
        j.sort_unstable();
        let p = j.iter().position(|&k| k == i).expect("inserted");
        let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
        out[i - 1] = sign * v.coord(&j);
    }
    Ok(out)
}

/// `n_I` from its definition `⟨u(e_i)v, e_I⟩ − v_I`, used to cross-check [`normal_vector`].
pub fn normal_vector_oracle(v: &ExteriorVector, set: &[usize]) -> Result<Vec<f64>> {
    let n = v.ambient();
    check_set(set, n, v.level())?;
    let d = n - 1;
    let base = v.coord(set);
    (1..=d)
        .map(|i| {
            if set.contains(&i) {
                return Ok(0.0);
            }
            let mut e = vec![0.0; d];
            e[i - 1] = 1.0;
            Ok(apply_unipotent(&e, v)?.coord(set) - base)
        })
        .collect()
}

fn check_set(set: &[usize], n: usize, level: usize) -> Result<()> {
    if set.len() != level {
        return Err(invalid(format!("index set has {} elements, level is {level}", set.len())));
    }
    if set.windows(2).any(|w| w[0] >= w[1]) || set.iter().any(|&i| i >= n) {
        return Err(invalid("index set must be strictly increasing within 0..=d"));
    }
    Ok(())
}

/// `{(J ∪ {0}) ∖ {j} : j ∈ J}` for `0 ∉ J`, listed in increasing order of `j`.
pub fn jset(j: &[usize], d: usize) -> Result<Vec<Vec<usize>>> {
    if j.contains(&0) {
        return Err(invalid("J must not contain 0"));
    }
    if j.is_empty() || j.windows(2).any(|w| w[0] >= w[1]) || j.iter().any(|&i| i > d) {
        return Err(invalid("J must be a non-empty increasing subset of 1..=d"));
    }
    Ok(j.iter()
        .map(|&drop| {
            let mut s = vec![0];
            s.extend(j.iter().filter(|&&k| k != drop));
            s
        })
        .collect())
}

/// `‖∧_{I ∈ 𝒥(J)} n_I‖ − |v_J|^{|J|}`; never below rounding error.
pub fn transversality_defect(v: &ExteriorVector, j: &[usize]) -> Result<f64> {
    let d = v.ambient() - 1;
    if j.len() != v.level() || v.level() > d {
        return Err(invalid("|J| must equal the level, which must be at most d"));
    }
    let normals = jset(j, d)?
        .iter()
        .map(|i| normal_vector(v, i))
        .collect::<Result<Vec<_>>>()?;
    let wedge = ExteriorVector::wedge_of(&normals)?;
    Ok(wedge.norm() - v.coord(j).abs().powi(j.len() as i32))
}

/// Affine hyperplane `{x : ⟨normal, x⟩ = offset}` with a unit normal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Hyperplane {
    /// Normalises `normal` (and scales `offset` to match).
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        let len = crate::linalg::norm(&normal);
        if !(len > 0.0) {
            return Err(invalid("zero normal"));
        }
        Ok(Self { normal: normal.iter().map(|x| x / len).collect(), offset: offset / len })
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        (crate::linalg::dot(&self.normal, x) - self.offset).abs()
    }
}

/// Containment constant `κ^{−1−1/ℓ} K^ℓ` with `K = √ℓ` bounding the norm of a matrix of `ℓ` unit rows.
pub fn containment_constant(kappa: f64, ell: usize) -> f64 {
    let l = ell as f64;
    kappa.powf(-1.0 - 1.0 / l) * l.sqrt().powf(l)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContainmentReport {
    pub ell: usize,
    pub kappa: f64,
    pub wedge_norm: f64,
    pub eps: f64,
    pub constant: f64,
    pub attempts: usize,
    pub accepted: usize,
    /// Largest `dist(x, ∩L_k)/ε` over the accepted samples and the extreme corners.
    pub max_ratio: f64,
    pub violations: usize,
}

/// Samples points of `∩_k L_k^{(ε)}` by rejection from a box around the intersection that
/// holds every achievable normal displacement, plus the corners of the displacement
/// parallelotope, and checks each against `dist ≤ C ε`.
pub fn containment_check(planes: &[Hyperplane], kappa: f64, eps: f64, samples: usize, seed: u64) -> Result<ContainmentReport> {
    let ell = planes.len();
    let d = planes.first().map(|p| p.normal.len()).ok_or_else(|| invalid("no planes"))?;
    if planes.iter().any(|p| p.normal.len() != d) {
        return Err(invalid("planes live in different dimensions"));
    }
    if ell >= d {
        return Err(Error::Precondition(format!("need 1 ≤ ℓ ≤ d−1, got ℓ = {ell}, d = {d}")));
    }
    if !(kappa > 0.0 && eps > 0.0) {
        return Err(invalid("kappa and eps must be positive"));
    }
    let normals: Vec<Vec<f64>> = planes.iter().map(|p| p.normal.clone()).collect();
    let wedge_norm = ExteriorVector::wedge_of(&normals)?.norm();
    if wedge_norm < kappa * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!("‖n_1∧…∧n_ℓ‖ = {wedge_norm:.6} < κ = {kappa}")));
    }
    let a = DMatrix::from_fn(ell, d, |k, i| normals[k][i]);
    let c = DVector::from_iterator(ell, planes.iter().map(|p| p.offset));
    // Minimum-norm solution A^+ c, and A^+ itself.
    let gram_inv = (&a * a.transpose())
        .try_inverse()
        .ok_or_else(|| Error::Inconsistent("normals are numerically dependent".into()))?;
    let pinv = a.transpose() * gram_inv;
    let x0 = &pinv * &c;
    let residual = (&a * &x0 - &c).norm();
    if residual > 1e-9 * (1.0 + c.norm()) {
        return Err(Error::Inconsistent(format!("intersection appears empty (residual {residual:.3e})")));
    }
    let dist = |x: &DVector<f64>| -> f64 { (&pinv * (&a * x - &c)).norm() };
    let constant = containment_constant(kappa, ell);
    // Box: exact bounding box of {A^+ s : |s_k| ≤ ε}, widened by ε for components along the
    // intersection.
    let half: Vec<f64> = (0..d)
        .map(|i| eps * ((0..ell).map(|k| pinv[(i, k)].abs()).sum::<f64>() + 1.0))
        .collect();
    let inside = |x: &DVector<f64>| -> bool {
        planes.iter().all(|p| p.distance(x.as_slice()) < eps)
    };
    let draws = par_draw(seed, samples, |rng| {
        let x = DVector::from_fn(d, |i, _| x0[i] + half[i] * rng.gen_range(-1.0..1.0));
        inside(&x).then(|| dist(&x))
    });
    let mut ratios: Vec<f64> = draws.iter().flatten().map(|r| r / eps).collect();
    let accepted = ratios.len();
    // Corners s ∈ {±ε(1 − 1e-12)}^ℓ realise the largest displacements.
    for mask in 0..(1usize << ell) {
        let s = DVector::from_fn(ell, |k, _| if mask >> k & 1 == 1 { eps } else { -eps } * (1.0 - 1e-12));
        let x = &x0 + &pinv * s;
        if inside(&x) {
            ratios.push(dist(&x) / eps);
        }
    }
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    let violations = ratios.iter().filter(|&&r| r > constant).count();
    Ok(ContainmentReport {
        ell,
        kappa,
        wedge_norm,
        eps,
        constant,
        attempts: samples,
        accepted,
        max_ratio,
        violations,
    })
}

/// Exponents of the expansion estimate at level `ℓ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionParams {
    pub ell: usize,
    pub dim: usize,
    pub delta: f64,
    pub lam: f64,
    pub gamma: f64,
    /// `δλ(d−ℓ+1)/(d+1)`.
    pub kappa: f64,
    /// `(1+δ)/(1−δ)`.
    pub p: f64,
    /// `(1+δ)/(2δ)`, the conjugate exponent of `p`.
    pub q: f64,
}

impl ExpansionParams {
    pub fn new(dim: usize, ell: usize, delta: f64, lam: f64, gamma: f64) -> Result<Self> {
        if ell == 0 || ell > dim {
            return Err(invalid(format!("level {ell} outside 1..={dim}")));
        }
        if !(delta > 0.0 && delta < 1.0) || !(lam > 0.0) || !gamma.is_finite() {
            return Err(invalid("need 0 < δ < 1, λ > 0 and finite γ"));
        }
        Ok(Self {
            ell,
            dim,
            delta,
            lam,
            gamma,
            kappa: delta * lam * (dim - ell + 1) as f64 / (dim + 1) as f64,
            p: (1.0 + delta) / (1.0 - delta),
            q: (1.0 + delta) / (2.0 * delta),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub params: ExpansionParams,
    pub v_norm: f64,
    pub tau_depth: usize,
    pub lhs: MeanEstimate,
    /// `‖v‖^{−δλ} (∫ τ^{p(γ+κ)} dμ)^{1/p}`, by exact cylinder quadrature.
    pub rhs_shape: f64,
    /// `lhs.mean / rhs_shape`: the empirical constant.
    pub ratio: f64,
    /// `lhs.upper() / rhs_shape`.
    pub ratio_upper: f64,
}

/// Monte Carlo estimate of `∫ τ^γ ‖g_τ u(x) v‖^{−δλ} dμ` with `τ(x) = ρ(x, tau_depth)`,
/// compared against the shape of its bound. `alpha` is the decay exponent `α_ℓ(μ)` supplied
/// by the caller; `λ ≤ α` is required.
pub fn expansion_moment_audit(
    ifs: &IfsSystem,
    v: &ExteriorVector,
    params: &ExpansionParams,
    alpha: f64,
    tau_depth: usize,
    samples: usize,
    seed: u64,
) -> Result<ExpansionReport> {
    let d = ifs.dim();
    if v.ambient() != d + 1 || v.level() != params.ell || params.dim != d {
        return Err(invalid("vector level/dimension does not match the parameters"));
    }
    if params.lam > alpha {
        return Err(Error::Precondition(format!("λ = {} exceeds α_ℓ = {alpha}", params.lam)));
    }
    if samples == 0 || tau_depth == 0 {
        return Err(invalid("samples and tau_depth must be positive"));
    }
    let v_norm = v.norm();
    if !(v_norm > 0.0) {
        return Err(invalid("v must be non-zero"));
    }
    let exponent = params.delta * params.lam;
    // Tail long enough that truncation error is below 1e-13 of the attractor size.
    let tail = ((1e-13f64).ln() / ifs.max_ratio().ln()).ceil() as usize;
    let dist = WeightedIndex::new(ifs.probabilities()).expect("positive probabilities");
    let values: Vec<Result<f64>> = par_draw(seed, samples, |rng| {
        let symbols: Vec<u8> = (0..tau_depth + tail).map(|_| dist.sample(rng) as u8).collect();
        let word = crate::ifs::Word(symbols);
        let x = ifs.code_point(&word)?;
        let tau = ifs.rho_cocycle(&word, tau_depth)?;
        let w = apply_diagonal(tau, &apply_unipotent(&x, v)?)?;
        Ok(tau.powf(params.gamma) * w.norm().powf(-exponent))
    });
    let values = values.into_iter().collect::<Result<Vec<f64>>>()?;
    let lhs = MeanEstimate::from_values(&values);
    let integral = ifs.moment(params.p * (params.gamma + params.kappa)).powi(tau_depth as i32);
    let rhs_shape = v_norm.powf(-exponent) * integral.powf(1.0 / params.p);
    Ok(ExpansionReport {
        params: params.clone(),
        v_norm,
        tau_depth,
        ratio: lhs.mean / rhs_shape,
        ratio_upper: lhs.upper() / rhs_shape,
        lhs,
        rhs_shape,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::preset;

    fn ev(n: usize, level: usize, coords: &[f64]) -> ExteriorVector {
        ExteriorVector::new(n, level, coords.to_vec()).unwrap()
    }

    #[test]
    fn normal_vector_examples() {
        let e1 = ExteriorVector::monomial(3, &[1]).unwrap();
        assert_eq!(normal_vector(&e1, &[0]).unwrap(), vec![1.0, 0.0]);
        let e12 = ExteriorVector::monomial(3, &[1, 2]).unwrap();
        let n = normal_vector(&e12, &[0, 1]).unwrap();
        assert_eq!(n[0], 0.0);
        assert_eq!(n[1].abs(), 1.0);
        // Only coordinates on sets containing 0 are non-zero.
        let v = ev(3, 2, &[1.0, 2.0, 0.0]);
        assert_eq!(normal_vector(&v, &[0, 2]).unwrap(), vec![0.0, 0.0]);
        assert!(normal_vector(&e12, &[1, 2]).is_err());
    }

    #[test]
    fn normal_vector_matches_oracle() {
        let v = ev(4, 2, &[0.3, -1.2, 0.7, 2.0, -0.4, 1.1]);
        for set in crate::exterior::exterior_basis(4, 2).unwrap() {
            if set[0] != 0 {
                continue;
            }
            let a = normal_vector(&v, &set).unwrap();
            let b = normal_vector_oracle(&v, &set).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn jset_examples() {
        assert_eq!(jset(&[1, 2], 2).unwrap(), vec![vec![0, 2], vec![0, 1]]);
        assert_eq!(jset(&[1], 1).unwrap(), vec![vec![0]]);
        assert_eq!(jset(&[1, 3], 3).unwrap(), vec![vec![0, 3], vec![0, 1]]);
        assert!(jset(&[0, 1], 2).is_err());
    }

    #[test]
    fn defect_examples() {
        let e12 = ExteriorVector::monomial(3, &[1, 2]).unwrap();
        assert!(transversality_defect(&e12, &[1, 2]).unwrap().abs() < 1e-15);
        let v = ev(3, 2, &[1.0, 2.0, 0.0]);
        assert!(transversality_defect(&v, &[1, 2]).unwrap() >= 0.0);
    }

    #[test]
    fn containment_orthogonal_planes() {
        let planes = vec![
            Hyperplane::new(vec![1.0, 0.0, 0.0], 0.0).unwrap(),
            Hyperplane::new(vec![0.0, 1.0, 0.0], 0.5).unwrap(),
        ];
        let r = containment_check(&planes, 1.0, 0.1, 2000, 1).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.max_ratio <= 2f64.sqrt() + 1e-9);
        assert!(r.max_ratio > 1.3);
        assert!(r.accepted > 0);
    }

    #[test]
    fn containment_thirty_degrees() {
        let a = 30f64.to_radians();
        let planes = vec![
            Hyperplane::new(vec![1.0, 0.0, 0.0], 0.2).unwrap(),
            Hyperplane::new(vec![a.cos(), a.sin(), 0.0], -0.1).unwrap(),
        ];
        let r = containment_check(&planes, 0.5, 1e-3, 4000, 3).unwrap();
        assert_eq!(r.violations, 0);
        assert!((r.wedge_norm - 0.5).abs() < 1e-12);
    }

    #[test]
    fn containment_preconditions() {
        let p = |n: Vec<f64>| Hyperplane::new(n, 0.0).unwrap();
        assert!(matches!(
            containment_check(&[p(vec![1.0, 0.0]), p(vec![0.0, 1.0])], 1.0, 0.1, 10, 0),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            containment_check(&[p(vec![1.0, 0.0, 0.0]), p(vec![1.0, 0.1, 0.0])], 0.5, 0.1, 10, 0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn expansion_params_conjugate() {
        let e = ExpansionParams::new(2, 1, 0.5, 0.6, 0.1).unwrap();
        assert!((1.0 / e.p + 1.0 / e.q - 1.0).abs() < 1e-12);
        assert!((e.kappa - 0.5 * 0.6 * 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn expansion_closed_form_d1() {
        let ifs = preset("cantor3").unwrap();
        let e0 = ExteriorVector::monomial(2, &[0]).unwrap();
        let params = ExpansionParams::new(1, 1, 0.5, 0.6, 0.2).unwrap();
        let r = expansion_moment_audit(&ifs, &e0, &params, ifs.sim_dim(), 3, 200, 9).unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-12);
        let r10 = expansion_moment_audit(&ifs, &e0.scale(10.0), &params, ifs.sim_dim(), 3, 200, 9).unwrap();
        assert!((r10.ratio - r.ratio).abs() < 1e-9 * r.ratio);
    }
}
