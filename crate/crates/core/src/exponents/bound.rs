use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionBound {
    /// `s − min_ℓ (d−ℓ+1) α_ℓ / (d+1)`.
    pub bound: f64,
    /// `ϖ = min_ℓ α_ℓ (d−ℓ+1)`.
    pub varpi: f64,
    /// `β = ϖ / (d+1)`.
    pub beta: f64,
}

/// Upper bound for the dimension of the singular vectors on the attractor.
pub fn dimension_bound(s: f64, d: usize, alphas: &[f64]) -> Result<DimensionBound> {
    if d == 0 || alphas.len() != d {
        return Err(invalid(format!("expected {d} exponents, got {}", alphas.len())));
    }
    let tol = 1e-9 * (1.0 + s.abs());
    if alphas.iter().any(|&a| !(a >= -tol && a <= s + tol)) {
        return Err(invalid("each exponent must lie in [0, s]"));
    }
    let varpi = alphas
        .iter()
        .enumerate()
        .map(|(i, a)| a * (d - i) as f64)
        .fold(f64::INFINITY, f64::min);
    let beta = varpi / (d + 1) as f64;
    Ok(DimensionBound { bound: s - beta, varpi, beta })
}

/// Certified lower bounds `α_ℓ ≥ s − d + ℓ`, valid when `s > d − 1`.
pub fn small_codim_bound(s: f64, d: usize) -> Result<Vec<f64>> {
    if !(s > d as f64 - 1.0) {
        return Err(Error::NotApplicable(format!("needs s > d − 1 = {}", d as f64 - 1.0)));
    }
    Ok((1..=d).map(|l| s - d as f64 + l as f64).collect())
}
