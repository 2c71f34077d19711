use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{slab_mass, CylinderCloud, DEFAULT_MAX_CYLINDERS};
use crate::error::{invalid, Result};
use crate::ifs::IfsSystem;
use crate::linalg;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationLevel {
    pub n: usize,
    /// Mean over the angle grid of `log τ(θ, n)`.
    pub mean_log_tau: f64,
    /// `(mean log τ(·, n) + log D) / (n log ρ)`.
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationCocycle {
    pub rho: f64,
    pub angle: f64,
    pub doubling: f64,
    pub levels: Vec<RotationLevel>,
    /// `sup_n` of the level values: the quantity the sub-additive argument identifies with `α_1`.
    pub estimate: f64,
    /// `min_n` of the level values.
    pub min_value: f64,
    /// Slope of `mean log τ(·, n)` against `n log ρ` over the upper half of the levels.
    pub slope_estimate: f64,
}

/// Averages of the slab-mass cocycle `τ(θ, n) = sup_{L ⊥ θ} μ(L^{(ρ^n)})` over an angle grid,
/// for a planar homogeneous IFS whose rotation angle is not a rational multiple of π.
pub fn rotation_cocycle_bound(ifs: &IfsSystem, n_max: usize, theta_grid: usize) -> Result<RotationCocycle> {
    if ifs.dim() != 2 {
        return Err(invalid("rotation cocycle needs a planar IFS"));
    }
    let (rho, angle) = match ifs.homogeneous_params() {
        Some((rho, Some(angle))) => (rho, angle),
        _ => return Err(invalid("IFS is not homogeneous")),
    };
    if is_rational_turn(angle) {
        return Err(invalid(format!("rotation angle {angle} is a rational multiple of π")));
    }
    if n_max == 0 || theta_grid == 0 {
        return Err(invalid("n_max and theta_grid must be positive"));
    }
    let doubling = (1.0 + ifs.diam_k()).ceil() + 1.0;
    let log_d = doubling.ln();
    let pi = std::f64::consts::PI;
    let normals: Vec<Vec<f64>> = (0..theta_grid)
        .map(|i| {
            let t = pi * i as f64 / theta_grid as f64;
            vec![t.cos(), t.sin()]
        })
        .collect();
    let mut levels = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let eps = rho.powi(n as i32);
        let cloud = CylinderCloud::new(ifs, eps * rho * (1.0 + 1e-9), DEFAULT_MAX_CYLINDERS)?;
        let logs: Vec<f64> = normals.par_iter().map(|u| slab_mass(&cloud, u, eps).upper.ln()).collect();
        let mean_log_tau = logs.iter().sum::<f64>() / logs.len() as f64;
        levels.push(RotationLevel { n, mean_log_tau, value: (mean_log_tau + log_d) / (n as f64 * rho.ln()) });
    }
    let estimate = levels.iter().map(|l| l.value).fold(f64::NEG_INFINITY, f64::max);
    let min_value = levels.iter().map(|l| l.value).fold(f64::INFINITY, f64::min);
    let tail: Vec<&RotationLevel> = levels.iter().filter(|l| 2 * l.n >= n_max).collect();
    let slope_estimate = if tail.len() >= 2 {
        let x: Vec<f64> = tail.iter().map(|l| l.n as f64 * rho.ln()).collect();
        let y: Vec<f64> = tail.iter().map(|l| l.mean_log_tau).collect();
        linalg::ls_slope(&x, &y)
    } else {
        levels[0].mean_log_tau / rho.ln()
    };
    Ok(RotationCocycle { rho, angle, doubling, levels, estimate, min_value, slope_estimate })
}

/// `angle/π` within 1e-9 of a fraction with denominator at most 360.
fn is_rational_turn(angle: f64) -> bool {
    let x = angle / std::f64::consts::PI;
    (1..=360).any(|q| {
        let p = (x * q as f64).round();
        (x * q as f64 - p).abs() < 1e-9 * q as f64
    })
}
