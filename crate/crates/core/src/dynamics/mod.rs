//! Orbits `g_{ρ(x,lk)} u(x) x_0` over the fractal, cusp-excursion covers and the contraction
//! audit.

mod audit;
mod excursion;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exterior::{g_matrix, margulis_height, u_matrix, HeightParams, HeightValue, Lattice};
use crate::ifs::IfsSystem;
use crate::sampling::par_draw;

pub use audit::{
    contraction_audit, log_lipschitz_slack, moment_identity_check, ContractionReport, CriterionRow, SimplifiedForm,
    SlackReport, YSample, DELTA_GRID,
};
pub use excursion::{
    dimension_estimate, enumerate_bad_words, hausdorff_sum, BadWordSet, DimensionEstimate, DimensionRow, DimensionSweep,
};

/// Coefficient cap handed to `φ_ℓ` along orbits.
pub const PHI_RADIUS: f64 = 64.0;

/// Parameters of the excursion set `Z_x(M, N, k, δ)` and the exponent `γ` of its cover sums.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcursionSpec {
    /// Height level `M`.
    pub threshold: f64,
    /// Number of epochs `N`.
    pub epochs: usize,
    /// Symbols per epoch `k`.
    pub epoch_depth: usize,
    pub delta: f64,
    pub gamma: f64,
}

impl ExcursionSpec {
    pub fn new(threshold: f64, epochs: usize, epoch_depth: usize, delta: f64, gamma: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold.is_finite()) {
            return Err(invalid("threshold M must be positive"));
        }
        if epochs == 0 || epoch_depth == 0 {
            return Err(invalid("epochs and epoch_depth must be at least 1"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid("delta must lie in (0,1)"));
        }
        if !gamma.is_finite() {
            return Err(invalid("gamma must be finite"));
        }
        Ok(Self { threshold, epochs, epoch_depth, delta, gamma })
    }

    /// Smallest count of bad epochs exceeding `δN`.
    pub fn quota(&self) -> usize {
        (self.delta * self.epochs as f64).floor() as usize + 1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Epoch {
    pub index: usize,
    /// `ρ(x, lk)`.
    pub rho: f64,
    pub height: f64,
    pub phis: Vec<f64>,
    pub certified: bool,
}

/// Heights along `g_{ρ(x,lk)} u(x) x_0`; entry 0 is `f(x_0)` itself.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitTrace {
    pub point: Vec<f64>,
    pub base: Lattice,
    pub epochs: Vec<Epoch>,
}

fn check_dims(ifs: &IfsSystem, x0: &Lattice, params: &HeightParams) -> Result<()> {
    let d = ifs.dim();
    if x0.dim() != d + 1 || params.dim != d {
        return Err(invalid(format!(
            "dimension mismatch: IFS in R^{d}, lattice rank {}, height params for d = {}",
            x0.dim(),
            params.dim
        )));
    }
    Ok(())
}

/// `f(g_ρ u(x) y)`.
pub fn height_along(y: &Lattice, x: &[f64], rho: f64, params: &HeightParams) -> Result<HeightValue> {
    let g = g_matrix(rho, x.len()) * u_matrix(x);
    margulis_height(&y.act_unchecked(&g).reduced(), params, PHI_RADIUS)
}

/// Epoch heights of the orbit of `x_0` under `x`. Consecutive epochs are chained through
/// reduced bases (`y_l = g_{ρ_l/ρ_{l−1}} y_{l−1}`), which keeps entries bounded on long orbits.
pub fn orbit_heights(
    ifs: &IfsSystem,
    x: &[f64],
    x0: &Lattice,
    params: &HeightParams,
    spec: &ExcursionSpec,
) -> Result<OrbitTrace> {
    check_dims(ifs, x0, params)?;
    let k = spec.epoch_depth;
    let word = ifs.assign_word(x, spec.epochs * k)?;
    let ratios = ifs.ratios();
    let start = margulis_height(x0, params, PHI_RADIUS)?;
    let mut epochs = vec![Epoch { index: 0, rho: 1.0, height: start.value, phis: start.phis, certified: start.certified }];
    let mut y = x0.act_unchecked(&u_matrix(x)).reduced();
    let mut rho = 1.0;
    for l in 1..=spec.epochs {
        let step: f64 = word.0[(l - 1) * k..l * k].iter().map(|&s| ratios[s as usize]).product();
        rho *= step;
        y = y.act_unchecked(&g_matrix(step, ifs.dim())).reduced();
        let h = margulis_height(&y, params, PHI_RADIUS)?;
        epochs.push(Epoch { index: l, rho, height: h.value, phis: h.phis, certified: h.certified });
    }
    Ok(OrbitTrace { point: x.to_vec(), base: x0.clone(), epochs })
}

/// Share of epochs `l ≥ 1` whose height is at most `M` (NaN when there are none).
pub fn divergence_fraction(trace: &OrbitTrace, threshold: f64) -> f64 {
    let tail: Vec<&Epoch> = trace.epochs.iter().filter(|e| e.index >= 1).collect();
    if tail.is_empty() {
        return f64::NAN;
    }
    tail.iter().filter(|e| e.height <= threshold).count() as f64 / tail.len() as f64
}

/// Random unimodular lattices `k · diag(e^{t_i}) · u(z) Z^{d+1}`: `t_i` uniform on `[−depth, depth]`
/// then centred, `k` a Haar-random rotation. Larger `depth` reaches further into the cusp.
pub fn lattice_panel(dim: usize, count: usize, depth: f64, seed: u64) -> Vec<Lattice> {
    let n = dim + 1;
    par_draw(seed, count, |rng| random_lattice(n, depth, rng))
}

fn random_lattice(n: usize, depth: f64, rng: &mut ChaCha8Rng) -> Lattice {
    let gauss = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = gauss.qr();
    let mut rot = qr.q();
    if rot.determinant() < 0.0 {
        rot.column_mut(0).neg_mut();
    }
    let mut t: Vec<f64> = (0..n).map(|_| rng.gen_range(-depth..=depth)).collect();
    let mean = t.iter().sum::<f64>() / n as f64;
    t.iter_mut().for_each(|v| *v -= mean);
    let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, t.iter().map(|v| v.exp())));
    let z: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let g = rot * diag * u_matrix(&z);
    Lattice::standard(n).act_unchecked(&g).reduced()
}
