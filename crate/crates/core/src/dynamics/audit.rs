//! Moment identity, the log-Lipschitz slack of the height, and the contraction-inequality audit.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{height_along, PHI_RADIUS};
use crate::error::{invalid, Error, Result};
use crate::exterior::{margulis_height, u_matrix, HeightParams, Lattice};
use crate::ifs::IfsSystem;
use crate::sampling::{shard_rng, MeanEstimate};

/// `(Σ_{ω∈Λ^n} ρ_ω^{s+γ}, (Σ_i ρ_i^{s+γ})^n)`: the left side by summing every depth-`n` cylinder.
pub fn moment_identity_check(ifs: &IfsSystem, gamma: f64, n: usize) -> Result<(f64, f64)> {
    if n > 10 {
        return Err(Error::Precondition(format!("depth {n} exceeds 10")));
    }
    let ratios = ifs.ratios();
    let exp = ifs.sim_dim() + gamma;
    fn leaves(ratios: &[f64], rho: f64, remaining: usize, exp: f64) -> f64 {
        if remaining == 0 {
            return rho.powf(exp);
        }
        ratios.iter().map(|r| leaves(ratios, rho * r, remaining - 1, exp)).sum()
    }
    let lhs = if n == 0 {
        1.0
    } else {
        let parts: Vec<f64> = ratios.par_iter().map(|r| leaves(&ratios, *r, n - 1, exp)).collect();
        parts.iter().sum()
    };
    Ok((lhs, ifs.moment(gamma).powi(n as i32)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlackReport {
    pub radius: f64,
    pub samples_per_lattice: usize,
    /// `max f(u(x)y)/f(y)` and its inverse over the sweep.
    pub a_emp: f64,
    pub worst_lattice: usize,
}

/// Empirical `A`: the largest ratio between `f(u(x)y)` and `f(y)` (either way round) over the
/// given lattices and `‖x‖ ≤ radius`. Each lattice gets the `±radius·e_i` points and
/// `per_lattice` uniform draws from the ball.
pub fn log_lipschitz_slack(
    params: &HeightParams,
    lattices: &[Lattice],
    radius: f64,
    per_lattice: usize,
    seed: u64,
) -> Result<SlackReport> {
    let d = params.dim;
    if !(radius >= 0.0) {
        return Err(invalid("radius must be non-negative"));
    }
    let worst: Vec<Result<f64>> = lattices
        .par_iter()
        .enumerate()
        .map(|(idx, y)| {
            let mut rng = shard_rng(seed, idx as u64);
            let mut points: Vec<Vec<f64>> = Vec::new();
            for i in 0..d {
                for sign in [-1.0, 1.0] {
                    let mut x = vec![0.0; d];
                    x[i] = sign * radius;
                    points.push(x);
                }
            }
            for _ in 0..per_lattice {
                let g: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                let r = radius * rng.gen::<f64>().powf(1.0 / d as f64);
                points.push(g.iter().map(|v| v * r / norm).collect());
            }
            let base = margulis_height(y, params, PHI_RADIUS)?.value;
            let mut worst: f64 = 1.0;
            for x in &points {
                let moved = margulis_height(&y.act_unchecked(&u_matrix(x)).reduced(), params, PHI_RADIUS)?.value;
                worst = worst.max(moved / base).max(base / moved);
            }
            Ok(worst)
        })
        .collect();
    let mut report = SlackReport { radius, samples_per_lattice: per_lattice, a_emp: 1.0, worst_lattice: 0 };
    for (i, w) in worst.into_iter().enumerate() {
        let w = w?;
        if w > report.a_emp {
            report.a_emp = w;
            report.worst_lattice = i;
        }
    }
    Ok(report)
}

/// Audited left side of the contraction inequality for one lattice `y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct YSample {
    pub height: f64,
    pub certified: bool,
    /// `∫ρ(x,k)^{−γ} f(g_{ρ(x,k)} u(x) y) dμ`.
    pub lhs: MeanEstimate,
    /// `∫ f(g_{ρ(x,k)} u(x) y) dμ`.
    pub average: MeanEstimate,
    /// `lhs / (f(y) · drift^{ϱβ−γ})`, point estimate and 3-stderr lower end.
    pub ratio: f64,
    pub ratio_lower: f64,
    pub in_fit: bool,
    pub satisfied: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionRow {
    pub delta: f64,
    /// `c0 (ζ^δ ξ^{1−δ})^k`.
    pub value: f64,
    pub met: bool,
}

/// Equal-ratio reading `∫ f(g_{ρ^k} u(x) y) dμ ≤ a f(y) + b` with `a = cρ^{kβ'}`, `b = Tρ^{−kβ'}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplifiedForm {
    pub rho: f64,
    pub a: f64,
    pub b: f64,
    /// `a < 1`.
    pub classical: bool,
    /// Every sampled `y` satisfies the inequality within 3-stderr bars.
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub k: usize,
    pub gamma: f64,
    /// `β' = ϱβ`, the exponent the lattice heights contract with.
    pub beta_contraction: f64,
    /// `∫ρ(·,k) dμ = (Σ_i ρ_i^{s+1})^k`.
    pub drift: f64,
    pub drift_power: f64,
    /// `∫ρ(·,k)^{−γ} dμ`.
    pub xi: f64,
    pub samples: Vec<YSample>,
    /// Fitted `T` (median sampled height) and the smallest `c ≥ 1` for it.
    pub threshold: f64,
    pub c: f64,
    /// `(T, c(T))` at every sampled height.
    pub frontier: Vec<(f64, f64)>,
    pub slack: SlackReport,
    /// `2 (c A_emp)^3`.
    pub c0: f64,
    pub criterion: Vec<CriterionRow>,
    pub criterion_met: bool,
    pub simplified: Option<SimplifiedForm>,
    pub ch_holds: bool,
}

/// `δ` values at which the decay criterion is evaluated.
pub const DELTA_GRID: [f64; 8] = [0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99, 0.999];

/// Samples per lattice in the `A_emp` sweep run by the audit.
const SLACK_SAMPLES: usize = 16;

/// Audit of `∫ρ(x,k)^{−γ} f(g_{ρ(x,k)} u(x) y) dμ ≤ c f(y) (∫ρ(x,k) dμ)^{ϱβ−γ}` on sampled `y`.
/// The outer sum over `Λ^k` is exact; inside each cylinder `μ|_{K_ω}` is sampled as `h_ω` of
/// `μ`-samples.
pub fn contraction_audit(
    ifs: &IfsSystem,
    params: &HeightParams,
    k: usize,
    y_samples: &[Lattice],
    mc_per_cylinder: usize,
    seed: u64,
) -> Result<ContractionReport> {
    let d = ifs.dim();
    if params.dim != d {
        return Err(invalid("height parameters do not match the IFS dimension"));
    }
    if y_samples.iter().any(|y| y.dim() != d + 1) {
        return Err(invalid("panel lattices must have rank d+1"));
    }
    if k == 0 || mc_per_cylinder < 2 || y_samples.is_empty() {
        return Err(invalid("need k ≥ 1, at least 2 samples per cylinder and a non-empty panel"));
    }
    let gamma = params.gamma;
    let top = params.gamma_max();
    let s = ifs.sim_dim();
    let words = ifs.words(k);
    let cyl: Vec<_> = words.iter().map(|w| ifs.cylinder(w)).collect::<Result<_>>()?;
    let tail = ((1e-13f64).ln() / ifs.max_ratio().ln()).ceil() as usize;
    let drift = ifs.moment(1.0).powi(k as i32);
    let drift_power = drift.powf(top - gamma);

    let raw: Vec<Result<(f64, bool, MeanEstimate, MeanEstimate)>> = y_samples
        .par_iter()
        .enumerate()
        .map(|(idx, y)| {
            let mut rng = shard_rng(seed, idx as u64);
            let hy = margulis_height(y, params, PHI_RADIUS)?;
            let (mut lhs, mut lhs_var, mut avg, mut avg_var) = (0.0, 0.0, 0.0, 0.0);
            let mut total = 0;
            for c in &cyl {
                let rho = c.diameter / ifs.diam_k();
                let values: Vec<f64> = ifs
                    .sample_words_with(&mut rng, tail, mc_per_cylinder)
                    .iter()
                    .map(|w| {
                        let x = c.map.apply(&ifs.code_point(w)?);
                        Ok(height_along(y, &x, rho, params)?.value)
                    })
                    .collect::<Result<_>>()?;
                let est = MeanEstimate::from_values(&values);
                let weight = rho.powf(s - gamma);
                lhs += weight * est.mean;
                lhs_var += (weight * est.stderr).powi(2);
                avg += c.mass * est.mean;
                avg_var += (c.mass * est.stderr).powi(2);
                total += values.len();
            }
            Ok((
                hy.value,
                hy.certified,
                MeanEstimate { mean: lhs, stderr: lhs_var.sqrt(), n: total },
                MeanEstimate { mean: avg, stderr: avg_var.sqrt(), n: total },
            ))
        })
        .collect();
    let mut samples = Vec::with_capacity(raw.len());
    for r in raw {
        let (height, certified, lhs, average) = r?;
        let scale = height * drift_power;
        samples.push(YSample {
            height,
            certified,
            lhs,
            average,
            ratio: lhs.mean / scale,
            ratio_lower: lhs.lower() / scale,
            in_fit: false,
            satisfied: false,
        });
    }

    let mut heights: Vec<f64> = samples.iter().map(|y| y.height).collect();
    heights.sort_by(f64::total_cmp);
    let fit_c = |t: f64| {
        samples.iter().filter(|y| y.height > t).map(|y| y.ratio_lower).fold(1.0, f64::max)
    };
    let frontier: Vec<(f64, f64)> = heights.iter().map(|&t| (t, fit_c(t))).collect();
    let threshold = heights[(heights.len() - 1) / 2];
    let c = fit_c(threshold);
    for y in &mut samples {
        y.in_fit = y.height > threshold;
        y.satisfied = y.ratio_lower <= c;
    }
    let ch_holds = samples.iter().filter(|y| y.in_fit).all(|y| y.satisfied);

    let radius = 2.0 * ifs.norm_bound();
    let slack = log_lipschitz_slack(params, y_samples, radius, SLACK_SAMPLES, seed ^ 0x5eed)?;
    let c0 = 2.0 * (c * slack.a_emp).powi(3);
    let xi1 = ifs.moment(-gamma);
    let zeta1 = ifs.moment(1.0).powf(top - gamma);
    let criterion: Vec<CriterionRow> = DELTA_GRID
        .iter()
        .map(|&delta| {
            let value = c0 * (zeta1.powf(delta) * xi1.powf(1.0 - delta)).powi(k as i32);
            CriterionRow { delta, value, met: value < 1.0 }
        })
        .collect();
    let criterion_met = criterion.iter().any(|r| r.met);

    let simplified = ifs.homogeneous_params().map(|(rho, _)| {
        let contraction = rho.powf(k as f64 * top);
        let a = c * contraction;
        let b = threshold / contraction;
        let holds = samples.iter().all(|y| y.average.lower() <= a * y.height + b);
        SimplifiedForm { rho, a, b, classical: a < 1.0, holds }
    });

    Ok(ContractionReport {
        k,
        gamma,
        beta_contraction: top,
        drift,
        drift_power,
        xi: xi1.powi(k as i32),
        samples,
        threshold,
        c,
        frontier,
        slack,
        c0,
        criterion,
        criterion_met,
        simplified,
        ch_holds,
    })
}
