//! Covers of the excursion sets `Z_x(M, N, k, δ)` by depth-`kN` cylinders and their
//! `(s−γ)`-dimensional cover sums.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_dims, height_along, ExcursionSpec};
use crate::error::{invalid, Budgeted, Result};
use crate::exterior::{HeightParams, Lattice};
use crate::ifs::{IfsSystem, SimilarityMap, Word};

/// Accepted cylinders of a bad-word enumeration. Every depth-`depth` extension of a stored
/// prefix is a covering word; prefixes shorter than `depth` were accepted early once the quota
/// of bad epochs was met.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BadWordSet {
    pub depth: usize,
    pub prefixes: Vec<Word>,
    /// Tree nodes visited.
    pub explored: u64,
}

impl BadWordSet {
    /// Number of covering words of full depth.
    pub fn word_count(&self, num_maps: usize) -> f64 {
        self.prefixes.iter().map(|p| (num_maps as f64).powi((self.depth - p.len()) as i32)).fold(0.0, |a, b| a + b)
    }

    /// All covering words of full depth, in lexicographic order.
    pub fn expand(&self, ifs: &IfsSystem) -> Vec<Word> {
        let mut out = Vec::new();
        for p in &self.prefixes {
            for tail in ifs.words(self.depth - p.len()) {
                let mut w = p.clone();
                w.0.extend_from_slice(&tail.0);
                out.push(w);
            }
        }
        out
    }

    /// `Σ (K ρ_ω)^{s−γ}` over the full-depth covering words, summing each accepted subtree in
    /// closed form: `(Kρ_p)^{s−γ} (Σ_i ρ_i^{s−γ})^{depth−|p|}`.
    pub fn hausdorff_sum(&self, ifs: &IfsSystem, gamma: f64) -> f64 {
        let exp = ifs.sim_dim() - gamma;
        let branch = ifs.moment(-gamma);
        self.prefixes
            .iter()
            .map(|p| {
                let rho: f64 = p.0.iter().map(|&s| ifs.maps()[s as usize].ratio()).product();
                (ifs.diam_k() * rho).powf(exp) * branch.powi((self.depth - p.len()) as i32)
            })
            .fold(0.0, |a, b| a + b)
    }
}

/// `Σ_ω (diam_K · ρ_ω)^{s−γ}` over same-length words.
pub fn hausdorff_sum(ifs: &IfsSystem, words: &[Word], gamma: f64) -> Result<f64> {
    let Some(first) = words.first() else {
        return Ok(0.0);
    };
    if words.iter().any(|w| w.len() != first.len()) {
        return Err(invalid("hausdorff_sum needs words of one length"));
    }
    let exp = ifs.sim_dim() - gamma;
    let mut total = 0.0;
    for w in words {
        total += (ifs.diam_k() * ifs.rho_cocycle(w, w.len())?).powf(exp);
    }
    Ok(total)
}

struct Walker<'a> {
    ifs: &'a IfsSystem,
    x0: &'a Lattice,
    params: &'a HeightParams,
    spec: &'a ExcursionSpec,
    anchors: Vec<Vec<f64>>,
    quota: usize,
    budget: u64,
    explored: u64,
    truncated: bool,
    accepted: Vec<Word>,
}

impl Walker<'_> {
    fn visit(&mut self, word: &mut Word, h: &SimilarityMap, rho: f64, mut bad: usize) -> Result<()> {
        if self.truncated {
            return Ok(());
        }
        self.explored += 1;
        if self.explored > self.budget {
            self.truncated = true;
            return Ok(());
        }
        let k = self.spec.epoch_depth;
        let depth = word.len();
        if depth.is_multiple_of(k) {
            let last = *word.0.last().expect("visit starts below the root") as usize;
            let rep = h.apply(&self.anchors[last]);
            if height_along(self.x0, &rep, rho, self.params)?.value > self.spec.threshold {
                bad += 1;
            }
        }
        if bad >= self.quota {
            self.accepted.push(word.clone());
            return Ok(());
        }
        let remaining = self.spec.epochs - depth / k;
        if bad + remaining < self.quota || depth == self.spec.epochs * k {
            return Ok(());
        }
        for (i, map) in self.ifs.maps().iter().enumerate() {
            word.push(i as u8);
            let child = h.compose(map);
            self.visit(word, &child, rho * map.ratio(), bad)?;
            word.0.pop();
            if self.truncated {
                break;
            }
        }
        Ok(())
    }
}

/// Depth-first search for words `ω ∈ Λ^{kN}` whose cylinder meets `Z_x(M, N, k, δ)`, judged at
/// each epoch boundary by the height at the prefix's representative point. A branch is pruned
/// once the remaining epochs cannot reach the quota `⌊δN⌋+1` and accepted as soon as they have.
/// Top-level subtrees run in parallel, each with an equal share of `budget_nodes`.
pub fn enumerate_bad_words(
    ifs: &IfsSystem,
    x0: &Lattice,
    params: &HeightParams,
    spec: &ExcursionSpec,
    budget_nodes: u64,
) -> std::result::Result<BadWordSet, Budgeted<BadWordSet>> {
    check_dims(ifs, x0, params)?;
    let depth = spec.epochs * spec.epoch_depth;
    let m = ifs.num_maps();
    let anchors: Vec<Vec<f64>> = ifs.maps().iter().map(|h| h.fixed_point()).collect();
    let share = budget_nodes.saturating_sub(1).div_ceil(m as u64);
    let quota = spec.quota();
    let runs: Vec<Result<(Vec<Word>, u64, bool)>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut w = Walker {
                ifs,
                x0,
                params,
                spec,
                anchors: anchors.clone(),
                quota,
                budget: share,
                explored: 0,
                truncated: false,
                accepted: Vec::new(),
            };
            let map = &ifs.maps()[i];
            w.visit(&mut Word(vec![i as u8]), map, map.ratio(), 0)?;
            Ok((w.accepted, w.explored.min(share), w.truncated))
        })
        .collect();
    let mut set = BadWordSet { depth, prefixes: Vec::new(), explored: 1 };
    let mut truncated = budget_nodes == 0;
    for r in runs {
        let (words, explored, t) = r.map_err(Budgeted::Failed)?;
        set.prefixes.extend(words);
        set.explored += explored;
        truncated |= t;
    }
    if truncated {
        let explored = set.explored;
        Err(Budgeted::Partial { partial: set, explored })
    } else {
        Ok(set)
    }
}

/// Fixed `(M, k, δ, γ)` for a sweep over `N = 1..=max_epochs`; `c0` is the constant of the
/// decay criterion (`2(cA)^3` from a contraction audit).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionSweep {
    pub threshold: f64,
    pub epoch_depth: usize,
    pub delta: f64,
    pub gamma: f64,
    pub max_epochs: usize,
    pub budget_nodes: u64,
    pub c0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionRow {
    pub epochs: usize,
    pub sum: f64,
    /// Cover sum over all of `Λ^{kN}`, `K^{s−γ}(Σ_i ρ_i^{s−γ})^{kN}`.
    pub full_tree: f64,
    pub prefixes: usize,
    pub words: f64,
    pub explored: u64,
    pub truncated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub sweep: DimensionSweep,
    pub rows: Vec<DimensionRow>,
    /// Least-squares slope of `ln(sum)` against `N` over rows with a positive sum.
    pub log_rate: f64,
    pub strictly_decreasing: bool,
    /// `ξ = ∫ρ(·,1)^{−γ} dμ`.
    pub xi: f64,
    /// `ζ = (∫ρ(·,1) dμ)^{ϱβ−γ}`.
    pub zeta: f64,
    /// `c0 (ζ^δ ξ^{1−δ})^k`.
    pub criterion_value: f64,
    pub criterion_met: bool,
}

/// Cover sums of `Z_x(M, N, k, δ)` as `N` grows, with the fitted geometric rate.
pub fn dimension_estimate(
    ifs: &IfsSystem,
    x0: &Lattice,
    params: &HeightParams,
    sweep: &DimensionSweep,
) -> std::result::Result<DimensionEstimate, Budgeted<DimensionEstimate>> {
    if sweep.max_epochs == 0 {
        return Err(invalid("max_epochs must be at least 1").into());
    }
    if !(sweep.c0 >= 1.0) {
        return Err(invalid("c0 must be at least 1").into());
    }
    let xi = ifs.moment(-sweep.gamma);
    let zeta = ifs.moment(1.0).powf(params.gamma_max() - sweep.gamma);
    let criterion_value =
        sweep.c0 * (zeta.powf(sweep.delta) * xi.powf(1.0 - sweep.delta)).powi(sweep.epoch_depth as i32);
    let mut out = DimensionEstimate {
        sweep: sweep.clone(),
        rows: Vec::new(),
        log_rate: f64::NAN,
        strictly_decreasing: true,
        xi,
        zeta,
        criterion_value,
        criterion_met: criterion_value < 1.0,
    };
    let exp = ifs.sim_dim() - sweep.gamma;
    for n in 1..=sweep.max_epochs {
        let spec = ExcursionSpec::new(sweep.threshold, n, sweep.epoch_depth, sweep.delta, sweep.gamma)?;
        let (set, truncated) = match enumerate_bad_words(ifs, x0, params, &spec, sweep.budget_nodes) {
            Ok(set) => (set, false),
            Err(Budgeted::Partial { partial, .. }) => (partial, true),
            Err(Budgeted::Failed(e)) => return Err(Budgeted::Failed(e)),
        };
        out.rows.push(DimensionRow {
            epochs: n,
            sum: set.hausdorff_sum(ifs, sweep.gamma),
            full_tree: ifs.diam_k().powf(exp) * ifs.moment(-sweep.gamma).powi((n * sweep.epoch_depth) as i32),
            prefixes: set.prefixes.len(),
            words: set.word_count(ifs.num_maps()),
            explored: set.explored,
            truncated,
        });
        if truncated {
            break;
        }
    }
    finish(&mut out);
    let explored = out.rows.iter().map(|r| r.explored).sum();
    if out.rows.last().is_some_and(|r| r.truncated) {
        Err(Budgeted::Partial { partial: out, explored })
    } else {
        Ok(out)
    }
}

fn finish(out: &mut DimensionEstimate) {
    out.strictly_decreasing = out.rows.windows(2).all(|w| w[1].sum < w[0].sum);
    let pts: Vec<(f64, f64)> =
        out.rows.iter().filter(|r| r.sum > 0.0).map(|r| (r.epochs as f64, r.sum.ln())).collect();
    if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        out.log_rate = sxy / sxx;
    } else if out.rows.len() >= 2 && pts.is_empty() {
        out.log_rate = f64::NEG_INFINITY;
    }
}
