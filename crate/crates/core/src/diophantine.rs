//! Dirichlet improvability by direct search, fractal scans of cylinder representatives, and the
//! comparison with cusp excursions of `g_t u(x) Z^{d+1}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{orbit_heights, ExcursionSpec};
use crate::error::{invalid, Budgeted, Result};
use crate::exponents::dimension_bound;
use crate::exterior::{HeightParams, Lattice};
use crate::ifs::{IfsSystem, Word};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletQuery {
    pub x: Vec<f64>,
    pub eps: f64,
    pub n: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub p: i64,
    pub q: Vec<i64>,
    /// `|q·x + p|`.
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletResult {
    pub solvable: bool,
    pub witness: Option<Witness>,
}

/// `⌊n^{1/d}⌋`, corrected for rounding at perfect powers.
pub fn search_radius(n: f64, d: usize) -> i64 {
    let mut r = n.powf(1.0 / d as f64).floor() as i64;
    while ((r + 1) as f64).powi(d as i32) <= n {
        r += 1;
    }
    while r > 0 && (r as f64).powi(d as i32) > n {
        r -= 1;
    }
    r
}

/// Visits every `q ≠ 0` with `‖q‖_∞ ≤ radius`, one of each `±q` pair (first non-zero
/// coordinate positive), by increasing sup-norm and lexicographically within a shell. Stops
/// early when `visit` returns `true`.
fn for_each_q(d: usize, radius: i64, mut visit: impl FnMut(&[i64]) -> bool) {
    let mut q = vec![0i64; d];
    for shell in 1..=radius {
        if shell_walk(&mut q, 0, shell, false, false, &mut visit) {
            return;
        }
    }
}

/// Fills `q[i..]` in lexicographic order; `hit` records whether some earlier coordinate has
/// modulus `shell`, `signed` whether an earlier coordinate is non-zero.
fn shell_walk(
    q: &mut [i64],
    i: usize,
    shell: i64,
    hit: bool,
    signed: bool,
    visit: &mut impl FnMut(&[i64]) -> bool,
) -> bool {
    if i == q.len() {
        return visit(q);
    }
    let lo = if signed { -shell } else { 0 };
    let last = i + 1 == q.len();
    let mut v = lo;
    while v <= shell {
        if last && !hit && v.abs() != shell {
            // Only ±shell can complete a vector that has not reached the shell yet.
            v = shell;
        }
        q[i] = v;
        if shell_walk(q, i + 1, shell, hit || v.abs() == shell, signed || v != 0, visit) {
            return true;
        }
        v += 1;
    }
    false
}

fn form(q: &[i64], x: &[f64]) -> (i64, f64) {
    let dot: f64 = q.iter().zip(x).map(|(a, b)| *a as f64 * b).sum();
    let p = (-dot).round();
    (p as i64, (dot + p).abs())
}

/// Searches `0 < ‖q‖_∞ ≤ N^{1/d}` for `|q·x + p| ≤ ε/N`, with `p` the nearest integer to `−q·x`.
pub fn dirichlet_test(query: &DirichletQuery) -> Result<DirichletResult> {
    let d = query.x.len();
    if d == 0 {
        return Err(invalid("x must be non-empty"));
    }
    if !(query.eps > 0.0 && query.eps <= 1.0) {
        return Err(invalid("eps must lie in (0,1]"));
    }
    if !(query.n >= 1.0 && query.n.is_finite()) {
        return Err(invalid("N must be at least 1"));
    }
    let bound = query.eps / query.n;
    let mut witness = None;
    for_each_q(d, search_radius(query.n, d), |q| {
        let (p, value) = form(q, &query.x);
        if value <= bound {
            witness = Some(Witness { p, q: q.to_vec(), value });
            true
        } else {
            false
        }
    });
    Ok(DirichletResult { solvable: witness.is_some(), witness })
}

/// `min |q·x + p|` over `0 < ‖q‖_∞ ≤ r` for every radius in `radii` (ascending), in one sweep.
fn best_forms(x: &[f64], radii: &[i64]) -> Vec<f64> {
    let max = radii.last().copied().unwrap_or(0);
    let mut out = vec![f64::INFINITY; radii.len()];
    let mut best = f64::INFINITY;
    let mut next = 0;
    let mut record = |shell: i64, best: f64, next: &mut usize| {
        while *next < radii.len() && radii[*next] < shell {
            out[*next] = best;
            *next += 1;
        }
    };
    for_each_q(x.len(), max, |q| {
        let shell = q.iter().map(|v| v.abs()).max().unwrap();
        record(shell, best, &mut next);
        best = best.min(form(q, x).1);
        false
    });
    record(i64::MAX, best, &mut next);
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImprovabilityProfile {
    pub x: Vec<f64>,
    pub eps_ladder: Vec<f64>,
    pub n_ladder: Vec<f64>,
    /// `solvable[i][j]` for `eps_ladder[i]`, `n_ladder[j]`.
    pub solvable: Vec<Vec<bool>>,
    /// Smallest failing `N` per `ε`.
    pub first_failure: Vec<Option<f64>>,
    /// Per `ε`: no failure on the upper half of the `N` ladder.
    pub improvable: Vec<bool>,
    /// Smallest `ε` that is improvable in that sense; `None` when no ladder value is.
    pub score: Option<f64>,
}

/// Dirichlet solvability over an `ε × N` grid. Improvability is judged on the upper half of
/// the `N` ladder, so points that become solvable only past some `N` still count.
pub fn improvability_profile(x: &[f64], eps_ladder: &[f64], n_ladder: &[f64]) -> Result<ImprovabilityProfile> {
    let d = x.len();
    if d == 0 || eps_ladder.is_empty() || n_ladder.is_empty() {
        return Err(invalid("x and both ladders must be non-empty"));
    }
    if eps_ladder.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
        return Err(invalid("eps values must lie in (0,1]"));
    }
    if n_ladder.iter().any(|n| !(*n >= 1.0 && n.is_finite())) || n_ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("N ladder must be increasing and at least 1"));
    }
    let radii: Vec<i64> = n_ladder.iter().map(|&n| search_radius(n, d)).collect();
    let best = best_forms(x, &radii);
    let solvable: Vec<Vec<bool>> = eps_ladder
        .iter()
        .map(|&eps| n_ladder.iter().zip(&best).map(|(&n, &b)| b <= eps / n).collect())
        .collect();
    let first_failure =
        solvable.iter().map(|row| row.iter().position(|s| !s).map(|j| n_ladder[j])).collect();
    let tail = n_ladder.len() / 2;
    let improvable: Vec<bool> = solvable.iter().map(|row| row[tail..].iter().all(|s| *s)).collect();
    let score = eps_ladder
        .iter()
        .zip(&improvable)
        .filter(|(_, ok)| **ok)
        .map(|(e, _)| *e)
        .fold(None, |acc: Option<f64>, e| Some(acc.map_or(e, |a| a.min(e))));
    Ok(ImprovabilityProfile {
        x: x.to_vec(),
        eps_ladder: eps_ladder.to_vec(),
        n_ladder: n_ladder.to_vec(),
        solvable,
        first_failure,
        improvable,
        score,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub word: Word,
    pub representative: Vec<f64>,
    pub first_failure: Vec<Option<f64>>,
    pub flagged: Vec<bool>,
    /// `diam(K_ω)^{s−γ}`.
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub depth: usize,
    pub gamma: f64,
    pub eps_ladder: Vec<f64>,
    pub n_ladder: Vec<f64>,
    pub rows: Vec<ScanRow>,
    /// Per `ε`: share of scanned cylinders whose representative is improvable.
    pub flagged_fraction: Vec<f64>,
    /// Per `ε`: `Σ diam^{s−γ}` over flagged cylinders.
    pub cover_sum: Vec<f64>,
    pub dimension_bound: Option<f64>,
    pub truncated: bool,
}

/// Classifies the representative point of every depth-`depth` cylinder (at most `budget`
/// cylinders, in lexicographic order). Depth 0 scans the single root cylinder, represented by
/// the fixed point of the first map.
pub fn fractal_scan(
    ifs: &IfsSystem,
    depth: usize,
    eps_ladder: &[f64],
    n_ladder: &[f64],
    gamma: f64,
    alphas: Option<&[f64]>,
    budget: u64,
) -> std::result::Result<ScanReport, Budgeted<ScanReport>> {
    let total = (ifs.num_maps() as f64).powi(depth as i32);
    let words: Vec<Word> = if total <= budget as f64 {
        ifs.words(depth)
    } else {
        first_words(ifs.num_maps(), depth, budget as usize)
    };
    let truncated = (words.len() as f64) < total;
    let exp = ifs.sim_dim() - gamma;
    let rows: Vec<Result<ScanRow>> = words
        .into_par_iter()
        .map(|word| {
            let representative =
                if word.is_empty() { ifs.maps()[0].fixed_point() } else { ifs.code_point(&word)? };
            let profile = improvability_profile(&representative, eps_ladder, n_ladder)?;
            let weight = (ifs.diam_k() * ifs.rho_cocycle(&word, word.len())?).powf(exp);
            Ok(ScanRow {
                word,
                representative,
                first_failure: profile.first_failure,
                flagged: profile.improvable,
                weight,
            })
        })
        .collect();
    let rows: Vec<ScanRow> = rows.into_iter().collect::<Result<_>>()?;
    let count = rows.len().max(1) as f64;
    let flagged_fraction =
        (0..eps_ladder.len()).map(|i| rows.iter().filter(|r| r.flagged[i]).count() as f64 / count).collect();
    let cover_sum = (0..eps_ladder.len())
        .map(|i| rows.iter().filter(|r| r.flagged[i]).map(|r| r.weight).fold(0.0, |a, b| a + b))
        .collect();
    let bound = match alphas {
        Some(a) => Some(dimension_bound(ifs.sim_dim(), ifs.dim(), a)?.bound),
        None => None,
    };
    let report = ScanReport {
        depth,
        gamma,
        eps_ladder: eps_ladder.to_vec(),
        n_ladder: n_ladder.to_vec(),
        rows,
        flagged_fraction,
        cover_sum,
        dimension_bound: bound,
        truncated,
    };
    if truncated {
        let explored = report.rows.len() as u64;
        Err(Budgeted::Partial { partial: report, explored })
    } else {
        Ok(report)
    }
}

/// The first `count` words of length `depth` in lexicographic order.
fn first_words(m: usize, depth: usize, count: usize) -> Vec<Word> {
    (0..count)
        .map(|mut idx| {
            let mut w = vec![0u8; depth];
            for slot in w.iter_mut().rev() {
                *slot = (idx % m) as u8;
                idx /= m;
            }
            Word(w)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DaniPoint {
    pub x: Vec<f64>,
    pub score: Option<f64>,
    /// Smallest `1/φ_1` (shortest-vector length) over epochs `l ≥ 1`.
    pub min_shortest: f64,
    pub heights: Vec<f64>,
}

/// Improvability profile and orbit trace of one point, reduced to the two statistics compared
/// by [`rank_agreement`].
pub fn dani_crosscheck(
    ifs: &IfsSystem,
    x: &[f64],
    x0: &Lattice,
    params: &HeightParams,
    spec: &ExcursionSpec,
    eps_ladder: &[f64],
    n_ladder: &[f64],
) -> Result<DaniPoint> {
    let profile = improvability_profile(x, eps_ladder, n_ladder)?;
    let trace = orbit_heights(ifs, x, x0, params, spec)?;
    let min_shortest = trace
        .epochs
        .iter()
        .filter(|e| e.index >= 1)
        .map(|e| 1.0 / e.phis[0])
        .fold(f64::INFINITY, f64::min);
    Ok(DaniPoint {
        x: x.to_vec(),
        score: profile.score,
        min_shortest,
        heights: trace.epochs.iter().map(|e| e.height).collect(),
    })
}

/// Spearman rank correlation between singularity score (`None` ranked above every value) and
/// the minimal shortest vector, with average ranks for ties.
pub fn rank_agreement(points: &[DaniPoint]) -> f64 {
    let scores: Vec<f64> = points.iter().map(|p| p.score.unwrap_or(f64::INFINITY)).collect();
    let shortest: Vec<f64> = points.iter().map(|p| p.min_shortest).collect();
    pearson(&ranks(&scores), &ranks(&shortest))
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            out[idx[k]] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(x: &[f64], eps: f64, n: f64) -> DirichletResult {
        dirichlet_test(&DirichletQuery { x: x.to_vec(), eps, n }).unwrap()
    }

    #[test]
    fn radius_handles_perfect_powers() {
        assert_eq!(search_radius(1000.0, 3), 10);
        assert_eq!(search_radius(999.0, 3), 9);
        assert_eq!(search_radius(9.0, 2), 3);
        assert_eq!(search_radius(1.0, 2), 1);
    }

    #[test]
    fn enumeration_visits_each_pair_once() {
        let mut seen = Vec::new();
        for_each_q(2, 2, |q| {
            seen.push(q.to_vec());
            false
        });
        assert_eq!(seen.len(), (25 - 1) / 2);
        assert_eq!(seen[0], vec![0, 1]);
        for q in &seen {
            let neg: Vec<i64> = q.iter().map(|v| -v).collect();
            assert!(!seen.contains(&neg));
        }
        let sup: Vec<i64> = seen.iter().map(|q| q.iter().map(|v| v.abs()).max().unwrap()).collect();
        assert!(sup.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn half_is_killed_by_two() {
        let r = q(&[0.5], 0.5, 10.0);
        let w = r.witness.unwrap();
        assert_eq!((w.p, w.q.clone()), (-1, vec![2]));
        assert_eq!(w.value, 0.0);
    }

    #[test]
    fn thirds_are_solvable_at_nine() {
        let r = q(&[1.0 / 3.0, 1.0 / 3.0], 0.01, 9.0);
        assert!(r.solvable);
        let w = r.witness.unwrap();
        assert!(w.value <= 0.01 / 9.0 && w.q.iter().all(|v| v.abs() <= 3));
        // The exact-zero witness (3, 0), p = −1, is also admissible.
        assert_eq!(form(&[3, 0], &[1.0 / 3.0, 1.0 / 3.0]), (-1, 0.0));
    }

    #[test]
    fn golden_ratio_fails_between_fibonacci_numbers() {
        let x = (5f64.sqrt() - 1.0) / 2.0;
        // F_10 = 55, F_11 = 89: N = 80 exceeds 0.5·√5·55 ≈ 61.5.
        assert!(!q(&[x], 0.5, 80.0).solvable);
        assert!(q(&[x], 0.5, 60.0).solvable);
    }

    #[test]
    fn profile_bookkeeping() {
        let x = (5f64.sqrt() - 1.0) / 2.0;
        let eps = [0.3, 0.6, 0.9, 1.0];
        let ns: Vec<f64> = (1..=12).map(|i| 2f64.powi(i)).collect();
        let p = improvability_profile(&[x], &eps, &ns).unwrap();
        for j in 0..ns.len() {
            for i in 1..eps.len() {
                assert!(!p.solvable[i - 1][j] || p.solvable[i][j]);
            }
        }
        for (i, ff) in p.first_failure.iter().enumerate() {
            let want = p.solvable[i].iter().position(|s| !s).map(|j| ns[j]);
            assert_eq!(*ff, want);
        }
        assert_eq!(p.first_failure[3], None);
        assert_eq!(p.score, Some(0.9));
    }

    #[test]
    fn rational_profile_scores_ladder_minimum() {
        let ns: Vec<f64> = (1..=10).map(|i| 4f64.powi(i)).collect();
        let p = improvability_profile(&[3.0 / 7.0], &[0.01, 0.1, 1.0], &ns).unwrap();
        assert_eq!(p.score, Some(0.01));
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn root_scan_is_one_profile() {
        let ifs = crate::ifs::preset("cantor3").unwrap();
        let r = fractal_scan(&ifs, 0, &[0.5, 1.0], &[10.0, 100.0], 0.0, None, 10).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].representative, vec![0.0]);
    }

    #[test]
    fn zero_exponent_cover_sum_counts_flags() {
        let ifs = crate::ifs::preset("cantor3").unwrap();
        let s = ifs.sim_dim();
        let r = fractal_scan(&ifs, 3, &[0.2, 1.0], &[10.0, 100.0, 1000.0], s, None, 100).unwrap();
        for i in 0..2 {
            let flagged = r.rows.iter().filter(|row| row.flagged[i]).count() as f64;
            assert!((r.cover_sum[i] - flagged).abs() < 1e-12);
        }
    }

    #[test]
    fn starved_scan_is_partial() {
        let ifs = crate::ifs::preset("cantor3x3").unwrap();
        match fractal_scan(&ifs, 3, &[1.0], &[10.0], 0.0, None, 5) {
            Err(Budgeted::Partial { partial, explored }) => {
                assert!(partial.truncated);
                assert_eq!(explored, 5);
            }
            other => panic!("expected a partial scan, got {other:?}"),
        }
    }
}
