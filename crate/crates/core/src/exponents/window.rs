//! Largest cylinder mass inside sliding windows of projected cylinder centres.

use rustc_hash::FxHashMap;

/// Bins per `ε + reach`; finer bins tighten the upper bracket.
const BINS_PER_WINDOW: f64 = 4.0;
const MAX_DENSE_BINS: usize = 1 << 26;

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct WindowResult {
    pub lower: f64,
    pub upper: f64,
    /// Upper bracket with every window widened by `extra` on each side.
    pub upper_widened: f64,
    /// Centre, in frame coordinates, of the window realising `upper`.
    pub offset: Vec<f64>,
}

/// Brackets for `sup_o μ({x : ‖π(x) − o‖ < ε})`, where `π` is the projection whose values at the
/// cylinder centres are `proj` (`l` coordinates per cylinder) and every cylinder lies within
/// `reach` of its centre. Windows are cubes in projected coordinates, so for `l ≥ 2` the upper
/// bracket bounds a cube neighbourhood containing the Euclidean one.
pub(crate) fn windows(proj: &[f64], l: usize, masses: &[f64], eps: f64, reach: f64, extra: f64) -> WindowResult {
    let n = masses.len();
    let mut lo = vec![f64::INFINITY; l];
    let mut hi = vec![f64::NEG_INFINITY; l];
    for k in 0..n {
        for j in 0..l {
            lo[j] = lo[j].min(proj[k * l + j]);
            hi[j] = hi[j].max(proj[k * l + j]);
        }
    }
    let bw = (eps + reach) / BINS_PER_WINDOW;
    let k_up = (2.0 * (eps + reach) / bw).ceil() as usize + 1;
    let k_wide = (2.0 * (eps + reach + extra) / bw).ceil() as usize + 1;
    let inner = if l == 1 { eps - reach } else { (eps - reach) / (l as f64).sqrt() };
    let j_low = if inner > 0.0 { (2.0 * inner / bw * (1.0 - 1e-12)).floor() as usize } else { 0 };
    let cells: Vec<usize> = (0..l).map(|j| ((hi[j] - lo[j]) / bw).floor() as usize + 1).collect();
    let total: f64 = cells.iter().map(|&c| c as f64).product();
    let (upper, anchor, upper_widened, lower) = if l == 1 && total <= MAX_DENSE_BINS as f64 {
        dense(proj, masses, lo[0], bw, cells[0], k_up, k_wide, j_low)
    } else {
        sparse(proj, l, masses, &lo, bw, k_up, k_wide, j_low)
    };
    let offset = (0..l).map(|j| lo[j] + (anchor[j] as f64 + k_up as f64 / 2.0) * bw).collect();
    // Relative slack covers rounding in the mass sums.
    let slack = 1.0 + 1e-12;
    WindowResult {
        lower: lower.min(1.0),
        upper: (upper * slack).min(1.0),
        upper_widened: (upper_widened * slack).min(1.0),
        offset,
    }
}

#[allow(clippy::too_many_arguments)]
fn dense(
    proj: &[f64],
    masses: &[f64],
    lo: f64,
    bw: f64,
    nb: usize,
    k_up: usize,
    k_wide: usize,
    j_low: usize,
) -> (f64, Vec<i64>, f64, f64) {
    let mut hist = vec![0.0; nb];
    for (p, m) in proj.iter().zip(masses) {
        let b = (((p - lo) / bw) as usize).min(nb - 1);
        hist[b] += m;
    }
    let mut prefix = Vec::with_capacity(nb + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for h in &hist {
        acc += h;
        prefix.push(acc);
    }
    let best = |k: usize| -> (f64, usize) {
        if k == 0 {
            return (0.0, 0);
        }
        let mut best = (0.0, 0);
        for start in 0..nb {
            let end = (start + k).min(nb);
            let s = prefix[end] - prefix[start];
            if s > best.0 {
                best = (s, start);
            }
        }
        best
    };
    let (up, at) = best(k_up);
    (up, vec![at as i64], best(k_wide).0, best(j_low).0)
}

type Key = [i64; 3];

#[allow(clippy::too_many_arguments)]
fn sparse(
    proj: &[f64],
    l: usize,
    masses: &[f64],
    lo: &[f64],
    bw: f64,
    k_up: usize,
    k_wide: usize,
    j_low: usize,
) -> (f64, Vec<i64>, f64, f64) {
    assert!(l <= 3, "projections of rank at most 3");
    let mut cells: FxHashMap<Key, f64> = FxHashMap::default();
    for (k, m) in masses.iter().enumerate() {
        let mut key = [0i64; 3];
        for j in 0..l {
            key[j] = ((proj[k * l + j] - lo[j]) / bw).floor() as i64;
        }
        *cells.entry(key).or_insert(0.0) += m;
    }
    let (up, anchor) = box_max(&cells, l, k_up);
    (up, anchor[..l].to_vec(), box_max(&cells, l, k_wide).0, box_max(&cells, l, j_low).0)
}

/// Largest sum over `k^l` blocks of cells, via one scatter pass per axis.
fn box_max(cells: &FxHashMap<Key, f64>, l: usize, k: usize) -> (f64, Key) {
    if k == 0 {
        return (0.0, [0; 3]);
    }
    let mut cur = cells.clone();
    for axis in 0..l {
        let mut next: FxHashMap<Key, f64> = FxHashMap::default();
        next.reserve(cur.len() * k);
        for (key, v) in &cur {
            for t in 0..k as i64 {
                let mut a = *key;
                a[axis] -= t;
                *next.entry(a).or_insert(0.0) += v;
            }
        }
        cur = next;
    }
    // Deterministic tie-break on the anchor.
    cur.into_iter()
        .fold((0.0, [0; 3]), |best, (key, v)| {
            if v > best.0 || (v == best.0 && key < best.1) {
                (v, key)
            } else {
                best
            }
        })
}
