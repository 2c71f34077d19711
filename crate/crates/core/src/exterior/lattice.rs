use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::integer::{complete_to_unimodular, gcd_all, is_primitive};
use crate::error::{invalid, Result};
use crate::linalg;

/// Unimodular lattice `g Z^{d+1}`; the basis matrix holds generators as columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    basis: DMatrix<f64>,
}

const DET_TOL: f64 = 1e-9;

impl Lattice {
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        if basis.nrows() != basis.ncols() || basis.nrows() < 2 {
            return Err(invalid("lattice basis must be square of size at least 2"));
        }
        let det = basis.determinant();
        if (det.abs() - 1.0).abs() > DET_TOL {
            return Err(invalid(format!("lattice basis has |det| = {:.3e}, expected 1", det.abs())));
        }
        Ok(Self { basis })
    }

    /// Row-major literal, as accepted in config files.
    pub fn from_rows(n: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != n * n {
            return Err(invalid(format!("expected {} entries", n * n)));
        }
        Self::new(DMatrix::from_row_slice(n, n, rows))
    }

    pub fn standard(n: usize) -> Self {
        Self { basis: DMatrix::identity(n, n) }
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Row-major entries, the inverse of [`Lattice::from_rows`].
    pub fn rows(&self) -> Vec<f64> {
        let n = self.dim();
        (0..n * n).map(|k| self.basis[(k / n, k % n)]).collect()
    }

    /// `g x` for `g ∈ SL(d+1, R)`; `|det g| = 1` is checked.
    pub fn act(&self, g: &DMatrix<f64>) -> Result<Self> {
        Self::new(g * &self.basis)
    }

    /// `g x` without the determinant check (used on long orbits where drift is monitored
    /// separately).
    pub fn act_unchecked(&self, g: &DMatrix<f64>) -> Self {
        Self { basis: g * &self.basis }
    }

    /// Same lattice with an LLL-reduced basis.
    pub fn reduced(&self) -> Self {
        let (b, _) = lll(&self.basis);
        Self { basis: b }
    }

    pub fn det(&self) -> f64 {
        self.basis.determinant()
    }
}

/// LLL reduction (δ = 0.99) of the columns; returns the reduced basis and the integer transform
/// `T` with `reduced = basis · T`.
pub fn lll(basis: &DMatrix<f64>) -> (DMatrix<f64>, Vec<Vec<i64>>) {
    let m = basis.ncols();
    let mut b: Vec<DVector<f64>> = (0..m).map(|j| basis.column(j).into_owned()).collect();
    let mut t: Vec<Vec<i64>> = (0..m).map(|j| (0..m).map(|i| (i == j) as i64).collect()).collect();
    let delta = 0.99;
    let mut k = 1;
    let mut steps = 0;
    while k < m && steps < 100_000 {
        steps += 1;
        for j in (0..k).rev() {
            let (_, mu) = gram_schmidt(&b);
            let q = mu[k][j].round();
            if q != 0.0 {
                let bj = b[j].clone();
                b[k] -= bj * q;
                let tj = t[j].clone();
                for (x, y) in t[k].iter_mut().zip(tj) {
                    *x -= q as i64 * y;
                }
            }
        }
        let (bstar, mu) = gram_schmidt(&b);
        let lovasz = (delta - mu[k][k - 1] * mu[k][k - 1]) * bstar[k - 1].norm_squared();
        if bstar[k].norm_squared() >= lovasz {
            k += 1;
        } else {
            b.swap(k, k - 1);
            t.swap(k, k - 1);
            k = (k - 1).max(1);
        }
    }
    let cols: Vec<DVector<f64>> = b;
    (DMatrix::from_columns(&cols), t)
}

fn gram_schmidt(b: &[DVector<f64>]) -> (Vec<DVector<f64>>, Vec<Vec<f64>>) {
    let m = b.len();
    let mut bstar: Vec<DVector<f64>> = Vec::with_capacity(m);
    let mut mu = vec![vec![0.0; m]; m];
    for i in 0..m {
        let mut v = b[i].clone();
        for j in 0..i {
            let denom = bstar[j].norm_squared();
            mu[i][j] = if denom > 0.0 { b[i].dot(&bstar[j]) / denom } else { 0.0 };
            v -= &bstar[j] * mu[i][j];
        }
        mu[i][i] = 1.0;
        bstar.push(v);
    }
    (bstar, mu)
}

/// Nonzero integer vectors `c` (one of each `±c` pair) with `‖B c‖ ≤ bound`, `|c_i| ≤ cap`.
/// The flag is `true` when the cap cut off part of the search ellipsoid.
pub(crate) fn short_vectors(basis: &DMatrix<f64>, bound: f64, cap: i64) -> (Vec<(Vec<i64>, f64)>, bool) {
    let m = basis.ncols();
    let qr = basis.clone().qr();
    let r = qr.r();
    let bound2 = bound * bound * (1.0 + 1e-12) + 1e-300;
    let mut out = Vec::new();
    let mut clipped = false;
    let mut c = vec![0i64; m];
    enumerate_level(&r, m, m as isize - 1, 0.0, bound2, cap, &mut c, &mut out, &mut clipped);
    (out, clipped)
}

#[allow(clippy::too_many_arguments)]
fn enumerate_level(
    r: &DMatrix<f64>,
    m: usize,
    level: isize,
    partial: f64,
    bound2: f64,
    cap: i64,
    c: &mut Vec<i64>,
    out: &mut Vec<(Vec<i64>, f64)>,
    clipped: &mut bool,
) {
    if level < 0 {
        if c.iter().any(|&v| v != 0) {
            // Keep one representative of ±c: last non-zero coordinate positive.
            let last = *c.iter().rev().find(|&&v| v != 0).expect("non-zero");
            if last > 0 {
                out.push((c.clone(), partial.sqrt()));
            }
        }
        return;
    }
    let i = level as usize;
    let rii = r[(i, i)];
    let s: f64 = (i + 1..m).map(|j| r[(i, j)] * c[j] as f64).sum();
    let center = -s / rii;
    let room = bound2 - partial;
    if room < 0.0 {
        return;
    }
    let half = room.sqrt() / rii.abs();
    let mut lo = (center - half).ceil() as i64;
    let mut hi = (center + half).floor() as i64;
    if lo < -cap {
        lo = -cap;
        *clipped = true;
    }
    if hi > cap {
        hi = cap;
        *clipped = true;
    }
    for v in lo..=hi {
        let diff = rii * v as f64 + s;
        let p = partial + diff * diff;
        if p <= bound2 {
            c[i] = v;
            enumerate_level(r, m, level - 1, p, bound2, cap, c, out, clipped);
        }
    }
    c[i] = 0;
}

/// A primitive subgroup found by enumeration: integer coefficient columns with respect to the
/// input basis, and its covolume.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Subgroup {
    pub coeffs: Vec<Vec<i64>>,
    pub covolume: f64,
}

/// Hermite-constant factor `sqrt(γ_k)` bounding the shortest vector of a rank-`k` lattice by
/// `sqrt(γ_k) · covol^{1/k}`.
fn sqrt_hermite(k: usize) -> f64 {
    match k {
        1 => 1.0,
        2 => (2.0 / 3f64.sqrt()).sqrt(),
        3 => 2f64.powf(1.0 / 6.0),
        4 => 2f64.sqrt().sqrt(),
        // Minkowski's bound γ_k ≤ 1 + k/4 suffices beyond the tabulated values.
        _ => (1.0 + k as f64 / 4.0).sqrt(),
    }
}

/// All primitive rank-`ell` subgroups of the lattice spanned by the columns of `basis`
/// with covolume ≤ `max_covol`. The flag reports whether the enumeration was complete.
pub(crate) fn primitive_subgroups(basis: &DMatrix<f64>, ell: usize, max_covol: f64, cap: i64) -> (Vec<Subgroup>, bool) {
    let m = basis.ncols();
    if ell == 0 {
        return (vec![Subgroup { coeffs: Vec::new(), covolume: 1.0 }], true);
    }
    if ell > m {
        return (Vec::new(), true);
    }
    let (red, t) = lll(basis);
    let r1 = sqrt_hermite(ell) * max_covol.powf(1.0 / ell as f64);
    let (firsts, mut clipped) = short_vectors(&red, r1, cap);
    let mut found: Vec<(Vec<i128>, Subgroup)> = Vec::new();
    for (c, len) in firsts {
        let c128: Vec<i128> = c.iter().map(|&v| v as i128).collect();
        if gcd_all(&c128) != 1 || len > max_covol * (1.0 + 1e-12) && ell == 1 {
            continue;
        }
        let v1 = &red * DVector::from_iterator(m, c.iter().map(|&v| v as f64));
        let len2 = v1.norm_squared();
        let mut tails: Vec<(Vec<Vec<i128>>, f64)> = Vec::new();
        if ell == 1 {
            tails.push((Vec::new(), 1.0));
        } else {
            let u = complete_to_unimodular(&c128).expect("primitive vector");
            let rest: Vec<DVector<f64>> = u[1..]
                .iter()
                .map(|col| {
                    let b = &red * DVector::from_iterator(m, col.iter().map(|&v| v as f64));
                    let proj = b.dot(&v1) / len2;
                    b - &v1 * proj
                })
                .collect();
            let projected = DMatrix::from_columns(&rest);
            let (subs, complete) = primitive_subgroups(&projected, ell - 1, max_covol / len2.sqrt(), cap);
            clipped |= !complete;
            for s in subs {
                let lifted: Vec<Vec<i128>> = s
                    .coeffs
                    .iter()
                    .map(|a| {
                        (0..m)
                            .map(|i| (1..m).map(|j| u[j][i] * a[j - 1] as i128).sum())
                            .collect()
                    })
                    .collect();
                tails.push((lifted, s.covolume));
            }
        }
        for (lifted, cov) in tails {
            let covolume = len2.sqrt() * cov;
            if covolume > max_covol * (1.0 + 1e-9) {
                continue;
            }
            let mut cols = vec![c128.clone()];
            cols.extend(lifted);
            // Back to coordinates of the input basis.
            let orig: Vec<Vec<i128>> = cols
                .iter()
                .map(|col| (0..m).map(|i| (0..m).map(|j| t[j][i] as i128 * col[j]).sum()).collect())
                .collect();
            let key = plucker_key(&orig);
            if found.iter().any(|(k, _)| *k == key) {
                continue;
            }
            found.push((
                key,
                Subgroup {
                    coeffs: orig.iter().map(|c| c.iter().map(|&v| v as i64).collect()).collect(),
                    covolume,
                },
            ));
        }
    }
    let mut subs: Vec<Subgroup> = found.into_iter().map(|(_, s)| s).collect();
    subs.sort_by(|a, b| a.covolume.total_cmp(&b.covolume));
    (subs, !clipped)
}

/// Integer Plücker coordinates normalised so the first non-zero entry is positive.
fn plucker_key(cols: &[Vec<i128>]) -> Vec<i128> {
    let m = cols[0].len();
    let ell = cols.len();
    let rows_sets = super::vector::exterior_basis(m, ell).expect("valid");
    let mut key: Vec<i128> = rows_sets
        .iter()
        .map(|rows| {
            let mat: Vec<Vec<i128>> = rows.iter().map(|&i| cols.iter().map(|c| c[i]).collect()).collect();
            int_det(&mat)
        })
        .collect();
    if let Some(&first) = key.iter().find(|&&v| v != 0) {
        if first < 0 {
            key.iter_mut().for_each(|v| *v = -*v);
        }
    }
    key
}

fn int_det(m: &[Vec<i128>]) -> i128 {
    match m.len() {
        0 => 1,
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        n => (0..n)
            .map(|j| {
                let minor: Vec<Vec<i128>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &v)| v).collect())
                    .collect();
                let s = if j % 2 == 0 { 1 } else { -1 };
                s * m[0][j] * int_det(&minor)
            })
            .sum(),
    }
}

/// Result of the `φ_ℓ` search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiResult {
    pub level: usize,
    /// `φ_ℓ = 1 / (minimal covolume)` over the subgroups found.
    pub value: f64,
    pub minimizer: Subgroup,
    /// `true` when the enumeration provably saw every candidate, so `value` is exact; otherwise it
    /// is a lower bound.
    pub certified: bool,
    pub radius_used: i64,
}

/// `φ_ℓ(x)`: reciprocal of the smallest covolume of a primitive rank-`ℓ` subgroup. The
/// coefficient radius doubles from 2 until the search is certified or `radius` is reached.
pub fn phi_ell(x: &Lattice, ell: usize, radius: f64) -> Result<PhiResult> {
    let n = x.dim();
    if ell == 0 || ell >= n {
        return Err(invalid(format!("level {ell} outside 1..={}", n - 1)));
    }
    if !(radius > 0.0) {
        return Err(invalid("radius must be positive"));
    }
    let cap_max = radius.floor().max(1.0) as i64;
    let (red, t) = lll(x.basis());
    // Upper bound for the minimum from the first `ell` reduced vectors.
    let cols: Vec<Vec<f64>> = (0..ell).map(|j| red.column(j).iter().cloned().collect()).collect();
    let start = linalg::gram_det(&cols).max(0.0).sqrt();
    let seed_coeffs: Vec<Vec<i64>> = (0..ell).map(|j| t[j].clone()).collect();
    let mut best = Subgroup { coeffs: seed_coeffs, covolume: start };
    let mut cap = 2.min(cap_max);
    loop {
        let (subs, certified) = primitive_subgroups(x.basis(), ell, start * (1.0 + 1e-9), cap);
        if let Some(s) = subs.first() {
            if s.covolume < best.covolume {
                best = s.clone();
            }
        }
        if certified || cap >= cap_max {
            debug_assert!(is_primitive(
                &best.coeffs.iter().map(|c| c.iter().map(|&v| v as i128).collect()).collect::<Vec<_>>()
            ));
            return Ok(PhiResult {
                level: ell,
                value: 1.0 / best.covolume,
                minimizer: best,
                certified,
                radius_used: cap,
            });
        }
        cap = (cap * 2).min(cap_max);
    }
}

/// `sup_{g ∈ Q} max(‖g‖, ‖g^{-1}‖)^{d+1}` with the operator norm on `⊕_{ℓ=1}^{d} ∧^ℓ R^{d+1}`,
/// i.e. the largest product of the top `ℓ` singular values.
pub fn set_norm(q: &[DMatrix<f64>]) -> Result<f64> {
    let mut best: f64 = 1.0;
    for g in q {
        let n = g.nrows();
        if g.ncols() != n {
            return Err(invalid("matrices must be square"));
        }
        let inv = g.clone().try_inverse().ok_or_else(|| invalid("singular matrix in set_norm"))?;
        if !inv.iter().all(|v| v.is_finite()) || g.determinant().abs() < 1e-300 {
            return Err(invalid("singular matrix in set_norm"));
        }
        let norm = exterior_op_norm(g).max(exterior_op_norm(&inv));
        best = best.max(norm.powi(n as i32));
    }
    Ok(best)
}

/// Operator norm of `g` on `⊕_{ℓ=1}^{n−1} ∧^ℓ R^n`.
pub fn exterior_op_norm(g: &DMatrix<f64>) -> f64 {
    let mut sv: Vec<f64> = g.singular_values().iter().cloned().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let mut prod = 1.0;
    let mut best: f64 = 0.0;
    for s in sv.iter().take(g.nrows() - 1) {
        prod *= s;
        best = best.max(prod);
    }
    best
}
