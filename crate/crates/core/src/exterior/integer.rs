//! Exact integer linear algebra on small matrices (columns are generators).

use num_integer::Integer;

pub type IMat = Vec<Vec<i128>>; // list of columns

/// Invariant factors of the Smith normal form of the matrix with the given columns.
pub fn smith_invariants(cols: &[Vec<i128>]) -> Vec<i128> {
    if cols.is_empty() {
        return Vec::new();
    }
    let rows = cols[0].len();
    let mut a: Vec<Vec<i128>> = (0..rows).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
    let ncols = cols.len();
    let mut out = Vec::new();
    let mut t = 0;
    while t < rows.min(ncols) {
        // Pivot: smallest non-zero magnitude in the trailing block.
        let mut pivot = None;
        for i in t..rows {
            for j in t..ncols {
                if a[i][j] != 0 && pivot.is_none_or(|(pi, pj): (usize, usize)| a[i][j].abs() < a[pi][pj].abs()) {
                    pivot = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        a.swap(t, pi);
        for row in a.iter_mut() {
            row.swap(t, pj);
        }
        loop {
            let p = a[t][t];
            let mut dirty = false;
            for i in t + 1..rows {
                let q = Integer::div_floor(&a[i][t], &p);
                if q != 0 {
                    for j in t..ncols {
                        a[i][j] -= q * a[t][j];
                    }
                }
                if a[i][t] != 0 {
                    dirty = true;
                }
            }
            for j in t + 1..ncols {
                let q = Integer::div_floor(&a[t][j], &p);
                if q != 0 {
                    for row in a.iter_mut().skip(t) {
                        row[j] -= q * row[t];
                    }
                }
                if a[t][j] != 0 {
                    dirty = true;
                }
            }
            if !dirty {
                // Divisibility of the trailing block by the pivot.
                let bad = (t + 1..rows)
                    .flat_map(|i| (t + 1..ncols).map(move |j| (i, j)))
                    .find(|&(i, j)| a[i][j] % p != 0);
                match bad {
                    None => break,
                    Some((i, _)) => {
                        for j in t..ncols {
                            let v = a[i][j];
                            a[t][j] += v;
                        }
                        continue;
                    }
                }
            }
            // Move the smallest remaining entry of row/column t into the pivot.
            let mut best = (t, t);
            for i in t..rows {
                if a[i][t] != 0 && a[i][t].abs() < a[best.0][best.1].abs() {
                    best = (i, t);
                }
            }
            for j in t..ncols {
                if a[t][j] != 0 && a[t][j].abs() < a[best.0][best.1].abs() {
                    best = (t, j);
                }
            }
            a.swap(t, best.0);
            for row in a.iter_mut() {
                row.swap(t, best.1);
            }
        }
        out.push(a[t][t].abs());
        t += 1;
    }
    out
}

/// A set of integer coefficient columns spans a primitive subgroup iff its Smith form has
/// full rank and every invariant factor is 1.
pub fn is_primitive(cols: &[Vec<i128>]) -> bool {
    let inv = smith_invariants(cols);
    inv.len() == cols.len() && inv.iter().all(|&v| v == 1)
}

pub fn gcd_all(v: &[i128]) -> i128 {
    v.iter().fold(0i128, |g, &x| g.gcd(&x))
}

/// Unimodular `U` (returned as columns) whose first column is the primitive vector `c`.
pub fn complete_to_unimodular(c: &[i128]) -> Option<IMat> {
    let m = c.len();
    let mut w = c.to_vec();
    // Columns of U = V^{-1}; row operations on `w` are mirrored as column operations on `u`.
    let mut u: IMat = (0..m).map(|j| (0..m).map(|i| (i == j) as i128).collect()).collect();
    loop {
        let nz: Vec<usize> = (0..m).filter(|&i| w[i] != 0).collect();
        if nz.is_empty() {
            return None;
        }
        let p = *nz.iter().min_by_key(|&&i| w[i].abs()).expect("non-empty");
        if nz.len() == 1 {
            if w[p].abs() != 1 {
                return None;
            }
            if p != 0 {
                w.swap(0, p);
                u.swap(0, p);
            }
            if w[0] == -1 {
                u[0].iter_mut().for_each(|v| *v = -*v);
            }
            return Some(u);
        }
        for &j in &nz {
            if j == p {
                continue;
            }
            let q = Integer::div_floor(&w[j], &w[p]);
            w[j] -= q * w[p];
            // row_j -= q row_p on V  ⇒  col_p += q col_j on V^{-1}
            let colj = u[j].clone();
            for (a, b) in u[p].iter_mut().zip(colj) {
                *a += q * b;
            }
        }
    }
}

/// Column-style Hermite reduction: returns a basis of the subgroup generated by `cols`, and the
/// unimodular transform `W` (as columns) with `cols · W = [basis | 0]`.
pub fn column_echelon(cols: &[Vec<i128>]) -> (IMat, IMat) {
    let k = cols.len();
    if k == 0 {
        return (Vec::new(), Vec::new());
    }
    let rows = cols[0].len();
    let mut a: IMat = cols.to_vec();
    let mut w: IMat = (0..k).map(|j| (0..k).map(|i| (i == j) as i128).collect()).collect();
    let mut lead = 0;
    for r in 0..rows {
        if lead >= k {
            break;
        }
        loop {
            let nz: Vec<usize> = (lead..k).filter(|&j| a[j][r] != 0).collect();
            if nz.len() <= 1 {
                if let Some(&j) = nz.first() {
                    a.swap(lead, j);
                    w.swap(lead, j);
                    lead += 1;
                }
                break;
            }
            let p = *nz.iter().min_by_key(|&&j| a[j][r].abs()).expect("non-empty");
            for &j in &nz {
                if j == p {
                    continue;
                }
                let q = Integer::div_floor(&a[j][r], &a[p][r]);
                let (ap, wp) = (a[p].clone(), w[p].clone());
                for (x, y) in a[j].iter_mut().zip(&ap) {
                    *x -= q * y;
                }
                for (x, y) in w[j].iter_mut().zip(&wp) {
                    *x -= q * y;
                }
            }
        }
    }
    (a[..lead].to_vec(), w)
}

/// Basis of `span_Z(a) ∩ span_Z(b)` for full-column-rank integer matrices.
pub fn intersect(a: &[Vec<i128>], b: &[Vec<i128>]) -> IMat {
    let mut joint: IMat = a.to_vec();
    joint.extend(b.iter().map(|c| c.iter().map(|v| -v).collect::<Vec<_>>()));
    let (basis, w) = column_echelon(&joint);
    let rank = basis.len();
    w[rank..]
        .iter()
        .map(|kernel| {
            let rows = a[0].len();
            (0..rows)
                .map(|i| a.iter().zip(kernel).map(|(col, y)| col[i] * y).sum())
                .collect()
        })
        .collect()
}

/// Basis of `span_Z(a) + span_Z(b)`.
pub fn sum(a: &[Vec<i128>], b: &[Vec<i128>]) -> IMat {
    let mut joint: IMat = a.to_vec();
    joint.extend(b.iter().cloned());
    column_echelon(&joint).0
}
