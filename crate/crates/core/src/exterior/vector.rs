use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Lexicographically ordered `ℓ`-subsets of `{0, …, n−1}`.
pub fn exterior_basis(n: usize, ell: usize) -> Result<Vec<Vec<usize>>> {
    if ell == 0 || ell > n {
        return Err(invalid(format!("level {ell} outside 1..={n}")));
    }
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(ell);
    subsets(n, ell, 0, &mut cur, &mut out);
    Ok(out)
}

fn subsets(n: usize, ell: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == ell {
        out.push(cur.clone());
        return;
    }
    for i in start..n {
        cur.push(i);
        subsets(n, ell, i + 1, cur, out);
        cur.pop();
    }
}

/// Position of a sorted index set in the lexicographic basis.
pub(crate) fn basis_index(n: usize, set: &[usize]) -> usize {
    // Count the sets that precede `set` lexicographically.
    let ell = set.len();
    let mut idx = 0;
    let mut prev = 0;
    for (k, &s) in set.iter().enumerate() {
        for v in prev..s {
            idx += binom(n - v - 1, ell - k - 1);
        }
        prev = s + 1;
    }
    idx
}

pub(crate) fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Element of `∧^ℓ R^n`, `n = d + 1`, in the monomial basis `e_I`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExteriorVector {
    n: usize,
    level: usize,
    coords: Vec<f64>,
}

impl ExteriorVector {
    pub fn new(n: usize, level: usize, coords: Vec<f64>) -> Result<Self> {
        if level == 0 || level > n {
            return Err(invalid(format!("level {level} outside 1..={n}")));
        }
        if coords.len() != binom(n, level) {
            return Err(invalid(format!(
                "expected {} coordinates for level {level} in dimension {n}",
                binom(n, level)
            )));
        }
        Ok(Self { n, level, coords })
    }

    pub fn zero(n: usize, level: usize) -> Self {
        Self { n, level, coords: vec![0.0; binom(n, level)] }
    }

    /// The monomial `e_I`; `set` must be strictly increasing.
    pub fn monomial(n: usize, set: &[usize]) -> Result<Self> {
        if set.windows(2).any(|w| w[0] >= w[1]) || set.iter().any(|&i| i >= n) {
            return Err(invalid("index set must be strictly increasing and in range"));
        }
        let mut v = Self::zero(n, set.len());
        v.coords[basis_index(n, set)] = 1.0;
        Ok(v)
    }

    /// `v_1 ∧ … ∧ v_ℓ` of vectors in `R^n`.
    pub fn wedge_of(vectors: &[Vec<f64>]) -> Result<Self> {
        let first = vectors.first().ok_or_else(|| invalid("need at least one vector"))?;
        let n = first.len();
        if vectors.iter().any(|v| v.len() != n) {
            return Err(invalid("vectors must share a dimension"));
        }
        let mut acc = Self::new(n, 1, first.clone())?;
        for v in &vectors[1..] {
            acc = acc.wedge(&Self::new(n, 1, v.clone())?)?;
        }
        Ok(acc)
    }

    pub fn ambient(&self) -> usize {
        self.n
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    pub fn basis(&self) -> Vec<Vec<usize>> {
        exterior_basis(self.n, self.level).expect("valid level")
    }

    pub fn coord(&self, set: &[usize]) -> f64 {
        self.coords[basis_index(self.n, set)]
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { n: self.n, level: self.level, coords: self.coords.iter().map(|c| c * s).collect() }
    }

    /// Wedge product; zero when the levels add up past `n`.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(invalid("ambient dimension mismatch"));
        }
        let level = self.level + other.level;
        if level > self.n {
            return Err(invalid("wedge exceeds top degree"));
        }
        let mut out = Self::zero(self.n, level);
        let left = self.basis();
        let right = other.basis();
        for (a, ia) in left.iter().enumerate() {
            let ca = self.coords[a];
            if ca == 0.0 {
                continue;
            }
            for (b, ib) in right.iter().enumerate() {
                let cb = other.coords[b];
                if cb == 0.0 || ia.iter().any(|i| ib.contains(i)) {
                    continue;
                }
                let (merged, sign) = merge_sign(ia, ib);
                out.coords[basis_index(self.n, &merged)] += sign * ca * cb;
            }
        }
        Ok(out)
    }
}

/// Sorted union of disjoint sets and the sign of the shuffle permutation.
pub(crate) fn merge_sign(a: &[usize], b: &[usize]) -> (Vec<usize>, f64) {
    let mut inversions = 0;
    for &x in a {
        inversions += b.iter().filter(|&&y| y < x).count();
    }
    let mut merged: Vec<usize> = a.iter().chain(b).cloned().collect();
    merged.sort_unstable();
    (merged, if inversions % 2 == 0 { 1.0 } else { -1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_examples() {
        assert_eq!(exterior_basis(3, 2).unwrap(), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(exterior_basis(4, 1).unwrap(), vec![vec![0], vec![1], vec![2], vec![3]]);
        assert_eq!(exterior_basis(4, 4).unwrap(), vec![vec![0, 1, 2, 3]]);
        assert!(exterior_basis(3, 0).is_err());
        assert!(exterior_basis(3, 4).is_err());
    }

    #[test]
    fn basis_index_matches_enumeration() {
        for n in 1..=5 {
            for ell in 1..=n {
                for (k, set) in exterior_basis(n, ell).unwrap().iter().enumerate() {
                    assert_eq!(basis_index(n, set), k);
                }
            }
        }
    }

    #[test]
    fn wedge_anticommutes_and_kills_dependence() {
        let a = ExteriorVector::new(3, 1, vec![1.0, 2.0, -0.5]).unwrap();
        let b = ExteriorVector::new(3, 1, vec![0.3, -1.0, 4.0]).unwrap();
        let ab = a.wedge(&b).unwrap();
        let ba = b.wedge(&a).unwrap();
        for (x, y) in ab.coords().iter().zip(ba.coords()) {
            assert!((x + y).abs() < 1e-15);
        }
        let c = ExteriorVector::new(3, 1, vec![2.3, 3.0, 3.0]).unwrap(); // 2a + b
        let w = ab.wedge(&c).unwrap();
        assert!(w.norm() < 1e-10 * (1.0 + ab.norm() * c.norm()));
    }

    #[test]
    fn wedge_norm_is_volume() {
        let w = ExteriorVector::wedge_of(&[vec![2.0, 0.0, 0.0], vec![1.0, 3.0, 0.0]]).unwrap();
        assert!((w.norm() - 6.0).abs() < 1e-14);
    }
}
