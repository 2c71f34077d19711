//! Exact rational arithmetic for axis-aligned IFS (rotations by quarter turns).

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::system::Word;
use crate::error::{invalid, Error, Result};

type Q = BigRational;

fn q(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

/// `x ↦ ratio · P x + translation` with `P` a signed permutation matrix of determinant 1.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactMap {
    ratio: Q,
    /// Row `i` of `P` has entry `sign[i]` in column `col[i]`.
    col: Vec<usize>,
    sign: Vec<i8>,
    translation: Vec<Q>,
}

impl ExactMap {
    /// `entries` is the row-major rotation with values in {-1, 0, 1}.
    pub fn new(ratio: Q, entries: Vec<i8>, translation: Vec<Q>) -> Result<Self> {
        let d = translation.len();
        if entries.len() != d * d {
            return Err(invalid("rotation size mismatch"));
        }
        if !(ratio > Q::zero() && ratio < Q::one()) {
            return Err(invalid("ratio must lie in (0,1)"));
        }
        let mut col = Vec::with_capacity(d);
        let mut sign = Vec::with_capacity(d);
        for i in 0..d {
            let row = &entries[i * d..(i + 1) * d];
            let nz: Vec<usize> = (0..d).filter(|&j| row[j] != 0).collect();
            if nz.len() != 1 {
                return Err(invalid("rotation must be a signed permutation"));
            }
            col.push(nz[0]);
            sign.push(row[nz[0]]);
        }
        let mut seen = col.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != d {
            return Err(invalid("rotation must be a signed permutation"));
        }
        let inversions = (0..d)
            .flat_map(|i| (i + 1..d).map(move |j| (i, j)))
            .filter(|&(i, j)| col[i] > col[j])
            .count();
        let neg = sign.iter().filter(|&&s| s < 0).count();
        if (inversions + neg) % 2 == 1 {
            return Err(invalid("rotation has determinant -1; orientation must be preserved"));
        }
        Ok(Self { ratio, col, sign, translation })
    }

    pub fn apply(&self, x: &[Q]) -> Vec<Q> {
        (0..x.len())
            .map(|i| {
                let v = if self.sign[i] > 0 { x[self.col[i]].clone() } else { -x[self.col[i]].clone() };
                &self.ratio * v + &self.translation[i]
            })
            .collect()
    }

    pub fn apply_inverse(&self, y: &[Q]) -> Vec<Q> {
        let mut x = vec![Q::zero(); y.len()];
        for i in 0..y.len() {
            let v = (&y[i] - &self.translation[i]) / &self.ratio;
            x[self.col[i]] = if self.sign[i] > 0 { v } else { -v };
        }
        x
    }

    fn image_box(&self, lo: &[Q], hi: &[Q]) -> (Vec<Q>, Vec<Q>) {
        let a = self.apply(lo);
        let b = self.apply(hi);
        let nlo = a.iter().zip(&b).map(|(u, v)| u.clone().min(v.clone())).collect();
        let nhi = a.into_iter().zip(b).map(|(u, v)| u.max(v)).collect();
        (nlo, nhi)
    }
}

/// Exact companion of [`super::IfsSystem`] using a closed witness box as enclosure.
#[derive(Clone, Debug)]
pub struct ExactIfs {
    maps: Vec<ExactMap>,
    lo: Vec<Q>,
    hi: Vec<Q>,
}

impl ExactIfs {
    /// The box must satisfy the open set condition; checked exactly.
    pub fn new(maps: Vec<ExactMap>, lo: Vec<Q>, hi: Vec<Q>) -> Result<Self> {
        if maps.is_empty() || lo.len() != hi.len() {
            return Err(invalid("exact IFS needs maps and a box of matching dimension"));
        }
        let s = Self { maps, lo, hi };
        s.check_osc()?;
        Ok(s)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let id = |d: usize| -> Vec<i8> {
            (0..d * d).map(|k| if k % (d + 1) == 0 { 1 } else { 0 }).collect()
        };
        let grid = |digits: &[(i64, i64)]| -> Result<Vec<ExactMap>> {
            digits
                .iter()
                .map(|&(a, b)| ExactMap::new(q(1, 3), id(2), vec![q(a, 3), q(b, 3)]))
                .collect()
        };
        let unit = |d: usize| (vec![Q::zero(); d], vec![Q::one(); d]);
        match name.trim() {
            "cantor3" => {
                let maps = vec![
                    ExactMap::new(q(1, 3), id(1), vec![q(0, 1)])?,
                    ExactMap::new(q(1, 3), id(1), vec![q(2, 3)])?,
                ];
                let (lo, hi) = unit(1);
                Self::new(maps, lo, hi)
            }
            "interval2" => {
                let maps = vec![
                    ExactMap::new(q(1, 2), id(1), vec![q(0, 1)])?,
                    ExactMap::new(q(1, 2), id(1), vec![q(1, 2)])?,
                ];
                let (lo, hi) = unit(1);
                Self::new(maps, lo, hi)
            }
            "cantor3x3" => {
                let (lo, hi) = unit(2);
                Self::new(grid(&[(0, 0), (0, 2), (2, 0), (2, 2)])?, lo, hi)
            }
            "carpet3" => {
                let digits: Vec<(i64, i64)> = (0..3)
                    .flat_map(|a| (0..3).map(move |b| (a, b)))
                    .filter(|&p| p != (1, 1))
                    .collect();
                let (lo, hi) = unit(2);
                Self::new(grid(&digits)?, lo, hi)
            }
            other => Err(Error::NotApplicable(format!("no exact-rational form for preset '{other}'"))),
        }
    }

    pub fn maps(&self) -> &[ExactMap] {
        &self.maps
    }

    fn in_box(&self, x: &[Q]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| v >= a && v <= b)
    }

    fn check_osc(&self) -> Result<()> {
        let images: Vec<(Vec<Q>, Vec<Q>)> =
            self.maps.iter().map(|m| m.image_box(&self.lo, &self.hi)).collect();
        for (i, (lo, hi)) in images.iter().enumerate() {
            if !self.in_box(lo) || !self.in_box(hi) {
                return Err(invalid(format!("osc_box: image under map {i} leaves the box")));
            }
            for (j, (lo2, hi2)) in images.iter().enumerate().skip(i + 1) {
                let disjoint = (0..lo.len()).any(|k| hi[k] <= lo2[k] || hi2[k] <= lo[k]);
                if !disjoint {
                    return Err(invalid(format!("osc_box: images of maps {i} and {j} overlap")));
                }
            }
        }
        Ok(())
    }

    /// Exact version of [`super::IfsSystem::assign_word`] with the witness box as enclosure.
    pub fn assign_word(&self, x: &[Q], n: usize) -> Result<Word> {
        if x.len() != self.lo.len() {
            return Err(invalid("point dimension mismatch"));
        }
        let mut w = Word::default();
        if self.descend(x, n, &mut w) {
            Ok(w)
        } else {
            Err(Error::OutsideAttractor)
        }
    }

    fn descend(&self, y: &[Q], remaining: usize, w: &mut Word) -> bool {
        if !self.in_box(y) {
            return false;
        }
        if remaining == 0 {
            return true;
        }
        for i in (0..self.maps.len()).rev() {
            let z = self.maps[i].apply_inverse(y);
            w.push(i as u8);
            if self.descend(&z, remaining - 1, w) {
                return true;
            }
            w.0.pop();
        }
        false
    }

    /// Exact image of the last map's fixed point under `h_ω`.
    pub fn code_point(&self, word: &Word) -> Result<Vec<Q>> {
        let &last = word.0.last().ok_or_else(|| invalid("code_point needs a non-empty word"))?;
        let m = self
            .maps
            .get(last as usize)
            .ok_or_else(|| invalid("symbol out of range"))?;
        let mut p = self.fixed_point(m);
        for &s in word.0.iter().rev() {
            let h = self.maps.get(s as usize).ok_or_else(|| invalid("symbol out of range"))?;
            p = h.apply(&p);
        }
        Ok(p)
    }

    /// Fixed point by exact iteration over the finite orbit of the signed permutation.
    fn fixed_point(&self, m: &ExactMap) -> Vec<Q> {
        // x = h(x) ⇔ x = h^k(x) with h^k having P^k = I for some k ≤ 2d; solve the diagonal system.
        let d = self.lo.len();
        let mut power = m.clone();
        loop {
            let is_id = (0..d).all(|i| power.col[i] == i && power.sign[i] > 0);
            if is_id {
                return power
                    .translation
                    .iter()
                    .map(|b| b / (Q::one() - &power.ratio))
                    .collect();
            }
            power = compose(&power, m);
        }
    }
}

fn compose(outer: &ExactMap, inner: &ExactMap) -> ExactMap {
    let d = outer.col.len();
    let mut col = vec![0; d];
    let mut sign = vec![0i8; d];
    for i in 0..d {
        col[i] = inner.col[outer.col[i]];
        sign[i] = outer.sign[i] * inner.sign[outer.col[i]];
    }
    ExactMap {
        ratio: &outer.ratio * &inner.ratio,
        col,
        sign,
        translation: outer.apply(&inner.translation),
    }
}

impl ExactMap {
    pub fn ratio(&self) -> &Q {
        &self.ratio
    }
}
