use std::fmt;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::similarity::SimilarityMap;
use crate::error::{invalid, Error, Result};
use crate::linalg;

/// Geometric tolerance for enclosure membership, relative to the cylinder scale.
pub const TOL_GEOM: f64 = 1e-9;

/// Finite symbol sequence; the derived `Ord` is lexicographic on the symbol indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Word(pub Vec<u8>);

impl Word {
    pub fn new(symbols: Vec<u8>) -> Self {
        Word(symbols)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn prefix(&self, n: usize) -> Word {
        Word(self.0[..n].to_vec())
    }

    /// `σ^m ω`.
    pub fn shift(&self, m: usize) -> Word {
        Word(self.0[m..].to_vec())
    }

    pub fn push(&mut self, symbol: u8) {
        self.0.push(symbol);
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|&s| s < 10) {
            for s in &self.0 {
                write!(f, "{s}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
            write!(f, "{}", parts.join("."))
        }
    }
}

/// Closed axis-aligned box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| !(a <= b)) {
            return Err(invalid("box corners must satisfy lo <= hi componentwise"));
        }
        Ok(Self { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn half_widths(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (b - a)).collect()
    }

    pub fn diagonal(&self) -> f64 {
        let d: Vec<f64> = self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).collect();
        linalg::norm(&d)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *v >= a - tol && *v <= b + tol)
    }

    pub fn corners(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..1usize << d)
            .map(|mask| {
                (0..d)
                    .map(|i| if mask >> i & 1 == 1 { self.hi[i] } else { self.lo[i] })
                    .collect()
            })
            .collect()
    }

    /// Bounding box of `h(self)`.
    pub fn image_bbox(&self, h: &SimilarityMap) -> AxisBox {
        let d = self.dim();
        let c = h.apply(&self.center());
        let w = self.half_widths();
        let rot = h.rotation();
        let hw: Vec<f64> = (0..d)
            .map(|i| h.ratio() * (0..d).map(|j| rot[i * d + j].abs() * w[j]).sum::<f64>())
            .collect();
        AxisBox {
            lo: c.iter().zip(&hw).map(|(a, b)| a - b).collect(),
            hi: c.iter().zip(&hw).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn hull(&self, other: &AxisBox) -> AxisBox {
        AxisBox {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| a.min(*b)).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| a.max(*b)).collect(),
        }
    }

    pub fn intersect(&self, other: &AxisBox) -> AxisBox {
        AxisBox {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect(),
        }
    }

    /// Whether the open interiors are disjoint.
    pub fn interiors_disjoint(&self, other: &AxisBox) -> bool {
        (0..self.dim()).any(|i| self.hi[i] <= other.lo[i] || other.hi[i] <= self.lo[i])
    }

    fn max_abs_diff(&self, other: &AxisBox) -> f64 {
        self.lo
            .iter()
            .zip(&other.lo)
            .chain(self.hi.iter().zip(&other.hi))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Composed map data for one cylinder `K_ω = h_ω(K)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CylinderInfo {
    pub word: Word,
    pub map: SimilarityMap,
    pub diameter: f64,
    pub mass: f64,
}

/// A finite family of contracting similarities with its derived metadata.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IfsSystem {
    dim: usize,
    maps: Vec<SimilarityMap>,
    sim_dim: f64,
    diam_k: f64,
    norm_bound: f64,
    enclosure: AxisBox,
    osc_witness: Option<AxisBox>,
    probs: Vec<f64>,
}

/// Solves `Σ ratio_i^s = 1` by bisection.
pub fn similarity_dimension(maps: &[SimilarityMap]) -> Result<f64> {
    if maps.is_empty() {
        return Err(invalid("empty map list"));
    }
    let d = maps[0].dim();
    let f = |s: f64| maps.iter().map(|m| m.ratio().powf(s)).sum::<f64>() - 1.0;
    let mut lo = 0.0;
    let mut hi = (d + 1) as f64;
    if f(lo) <= 0.0 {
        return Ok(0.0);
    }
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if f(lo).abs() <= f(hi).abs() { lo } else { hi })
}

impl IfsSystem {
    pub fn new(maps: Vec<SimilarityMap>, osc_witness: Option<AxisBox>) -> Result<Self> {
        if maps.is_empty() {
            return Err(invalid("empty map list"));
        }
        if maps.len() > u8::MAX as usize {
            return Err(invalid("at most 255 maps are supported"));
        }
        let dim = maps[0].dim();
        if maps.iter().any(|m| m.dim() != dim) {
            return Err(invalid("all maps must act on the same dimension"));
        }
        let sim_dim = similarity_dimension(&maps)?;
        let probs: Vec<f64> = maps.iter().map(|m| m.ratio().powf(sim_dim)).collect();
        let (enclosure, center, radius) = attractor_enclosure(&maps);
        let diam_k = enclosure.diagonal().min(2.0 * radius);
        let norm_bound = enclosure
            .corners()
            .iter()
            .map(|c| linalg::norm(c))
            .fold(0.0, f64::max)
            .min(linalg::norm(&center) + radius);
        if let Some(w) = &osc_witness {
            check_osc(&maps, w)?;
        }
        Ok(Self { dim, maps, sim_dim, diam_k, norm_bound, enclosure, osc_witness, probs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn maps(&self) -> &[SimilarityMap] {
        &self.maps
    }

    pub fn num_maps(&self) -> usize {
        self.maps.len()
    }

    pub fn sim_dim(&self) -> f64 {
        self.sim_dim
    }

    pub fn diam_k(&self) -> f64 {
        self.diam_k
    }

    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    pub fn enclosure(&self) -> &AxisBox {
        &self.enclosure
    }

    pub fn osc_witness(&self) -> Option<&AxisBox> {
        self.osc_witness.as_ref()
    }

    /// Canonical probabilities `ρ_i^s`.
    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.maps.iter().map(|m| m.ratio()).collect()
    }

    pub fn min_ratio(&self) -> f64 {
        self.ratios().into_iter().fold(1.0, f64::min)
    }

    pub fn max_ratio(&self) -> f64 {
        self.ratios().into_iter().fold(0.0, f64::max)
    }

    /// `Σ_i ρ_i^{s+t}`, the one-step moment `∫ ρ(x,1)^t dμ`.
    pub fn moment(&self, t: f64) -> f64 {
        self.maps.iter().map(|m| m.ratio().powf(self.sim_dim + t)).sum()
    }

    /// `(ρ, angle)` when every map shares one ratio and (in the plane) one rotation.
    pub fn homogeneous_params(&self) -> Option<(f64, Option<f64>)> {
        let r0 = self.maps[0].ratio();
        let rot0 = self.maps[0].rotation();
        let same = self.maps.iter().all(|m| {
            (m.ratio() - r0).abs() < 1e-15
                && m.rotation().iter().zip(rot0).all(|(a, b)| (a - b).abs() < 1e-15)
        });
        same.then(|| (r0, self.maps[0].angle()))
    }

    fn check_word(&self, word: &Word) -> Result<()> {
        match word.0.iter().find(|&&s| s as usize >= self.maps.len()) {
            Some(s) => Err(invalid(format!("symbol {s} out of range for {} maps", self.maps.len()))),
            None => Ok(()),
        }
    }

    /// `h_ω = h_{ω_1} ∘ … ∘ h_{ω_k}`; the empty word gives the identity.
    pub fn compose_word(&self, word: &Word) -> Result<SimilarityMap> {
        self.check_word(word)?;
        let mut h = SimilarityMap::identity(self.dim);
        for &s in &word.0 {
            h = h.compose(&self.maps[s as usize]);
        }
        Ok(h)
    }

    /// `ρ(ω, n) = Π_{k ≤ n} ρ_{ω_k}`.
    pub fn rho_cocycle(&self, word: &Word, n: usize) -> Result<f64> {
        self.check_word(word)?;
        if n > word.len() {
            return Err(invalid(format!("n = {n} exceeds word length {}", word.len())));
        }
        Ok(word.0[..n].iter().map(|&s| self.maps[s as usize].ratio()).product())
    }

    pub fn cylinder(&self, word: &Word) -> Result<CylinderInfo> {
        let map = self.compose_word(word)?;
        let rho = self.rho_cocycle(word, word.len())?;
        Ok(CylinderInfo {
            word: word.clone(),
            diameter: self.diam_k * rho,
            mass: rho.powf(self.sim_dim),
            map,
        })
    }

    /// Image under `h_ω` of the fixed point of the last symbol's map.
    pub fn code_point(&self, word: &Word) -> Result<Vec<f64>> {
        let last = *word.0.last().ok_or_else(|| invalid("code_point needs a non-empty word"))?;
        self.check_word(word)?;
        let anchor = self.maps[last as usize].fixed_point();
        Ok(word.0.iter().rev().fold(anchor, |x, &s| self.maps[s as usize].apply(&x)))
    }

    /// i.i.d. words of the given depth with symbols drawn from `ρ_i^s`.
    pub fn sample_words(&self, seed: u64, depth: usize, count: usize) -> Vec<Word> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_words_with(&mut rng, depth, count)
    }

    pub fn sample_words_with(&self, rng: &mut ChaCha8Rng, depth: usize, count: usize) -> Vec<Word> {
        let dist = WeightedIndex::new(&self.probs).expect("probabilities are positive");
        (0..count)
            .map(|_| Word((0..depth).map(|_| dist.sample(rng) as u8).collect()))
            .collect()
    }

    /// Samples of `μ` truncated at `depth`.
    pub fn sample_measure(&self, seed: u64, depth: usize, count: usize) -> Result<Vec<Vec<f64>>> {
        if depth == 0 || count == 0 {
            return Err(invalid("depth and count must be at least 1"));
        }
        self.sample_words(seed, depth, count)
            .iter()
            .map(|w| self.code_point(w))
            .collect()
    }

    /// All words of length `n` in lexicographic order.
    pub fn words(&self, n: usize) -> Vec<Word> {
        let m = self.maps.len();
        let total = m.pow(n as u32);
        (0..total)
            .map(|mut idx| {
                let mut sym = vec![0u8; n];
                for k in (0..n).rev() {
                    sym[k] = (idx % m) as u8;
                    idx /= m;
                }
                Word(sym)
            })
            .collect()
    }

    /// The word `ω ∈ Λ^n` whose disjointified cylinder holds `x`: the lexicographically greatest
    /// depth-`n` word whose enclosure contains `x`.
    pub fn assign_word(&self, x: &[f64], n: usize) -> Result<Word> {
        if x.len() != self.dim {
            return Err(invalid("point dimension mismatch"));
        }
        let mut word = Word::default();
        let roundoff = 8.0 * f64::EPSILON * (1.0 + self.norm_bound);
        if self.descend(x, 1.0, n, roundoff, &mut word) {
            Ok(word)
        } else {
            Err(Error::OutsideAttractor)
        }
    }

    fn descend(&self, y: &[f64], rho: f64, remaining: usize, roundoff: f64, word: &mut Word) -> bool {
        let depth = word.len() as f64;
        let tol = TOL_GEOM * self.diam_k.max(1.0) + roundoff * (depth + 1.0) / rho;
        if !self.enclosure.contains(y, tol) {
            return false;
        }
        if remaining == 0 {
            return true;
        }
        for i in (0..self.maps.len()).rev() {
            let h = &self.maps[i];
            let z = h.apply_inverse(y);
            word.push(i as u8);
            if self.descend(&z, rho * h.ratio(), remaining - 1, roundoff, word) {
                return true;
            }
            word.0.pop();
        }
        false
    }

    /// `{ω : ρ_ω ≤ eps < ρ_parent(ω)}` in lexicographic order.
    pub fn complete_prefix_set(&self, eps: f64) -> Result<Vec<Word>> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(invalid(format!("eps = {eps} must lie in (0,1)")));
        }
        let mut out = Vec::new();
        let mut stack = vec![(Word::default(), 1.0)];
        while let Some((w, rho)) = stack.pop() {
            if rho <= eps {
                out.push(w);
                continue;
            }
            for i in (0..self.maps.len()).rev() {
                let mut c = w.clone();
                c.push(i as u8);
                stack.push((c, rho * self.maps[i].ratio()));
            }
        }
        Ok(out)
    }
}

/// Outer box for the attractor: a bounding ball first, then box-map iteration intersected
/// with that ball's box until stable. Every iterate contains `K`. Returns the box and the ball.
fn attractor_enclosure(maps: &[SimilarityMap]) -> (AxisBox, Vec<f64>, f64) {
    let d = maps[0].dim();
    let fixed: Vec<Vec<f64>> = maps.iter().map(|m| m.fixed_point()).collect();
    let c: Vec<f64> = (0..d)
        .map(|i| fixed.iter().map(|p| p[i]).sum::<f64>() / fixed.len() as f64)
        .collect();
    let mut r = 0.0f64;
    for _ in 0..10_000 {
        let next = maps
            .iter()
            .map(|m| {
                let hc = m.apply(&c);
                let off: Vec<f64> = hc.iter().zip(&c).map(|(a, b)| a - b).collect();
                linalg::norm(&off) + m.ratio() * r
            })
            .fold(0.0, f64::max);
        if (next - r).abs() <= 1e-15 * (1.0 + r) {
            r = next;
            break;
        }
        r = next;
    }
    let ball_box = AxisBox {
        lo: c.iter().map(|v| v - r).collect(),
        hi: c.iter().map(|v| v + r).collect(),
    };
    let mut b = ball_box.clone();
    for _ in 0..2_000 {
        let img = maps
            .iter()
            .map(|m| b.image_bbox(m))
            .reduce(|a, x| a.hull(&x))
            .expect("non-empty")
            .intersect(&ball_box);
        let change = img.max_abs_diff(&b);
        b = img;
        if change < 1e-12 {
            break;
        }
    }
    (b, c, r)
}

fn check_osc(maps: &[SimilarityMap], w: &AxisBox) -> Result<()> {
    if w.dim() != maps[0].dim() {
        return Err(invalid("osc_box dimension mismatch"));
    }
    let images: Vec<AxisBox> = maps.iter().map(|m| w.image_bbox(m)).collect();
    for (i, im) in images.iter().enumerate() {
        if !w.contains(&im.lo, TOL_GEOM) || !w.contains(&im.hi, TOL_GEOM) {
            return Err(invalid(format!("osc_box: image under map {i} leaves the box")));
        }
        for (j, other) in images.iter().enumerate().skip(i + 1) {
            if !im.interiors_disjoint(other) {
                return Err(invalid(format!("osc_box: images of maps {i} and {j} overlap")));
            }
        }
    }
    Ok(())
}
