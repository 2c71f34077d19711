//! Decay exponents of the mass of neighbourhoods of affine subspaces, Frostman exponents of
//! projections, and the resulting dimension bound.

mod bound;
mod cloud;
mod rotation;
mod window;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bound::{dimension_bound, small_codim_bound, DimensionBound};
pub use cloud::CylinderCloud;
pub use rotation::{rotation_cocycle_bound, RotationCocycle};

use crate::error::{invalid, Error, Result};
use crate::ifs::IfsSystem;
use crate::linalg;

/// Affine subspace of codimension `ℓ`, given by orthonormal normals and a point on it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineSubspace {
    normals: Vec<Vec<f64>>,
    offset: Vec<f64>,
}

impl AffineSubspace {
    /// Normals must be orthonormal within 1e-10.
    pub fn new(normals: Vec<Vec<f64>>, offset: Vec<f64>) -> Result<Self> {
        let d = offset.len();
        if normals.is_empty() || normals.len() > d || normals.iter().any(|n| n.len() != d) {
            return Err(invalid("need 1..=d normals of length d"));
        }
        for (i, a) in normals.iter().enumerate() {
            for (j, b) in normals.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                if (linalg::dot(a, b) - target).abs() > 1e-10 {
                    return Err(invalid("normals are not orthonormal"));
                }
            }
        }
        Ok(Self { normals, offset })
    }

    /// Orthonormalises the given (independent) normals first.
    pub fn from_normals(normals: &[Vec<f64>], offset: Vec<f64>) -> Result<Self> {
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for n in normals {
            let mut v = n.clone();
            for b in &basis {
                let c = linalg::dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
            let len = linalg::norm(&v);
            if len < 1e-12 {
                return Err(invalid("normals are linearly dependent"));
            }
            basis.push(v.iter().map(|x| x / len).collect());
        }
        Self::new(basis, offset)
    }

    pub fn ambient_dim(&self) -> usize {
        self.offset.len()
    }

    pub fn codim(&self) -> usize {
        self.normals.len()
    }

    pub fn normals(&self) -> &[Vec<f64>] {
        &self.normals
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    /// `‖N (x − offset)‖`.
    pub fn distance(&self, x: &[f64]) -> f64 {
        let diff: Vec<f64> = x.iter().zip(&self.offset).map(|(a, b)| a - b).collect();
        self.normals.iter().map(|n| linalg::dot(n, &diff).powi(2)).sum::<f64>().sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassBracket {
    pub lower: f64,
    pub upper: f64,
}

impl MassBracket {
    pub fn contains(&self, m: f64) -> bool {
        self.lower <= m && m <= self.upper
    }
}

/// Default cylinder cap for one cloud.
pub const DEFAULT_MAX_CYLINDERS: usize = 1 << 22;

/// `lower ≤ μ(L^{(ε)}) ≤ upper` from the cylinders of the complete prefix set at `depth_eps`.
pub fn line_mass(ifs: &IfsSystem, subspace: &AffineSubspace, eps: f64, depth_eps: f64) -> Result<MassBracket> {
    if !(eps > 0.0 && depth_eps > 0.0 && depth_eps <= eps) {
        return Err(invalid("need 0 < depth_eps ≤ eps"));
    }
    if subspace.ambient_dim() != ifs.dim() {
        return Err(invalid("subspace dimension mismatch"));
    }
    let cloud = CylinderCloud::new(ifs, depth_eps, DEFAULT_MAX_CYLINDERS)?;
    Ok(line_mass_in(&cloud, subspace, eps))
}

/// [`line_mass`] on a prebuilt cloud.
pub fn line_mass_in(cloud: &CylinderCloud, subspace: &AffineSubspace, eps: f64) -> MassBracket {
    let r = cloud.reach();
    let (mut lower, mut upper) = (0.0, 0.0);
    for (k, m) in cloud.masses().iter().enumerate() {
        let dist = subspace.distance(cloud.center(k));
        if dist + r < eps {
            lower += m;
        }
        if dist - r < eps {
            upper += m;
        }
    }
    // Relative slack covers rounding in the mass sums.
    MassBracket { lower: lower.min(1.0), upper: (upper * (1.0 + 1e-12)).min(1.0) }
}

/// Resolution and size limits for the subspace search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    /// Grid size on the space of directions.
    pub directions: usize,
    /// Cylinder resolution as a fraction of `ε`.
    pub resolution: f64,
    pub max_cylinders: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self { directions: 720, resolution: 1.0 / 3.0, max_cylinders: DEFAULT_MAX_CYLINDERS }
    }
}

/// Best bracket found by [`sup_line_mass`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupLineMass {
    pub ell: usize,
    pub eps: f64,
    /// Mass of a neighbourhood certified to lie below the supremum.
    pub lower: f64,
    /// Upper bracket maximised over the direction grid.
    pub upper: f64,
    /// Upper bound valid for every subspace, off-grid directions included (planar lines only).
    pub upper_certified: Option<f64>,
    pub normals: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
    pub cylinders: usize,
    pub directions: usize,
}

/// Supremum over codimension-`ℓ` affine subspaces of the `ε`-neighbourhood mass.
pub fn sup_line_mass(ifs: &IfsSystem, ell: usize, eps: f64, search: &SearchBudget) -> Result<SupLineMass> {
    check_level(ifs.dim(), ell)?;
    if !(eps > 0.0) {
        return Err(invalid("eps must be positive"));
    }
    let cloud = CylinderCloud::new(ifs, eps * search.resolution, search.max_cylinders)?;
    sup_line_mass_in(&cloud, ifs, ell, eps, search)
}

/// [`sup_line_mass`] on a prebuilt cloud.
pub fn sup_line_mass_in(
    cloud: &CylinderCloud,
    ifs: &IfsSystem,
    ell: usize,
    eps: f64,
    search: &SearchBudget,
) -> Result<SupLineMass> {
    let d = ifs.dim();
    check_level(d, ell)?;
    let (frames, gap) = direction_frames(ifs, ell, search.directions)?;
    let extra = gap.map_or(0.0, |g| 2.0 * cloud.root_reach() * g);
    let results: Vec<window::WindowResult> = frames
        .par_iter()
        .map(|frame| window::windows(&cloud.project(frame), ell, cloud.masses(), eps, cloud.reach(), extra))
        .collect();
    let mut best = 0;
    for (i, r) in results.iter().enumerate() {
        if r.upper > results[best].upper {
            best = i;
        }
    }
    let lower = results.iter().map(|r| r.lower).fold(0.0, f64::max);
    let widened = results.iter().map(|r| r.upper_widened).fold(0.0, f64::max);
    Ok(SupLineMass {
        ell,
        eps,
        lower,
        upper: results[best].upper,
        upper_certified: gap.map(|_| widened),
        normals: frames[best].clone(),
        offset: results[best].offset.clone(),
        cylinders: cloud.len(),
        directions: frames.len(),
    })
}

fn check_level(d: usize, ell: usize) -> Result<()> {
    if ell == 0 || ell > d {
        return Err(invalid(format!("level {ell} outside 1..={d}")));
    }
    if d > 3 {
        return Err(invalid("subspace search supports d ≤ 3"));
    }
    Ok(())
}

/// Orthonormal normal frames to search, and (when known) the largest angle between a
/// subspace and the nearest grid frame.
fn direction_frames(ifs: &IfsSystem, ell: usize, grid: usize) -> Result<(Vec<Vec<Vec<f64>>>, Option<f64>)> {
    let d = ifs.dim();
    if ell == d {
        let id = (0..d).map(|i| (0..d).map(|j| (i == j) as u8 as f64).collect()).collect();
        return Ok((vec![id], Some(0.0)));
    }
    let grid = grid.max(1);
    match (d, ell) {
        (2, 1) => {
            let pi = std::f64::consts::PI;
            let mut angles: Vec<f64> = (0..grid).map(|i| pi * i as f64 / grid as f64).collect();
            let mut specials = vec![0.0, pi / 4.0, pi / 2.0, 3.0 * pi / 4.0];
            for m in ifs.maps() {
                if let Some(a) = m.angle() {
                    specials.extend([a, a + pi / 4.0, a + pi / 2.0, a + 3.0 * pi / 4.0]);
                }
            }
            for a in specials {
                let a = a.rem_euclid(pi);
                if !angles.iter().any(|b| (a - b).abs() < 1e-12) {
                    angles.push(a);
                }
            }
            let frames = angles.iter().map(|a| vec![vec![a.cos(), a.sin()]]).collect();
            Ok((frames, Some(pi / (2.0 * grid as f64))))
        }
        (3, 1) => Ok((sphere_directions(grid).into_iter().map(|u| vec![u]).collect(), None)),
        (3, 2) => Ok((sphere_directions(grid).into_iter().map(|u| complement_frame(&u)).collect(), None)),
        _ => Err(invalid("unsupported dimension/level")),
    }
}

/// Fibonacci points on the upper hemisphere plus coordinate axes and face diagonals.
fn sphere_directions(n: usize) -> Vec<Vec<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut out: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let z = 1.0 - (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let t = golden * i as f64;
            vec![r * t.cos(), r * t.sin(), z]
        })
        .collect();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    out.extend([
        vec![1.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0],
        vec![0.0, 0.0, 1.0],
        vec![h, h, 0.0],
        vec![h, -h, 0.0],
        vec![h, 0.0, h],
        vec![h, 0.0, -h],
        vec![0.0, h, h],
        vec![0.0, h, -h],
    ]);
    out
}

fn complement_frame(u: &[f64]) -> Vec<Vec<f64>> {
    let pick = if u[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let c = linalg::dot(&pick, u);
    let mut a: Vec<f64> = pick.iter().zip(u).map(|(p, x)| p - c * x).collect();
    let len = linalg::norm(&a);
    a.iter_mut().for_each(|x| *x /= len);
    let b = vec![u[1] * a[2] - u[2] * a[1], u[2] * a[0] - u[0] * a[2], u[0] * a[1] - u[1] * a[0]];
    vec![a, b]
}

/// Log-log fit of masses against scales.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub eps_ladder: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Least-squares slope of `log upper` against `log ε`.
    pub slope: f64,
    /// Same fit on the lower bracket, when it is positive at every scale.
    pub slope_lower: Option<f64>,
    /// Largest deviation of `log upper` from the fitted line.
    pub residual: f64,
    pub pair_slope_min: f64,
    pub pair_slope_max: f64,
}

impl ScalingFit {
    pub fn from_brackets(eps: &[f64], lower: &[f64], upper: &[f64]) -> Result<Self> {
        if eps.len() < 3 || lower.len() != eps.len() || upper.len() != eps.len() {
            return Err(invalid("a scaling fit needs at least 3 scales"));
        }
        if eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("eps ladder must be strictly decreasing"));
        }
        if upper.iter().any(|&u| !(u > 0.0 && u <= 1.0)) {
            return Err(Error::Inconsistent("upper brackets must lie in (0,1]".into()));
        }
        let x: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
        let y: Vec<f64> = upper.iter().map(|u| u.ln()).collect();
        let slope = linalg::ls_slope(&x, &y);
        let (mx, my) = (mean(&x), mean(&y));
        let residual = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (b - (my + slope * (a - mx))).abs())
            .fold(0.0, f64::max);
        let mut pair_slope_min = f64::INFINITY;
        let mut pair_slope_max = f64::NEG_INFINITY;
        for i in 0..x.len() {
            for j in i + 1..x.len() {
                let s = (y[j] - y[i]) / (x[j] - x[i]);
                pair_slope_min = pair_slope_min.min(s);
                pair_slope_max = pair_slope_max.max(s);
            }
        }
        let slope_lower = lower.iter().all(|&l| l > 0.0).then(|| {
            let yl: Vec<f64> = lower.iter().map(|l| l.ln()).collect();
            linalg::ls_slope(&x, &yl)
        });
        Ok(Self {
            eps_ladder: eps.to_vec(),
            lower: lower.to_vec(),
            upper: upper.to_vec(),
            slope,
            slope_lower,
            residual,
            pair_slope_min,
            pair_slope_max,
        })
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `α_ℓ` estimate: slope of the maximal upper bracket across a geometric ladder whose ratio lies
/// between the smallest and largest contraction ratio.
pub fn alpha_estimate(ifs: &IfsSystem, ell: usize, eps_ladder: &[f64], search: &SearchBudget) -> Result<ScalingFit> {
    if eps_ladder.len() < 3 {
        return Err(invalid("ladder needs at least 3 scales"));
    }
    let (lo, hi) = (ifs.min_ratio(), ifs.max_ratio());
    for w in eps_ladder.windows(2) {
        let r = w[1] / w[0];
        if r < lo * (1.0 - 1e-9) || r > hi * (1.0 + 1e-9) {
            return Err(invalid(format!("ladder ratio {r:.6} outside [{lo:.6}, {hi:.6}]")));
        }
    }
    let (lower, upper) = ladder_brackets(eps_ladder, |eps| {
        sup_line_mass(ifs, ell, eps, search).map(|r| MassBracket { lower: r.lower, upper: r.upper })
    })?;
    ScalingFit::from_brackets(eps_ladder, &lower, &upper)
}

/// Frostman-exponent estimate of the projection of `μ` onto the line spanned by `direction`.
pub fn frostman_projection(
    ifs: &IfsSystem,
    direction: &[f64],
    eps_ladder: &[f64],
    search: &SearchBudget,
) -> Result<ScalingFit> {
    if ifs.dim() != 2 || direction.len() != 2 {
        return Err(invalid("frostman_projection needs d = 2"));
    }
    let len = linalg::norm(direction);
    if !(len > 0.0) {
        return Err(invalid("zero direction"));
    }
    let frame = vec![direction.iter().map(|x| x / len).collect::<Vec<f64>>()];
    let (lower, upper) = ladder_brackets(eps_ladder, |eps| {
        let cloud = CylinderCloud::new(ifs, eps * search.resolution, search.max_cylinders)?;
        let r = window::windows(&cloud.project(&frame), 1, cloud.masses(), eps, cloud.reach(), 0.0);
        Ok(MassBracket { lower: r.lower, upper: r.upper })
    })?;
    ScalingFit::from_brackets(eps_ladder, &lower, &upper)
}

fn ladder_brackets(
    ladder: &[f64],
    mut f: impl FnMut(f64) -> Result<MassBracket>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut lower = Vec::with_capacity(ladder.len());
    let mut upper = Vec::with_capacity(ladder.len());
    for &eps in ladder {
        let b = f(eps)?;
        lower.push(b.lower);
        upper.push(b.upper);
    }
    Ok((lower, upper))
}

/// Slab mass bracket for the single normal `normal` at scale `eps` (used by the rotation cocycle).
pub(crate) fn slab_mass(cloud: &CylinderCloud, normal: &[f64], eps: f64) -> MassBracket {
    let r = window::windows(&cloud.project(&[normal.to_vec()]), 1, cloud.masses(), eps, cloud.reach(), 0.0);
    MassBracket { lower: r.lower, upper: r.upper }
}

#[cfg(test)]
mod tests;
