use crate::error::{Error, Result};
use crate::ifs::{IfsSystem, SimilarityMap};

/// Centres and masses of the cylinders of a complete prefix set, with a common bound on how
/// far each cylinder reaches from its centre.
#[derive(Clone, Debug)]
pub struct CylinderCloud {
    dim: usize,
    centers: Vec<f64>,
    masses: Vec<f64>,
    /// `max_ω ρ_ω · r` with `r` the half-diagonal of the attractor enclosure.
    reach: f64,
    /// Half-diagonal of the enclosure, the reach of the root cylinder.
    root_reach: f64,
    resolution: f64,
}

impl CylinderCloud {
    /// Cylinders of `{ω : ρ_ω ≤ resolution < ρ_parent}`; fails past `max_cylinders`.
    pub fn new(ifs: &IfsSystem, resolution: f64, max_cylinders: usize) -> Result<Self> {
        let d = ifs.dim();
        let enclosure = ifs.enclosure();
        let center = enclosure.center();
        let root_reach = enclosure.diagonal() / 2.0;
        let mut centers = Vec::new();
        let mut masses = Vec::new();
        let mut max_rho: f64 = 0.0;
        let s = ifs.sim_dim();
        if resolution >= 1.0 {
            return Ok(Self { dim: d, centers: center, masses: vec![1.0], reach: root_reach, root_reach, resolution });
        }
        let mut stack: Vec<SimilarityMap> = vec![SimilarityMap::identity(d)];
        while let Some(h) = stack.pop() {
            if h.ratio() <= resolution {
                if masses.len() >= max_cylinders {
                    return Err(Error::Precondition(format!(
                        "cylinder budget {max_cylinders} exceeded at resolution {resolution:.3e}"
                    )));
                }
                centers.extend(h.apply(&center));
                masses.push(h.ratio().powf(s));
                max_rho = max_rho.max(h.ratio());
                continue;
            }
            for m in ifs.maps().iter().rev() {
                stack.push(h.compose(m));
            }
        }
        Ok(Self { dim: d, centers, masses, reach: max_rho * root_reach, root_reach, resolution })
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn center(&self, k: usize) -> &[f64] {
        &self.centers[k * self.dim..(k + 1) * self.dim]
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn reach(&self) -> f64 {
        self.reach
    }

    pub fn root_reach(&self) -> f64 {
        self.root_reach
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// Coordinates of every centre along the rows of `frame`, flattened cylinder-major.
    pub(crate) fn project(&self, frame: &[Vec<f64>]) -> Vec<f64> {
        let l = frame.len();
        let mut out = Vec::with_capacity(self.len() * l);
        for k in 0..self.len() {
            let c = self.center(k);
            for row in frame {
                out.push(row.iter().zip(c).map(|(a, b)| a * b).sum());
            }
        }
        debug_assert_eq!(out.len(), self.len() * l);
        out
    }
}
