use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg;

/// A contracting similarity `x ↦ ratio · rotation · x + translation`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMap {
    ratio: f64,
    /// Row-major `dim × dim`.
    rotation: Vec<f64>,
    translation: Vec<f64>,
}

const ORTHO_TOL: f64 = 1e-10;

impl SimilarityMap {
    /// Validates `0 < ratio < 1` and that `rotation` is special orthogonal.
    pub fn new(ratio: f64, rotation: Vec<f64>, translation: Vec<f64>) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(invalid(format!("ratio {ratio} is not in (0,1)")));
        }
        let d = translation.len();
        if d == 0 || rotation.len() != d * d {
            return Err(invalid("rotation must be a square matrix matching the translation length"));
        }
        check_special_orthogonal(&rotation, d)?;
        Ok(Self { ratio, rotation, translation })
    }

    /// Same as [`SimilarityMap::new`] but allows `ratio = 1`, for composed words and the identity.
    pub(crate) fn raw(ratio: f64, rotation: Vec<f64>, translation: Vec<f64>) -> Self {
        Self { ratio, rotation, translation }
    }

    pub fn identity(d: usize) -> Self {
        Self::raw(1.0, linalg::identity(d), vec![0.0; d])
    }

    /// Planar map with a rotation angle in radians.
    pub fn planar(ratio: f64, angle: f64, translation: [f64; 2]) -> Result<Self> {
        Self::new(ratio, linalg::rotation2(angle), translation.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn rotation(&self) -> &[f64] {
        &self.rotation
    }

    pub fn translation(&self) -> &[f64] {
        &self.translation
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let r = linalg::mat_vec(&self.rotation, x);
        r.iter()
            .zip(&self.translation)
            .map(|(a, b)| self.ratio * a + b)
            .collect()
    }

    pub fn apply_inverse(&self, y: &[f64]) -> Vec<f64> {
        let shifted: Vec<f64> = y.iter().zip(&self.translation).map(|(a, b)| a - b).collect();
        linalg::mat_t_vec(&self.rotation, &shifted)
            .into_iter()
            .map(|v| v / self.ratio)
            .collect()
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &SimilarityMap) -> SimilarityMap {
        let d = self.dim();
        SimilarityMap::raw(
            self.ratio * inner.ratio,
            linalg::mat_mul(&self.rotation, &inner.rotation, d),
            self.apply(&inner.translation),
        )
    }

    /// The unique fixed point, solving `(I − ρO) x = b`.
    pub fn fixed_point(&self) -> Vec<f64> {
        let d = self.dim();
        if self.rotation == linalg::identity(d) {
            return self.translation.iter().map(|b| b / (1.0 - self.ratio)).collect();
        }
        let mut m = linalg::to_dmatrix(&self.rotation, d) * (-self.ratio);
        for i in 0..d {
            m[(i, i)] += 1.0;
        }
        let b = nalgebra::DVector::from_column_slice(&self.translation);
        let x = m.lu().solve(&b).expect("I - ρO is invertible for ρ < 1");
        x.iter().cloned().collect()
    }

    /// Rotation angle in radians (planar maps only).
    pub fn angle(&self) -> Option<f64> {
        (self.dim() == 2).then(|| self.rotation[2].atan2(self.rotation[0]))
    }
}

fn check_special_orthogonal(rot: &[f64], d: usize) -> Result<()> {
    let t: Vec<f64> = (0..d * d).map(|k| rot[(k % d) * d + k / d]).collect();
    let p = linalg::mat_mul(&t, rot, d);
    let id = linalg::identity(d);
    if p.iter().zip(&id).any(|(a, b)| (a - b).abs() > ORTHO_TOL) {
        return Err(invalid("rotation is not orthogonal (R^T R != I)"));
    }
    let det = linalg::det(rot, d);
    if (det - 1.0).abs() > ORTHO_TOL {
        return Err(invalid(format!(
            "rotation has determinant {det:.6}; orientation must be preserved (det = +1)"
        )));
    }
    Ok(())
}
