use super::similarity::SimilarityMap;
use super::system::{AxisBox, IfsSystem};
use crate::error::{invalid, Result};
use crate::linalg;

pub const PRESET_NAMES: &[&str] =
    &["cantor3", "cantor3x3", "sierpinski3", "carpet3", "interval2", "homog(rho,alpha_rad,k_maps)"];

/// Builds a named preset. `homog(rho, alpha, k)` places `k` maps `ρ R_α x + b_i` with
/// `b_i = (1−ρ)(cos 2πi/k, sin 2πi/k)`, so the attractor lies in the closed unit disc.
pub fn preset(name: &str) -> Result<IfsSystem> {
    let name = name.trim();
    match name {
        "cantor3" => cantor3(),
        "cantor3x3" => cantor3x3(),
        "sierpinski3" => sierpinski3(),
        "carpet3" => carpet3(),
        "interval2" => interval2(),
        _ if name.starts_with("homog(") && name.ends_with(')') => {
            let args: Vec<&str> = name[6..name.len() - 1].split(',').map(str::trim).collect();
            if args.len() != 3 {
                return Err(invalid("homog expects three arguments: homog(rho, alpha_rad, k_maps)"));
            }
            let rho: f64 = args[0].parse().map_err(|_| invalid("homog: bad rho"))?;
            let alpha: f64 = args[1].parse().map_err(|_| invalid("homog: bad alpha_rad"))?;
            let k: usize = args[2].parse().map_err(|_| invalid("homog: bad k_maps"))?;
            homog(rho, alpha, k)
        }
        _ => Err(invalid(format!(
            "unknown preset '{name}'; available: {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}

fn one_dim(ratio: f64, shifts: &[f64]) -> Result<Vec<SimilarityMap>> {
    shifts.iter().map(|&b| SimilarityMap::new(ratio, vec![1.0], vec![b])).collect()
}

pub fn cantor3() -> Result<IfsSystem> {
    let maps = one_dim(1.0 / 3.0, &[0.0, 2.0 / 3.0])?;
    IfsSystem::new(maps, Some(AxisBox::new(vec![0.0], vec![1.0])?))
}

pub fn interval2() -> Result<IfsSystem> {
    let maps = one_dim(0.5, &[0.0, 0.5])?;
    IfsSystem::new(maps, Some(AxisBox::new(vec![0.0], vec![1.0])?))
}

fn grid_maps(ratio: f64, digits: &[[f64; 2]]) -> Result<Vec<SimilarityMap>> {
    digits
        .iter()
        .map(|v| SimilarityMap::new(ratio, linalg::identity(2), vec![v[0] * ratio, v[1] * ratio]))
        .collect()
}

/// Maps `(x + v)/3` for `v ∈ {0,2}²`, ordered lexicographically in `v`.
pub fn cantor3x3() -> Result<IfsSystem> {
    let maps = grid_maps(1.0 / 3.0, &[[0.0, 0.0], [0.0, 2.0], [2.0, 0.0], [2.0, 2.0]])?;
    IfsSystem::new(maps, Some(AxisBox::new(vec![0.0, 0.0], vec![1.0, 1.0])?))
}

pub fn carpet3() -> Result<IfsSystem> {
    let mut digits = Vec::new();
    for a in 0..3 {
        for b in 0..3 {
            if a != 1 || b != 1 {
                digits.push([a as f64, b as f64]);
            }
        }
    }
    let maps = grid_maps(1.0 / 3.0, &digits)?;
    IfsSystem::new(maps, Some(AxisBox::new(vec![0.0, 0.0], vec![1.0, 1.0])?))
}

pub fn sierpinski3() -> Result<IfsSystem> {
    let h = 3f64.sqrt() / 2.0;
    let shifts = [[0.0, 0.0], [0.5, 0.0], [0.25, 0.5 * h]];
    let maps = shifts
        .iter()
        .map(|b| SimilarityMap::new(0.5, linalg::identity(2), b.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    IfsSystem::new(maps, Some(AxisBox::new(vec![0.0, 0.0], vec![1.0, h])?))
}

pub fn homog(rho: f64, alpha: f64, k: usize) -> Result<IfsSystem> {
    if k < 2 {
        return Err(invalid("homog needs at least two maps"));
    }
    let maps = (0..k)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
            SimilarityMap::planar(rho, alpha, [(1.0 - rho) * t.cos(), (1.0 - rho) * t.sin()])
        })
        .collect::<Result<Vec<_>>>()?;
    IfsSystem::new(maps, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_dimensions() {
        let l2 = 2f64.ln();
        let l3 = 3f64.ln();
        assert!((preset("cantor3").unwrap().sim_dim() - l2 / l3).abs() < 1e-12);
        assert!((preset("cantor3x3").unwrap().sim_dim() - 2.0 * l2 / l3).abs() < 1e-12);
        assert!((preset("sierpinski3").unwrap().sim_dim() - l3 / l2).abs() < 1e-12);
        assert!((preset("carpet3").unwrap().sim_dim() - 8f64.ln() / l3).abs() < 1e-12);
    }

    #[test]
    fn homog_parses_and_is_homogeneous() {
        let f = preset("homog(0.3, 1.0, 6)").unwrap();
        let (rho, angle) = f.homogeneous_params().unwrap();
        assert_eq!(rho, 0.3);
        assert!((angle.unwrap() - 1.0).abs() < 1e-14);
        assert!(f.norm_bound() <= 1.0 + 1e-6);
    }

    #[test]
    fn unknown_preset_lists_choices() {
        let e = preset("koch").unwrap_err().to_string();
        assert!(e.contains("cantor3x3") && e.contains("sierpinski3"));
    }
}
