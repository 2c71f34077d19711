use super::*;
use crate::ifs::preset;

fn cc() -> IfsSystem {
    preset("cantor3x3").unwrap()
}

#[test]
fn subspace_distance_formula() {
    let l = AffineSubspace::from_normals(&[vec![1.0, 1.0, 0.0]], vec![0.0, 0.0, 1.0]).unwrap();
    assert!((l.distance(&[1.0, 1.0, 0.0]) - 2f64.sqrt()).abs() < 1e-14);
    assert!(AffineSubspace::new(vec![vec![1.0, 1.0]], vec![0.0, 0.0]).is_err());
}

#[test]
fn axis_strip_contains_dyadic_mass() {
    let ifs = cc();
    let axis = AffineSubspace::new(vec![vec![0.0, 1.0]], vec![0.0, 0.0]).unwrap();
    for n in 2..=5 {
        let eps = 3f64.powi(-n);
        let b = line_mass(&ifs, &axis, eps, eps / 9.0).unwrap();
        assert!(b.contains(2f64.powi(-n)), "n={n}: {b:?}");
    }
}

#[test]
fn whole_and_empty() {
    let ifs = cc();
    let through = AffineSubspace::new(vec![vec![0.0, 1.0]], vec![0.5, 0.5]).unwrap();
    assert_eq!(line_mass(&ifs, &through, 1.0, 0.01).unwrap(), MassBracket { lower: 1.0, upper: 1.0 });
    let far = AffineSubspace::new(vec![vec![0.0, 1.0]], vec![0.0, 5.0]).unwrap();
    assert_eq!(line_mass(&ifs, &far, 0.1, 0.01).unwrap(), MassBracket { lower: 0.0, upper: 0.0 });
}

#[test]
fn line_sup_brackets_dyadic_mass() {
    let ifs = cc();
    let n = 5;
    let eps = 3f64.powi(-n);
    let r = sup_line_mass(&ifs, 1, eps, &SearchBudget::default()).unwrap();
    let target = 2f64.powi(-n);
    assert!(r.upper >= target && r.lower <= r.upper);
    // Square counting: at most (3/2)·2^n squares meet each of three parallel lines.
    assert!(r.upper <= 3.0 * 1.5 * target * 4.0, "{r:?}");
    assert!(r.upper_certified.unwrap() >= r.upper);
}

#[test]
fn anti_monotone_in_level() {
    let ifs = cc();
    for n in [3, 5] {
        let eps = 3f64.powi(-n);
        let cloud = CylinderCloud::new(&ifs, eps / 3.0, DEFAULT_MAX_CYLINDERS).unwrap();
        let s = SearchBudget::default();
        let a = sup_line_mass_in(&cloud, &ifs, 1, eps, &s).unwrap();
        let b = sup_line_mass_in(&cloud, &ifs, 2, eps, &s).unwrap();
        assert!(b.upper <= a.upper + 1e-12);
    }
}

#[test]
fn one_dimensional_point_mass() {
    let ifs = preset("cantor3").unwrap();
    let r = sup_line_mass(&ifs, 1, 3f64.powi(-4), &SearchBudget::default()).unwrap();
    assert!(r.upper >= 2f64.powi(-4) && r.upper <= 4.0 * 2f64.powi(-4));
}

#[test]
fn ladder_validation() {
    let ifs = cc();
    let s = SearchBudget::default();
    assert!(alpha_estimate(&ifs, 1, &[0.1, 0.01], &s).is_err());
    assert!(alpha_estimate(&ifs, 1, &[0.1, 0.05, 0.025], &s).is_err());
    assert!(frostman_projection(&ifs, &[0.0, 0.0], &[0.1, 0.03, 0.01], &s).is_err());
}

#[test]
fn scaling_fit_slope_between_pair_slopes() {
    let f = ScalingFit::from_brackets(&[1.0, 0.5, 0.25, 0.125], &[0.0; 4], &[1.0, 0.4, 0.2, 0.05]).unwrap();
    assert!(f.pair_slope_min <= f.slope && f.slope <= f.pair_slope_max);
    assert!(f.slope_lower.is_none());
}

#[test]
fn dimension_bound_examples() {
    let l = 2f64.ln() / 3f64.ln();
    let b = dimension_bound(2.0 * l, 2, &[l, 2.0 * l]).unwrap();
    assert!((b.bound - 4.0 * 2f64.ln() / (3.0 * 3f64.ln())).abs() < 1e-12);
    for d in 1..=3usize {
        let alphas: Vec<f64> = (1..=d).map(|k| k as f64).collect();
        let b = dimension_bound(d as f64, d, &alphas).unwrap();
        assert!((b.bound - (d * d) as f64 / (d + 1) as f64).abs() < 1e-12);
    }
    assert_eq!(dimension_bound(1.3, 2, &[0.0, 0.0]).unwrap().bound, 1.3);
    assert!(dimension_bound(1.0, 2, &[0.5]).is_err());
}

#[test]
fn small_codim_examples() {
    let v = small_codim_bound(1.9, 2).unwrap();
    assert!((v[0] - 0.9).abs() < 1e-12 && (v[1] - 1.9).abs() < 1e-12);
    let v = small_codim_bound(2.5, 3).unwrap();
    assert!((v[0] - 0.5).abs() < 1e-12 && (v[2] - 2.5).abs() < 1e-12);
    assert!(matches!(small_codim_bound(0.9, 2), Err(Error::NotApplicable(_))));
}

#[test]
fn rotation_rejects_axis_aligned() {
    assert!(rotation_cocycle_bound(&cc(), 3, 8).is_err());
}

#[test]
fn rotation_levels_monotone_in_n_max() {
    let ifs = preset("homog(0.25, 1.0, 3)").unwrap();
    let a = rotation_cocycle_bound(&ifs, 2, 16).unwrap();
    let b = rotation_cocycle_bound(&ifs, 3, 16).unwrap();
    assert!(b.estimate >= a.estimate && b.min_value <= a.min_value);
}
