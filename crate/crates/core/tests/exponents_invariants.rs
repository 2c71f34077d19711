use singlab::exponents::{
    alpha_estimate, line_mass, sup_line_mass, AffineSubspace, SearchBudget, DEFAULT_MAX_CYLINDERS,
};
use singlab::ifs::preset;

fn search() -> SearchBudget {
    SearchBudget { directions: 180, resolution: 1.0 / 3.0, max_cylinders: DEFAULT_MAX_CYLINDERS }
}

#[test]
fn brackets_are_ordered_and_tighten() {
    let ifs = preset("cantor3x3").unwrap();
    let line = AffineSubspace::new(vec![vec![0.6, 0.8]], vec![0.3, 0.1]).unwrap();
    let eps = 0.05;
    let mut prev: Option<(f64, f64)> = None;
    for depth in [eps, eps / 3.0, eps / 9.0, eps / 27.0] {
        let b = line_mass(&ifs, &line, eps, depth).unwrap();
        assert!(0.0 <= b.lower && b.lower <= b.upper && b.upper <= 1.0);
        if let Some((lo, hi)) = prev {
            assert!(b.upper - b.lower <= (hi - lo) + 1e-12);
            // Finer brackets stay inside the coarser ones.
            assert!(b.lower >= lo - 1e-12 && b.upper <= hi + 1e-12);
        }
        prev = Some((b.lower, b.upper));
    }
}

#[test]
fn higher_codimension_carries_less_mass() {
    for name in ["cantor3x3", "sierpinski3", "carpet3"] {
        let ifs = preset(name).unwrap();
        for n in 2..=4 {
            let eps = 3f64.powi(-n);
            let a = sup_line_mass(&ifs, 1, eps, &search()).unwrap();
            let b = sup_line_mass(&ifs, 2, eps, &search()).unwrap();
            assert!(b.lower <= a.upper + 1e-12, "{name} n={n}");
        }
    }
}

/// `(⌈A⌉+1)^ℓ` slabs of width `ε` cover a slab of width `Aε`.
fn doubling(a: f64, ell: usize) -> f64 {
    (a.ceil() + 1.0).powi(ell as i32)
}

#[test]
fn neighbourhood_mass_doubles_boundedly() {
    let ifs = preset("cantor3x3").unwrap();
    for ell in 1..=2 {
        for eps in [0.03, 0.01] {
            let small = sup_line_mass(&ifs, ell, eps, &search()).unwrap();
            for a in [2.0, 3.0, 5.0] {
                let big = sup_line_mass(&ifs, ell, a * eps, &search()).unwrap();
                assert!(big.lower <= doubling(a, ell) * small.upper, "ell={ell} eps={eps} A={a}");
            }
        }
    }
}

#[test]
fn slab_masses_are_submultiplicative() {
    let ifs = preset("cantor3x3").unwrap();
    let rho: f64 = 1.0 / 3.0;
    let d = doubling(1.0 + ifs.diam_k(), 1);
    let tau = |n: i32| sup_line_mass(&ifs, 1, rho.powi(n), &search()).unwrap();
    for m in 1..=3 {
        for n in 1..=3 {
            let joint = tau(m + n).lower;
            assert!(joint <= d * tau(m).upper * tau(n).upper, "m={m} n={n}");
        }
    }
}

#[test]
fn decay_exponents_are_positive() {
    for (name, ell) in [("cantor3x3", 1), ("cantor3x3", 2), ("sierpinski3", 1), ("carpet3", 1), ("carpet3", 2)] {
        let ifs = preset(name).unwrap();
        let r = ifs.max_ratio();
        let ladder: Vec<f64> = (2..=5).map(|n| r.powi(n)).collect();
        let fit = alpha_estimate(&ifs, ell, &ladder, &search()).unwrap();
        assert!(fit.slope > 0.05, "{name} ell={ell}: {}", fit.slope);
    }
}
