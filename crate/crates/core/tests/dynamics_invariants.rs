use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use singlab::dynamics::{
    contraction_audit, hausdorff_sum, height_along, lattice_panel, log_lipschitz_slack, moment_identity_check,
    orbit_heights, ExcursionSpec,
};
use singlab::exterior::{g_matrix, margulis_height, u_matrix, HeightParams, Lattice};
use singlab::ifs::{preset, IfsSystem, Word};

const PRESETS: [&str; 3] = ["cantor3", "cantor3x3", "sierpinski3"];

fn carpet_params() -> HeightParams {
    let s = 2.0 * 2f64.ln() / 3f64.ln();
    HeightParams::new(2, &[s / 2.0, s], 0.5, 0.5, None).unwrap()
}

/// A point of `K_ω` drawn by extending `ω` with a random tail.
fn point_in(ifs: &IfsSystem, word: &Word, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut w = word.clone();
    for _ in 0..30 {
        w.push(rng.gen_range(0..ifs.num_maps()) as u8);
    }
    ifs.code_point(&w).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn moment_identity_holds(p in 0usize..3, gamma in -0.5f64..1.0, n in 1usize..=6) {
        let ifs = preset(PRESETS[p]).unwrap();
        let (lhs, rhs) = moment_identity_check(&ifs, gamma, n).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs);
    }

    #[test]
    fn full_tree_cover_sum_is_closed_form(p in 0usize..3, gamma in -0.5f64..0.5, n in 1usize..=6) {
        let ifs = preset(PRESETS[p]).unwrap();
        let got = hausdorff_sum(&ifs, &ifs.words(n), gamma).unwrap();
        let want = ifs.diam_k().powf(ifs.sim_dim() - gamma) * ifs.moment(-gamma).powi(n as i32);
        prop_assert!((got - want).abs() <= 1e-10 * want);
    }
}

/// Points sharing a deep cylinder see heights within the empirical log-Lipschitz slack of the
/// representative's height at the shallower epoch.
#[test]
fn heights_are_stable_across_a_cylinder() {
    let ifs = preset("cantor3x3").unwrap();
    let params = carpet_params();
    let x0 = lattice_panel(2, 1, 2.0, 41).remove(0);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut cases = Vec::new();
    for _ in 0..30 {
        let m = rng.gen_range(1..=3);
        let n = 2;
        let word = Word((0..m + n).map(|_| rng.gen_range(0..4) as u8).collect());
        let rep = ifs.code_point(&word).unwrap();
        let rho = ifs.rho_cocycle(&word, m).unwrap();
        cases.push((word, rep, rho));
    }
    let lattices: Vec<Lattice> = cases
        .iter()
        .map(|(_, rep, rho)| x0.act_unchecked(&(g_matrix(*rho, 2) * u_matrix(rep))).reduced())
        .collect();
    // Displacements after conjugation are at most diam(K)·ρ_max^n; the sweep uses twice that.
    let radius = 2.0 * ifs.diam_k() * ifs.max_ratio().powi(2);
    let slack = log_lipschitz_slack(&params, &lattices, radius, 64, 43).unwrap();
    for (word, rep, rho) in &cases {
        let h_rep = height_along(&x0, rep, *rho, &params).unwrap().value;
        for _ in 0..20 {
            let y = point_in(&ifs, word, &mut rng);
            let h = height_along(&x0, &y, *rho, &params).unwrap().value;
            assert!(h >= h_rep / slack.a_emp * (1.0 - 1e-9), "{h} vs {h_rep} / {}", slack.a_emp);
        }
    }
}

/// The height at a cylinder's base point is controlled by the slack times the cylinder average.
#[test]
fn base_point_height_is_bounded_by_cylinder_average() {
    let ifs = preset("cantor3x3").unwrap();
    let params = carpet_params();
    let panel = lattice_panel(2, 30, 2.0, 51);
    let mut rng = ChaCha8Rng::seed_from_u64(52);
    for y in &panel {
        let len = rng.gen_range(1..=4);
        let word = Word((0..len).map(|_| rng.gen_range(0..4) as u8).collect());
        let h = ifs.compose_word(&word).unwrap();
        let base = h.translation().to_vec();
        let rho = ifs.rho_cocycle(&word, len).unwrap();
        let moved = y.act_unchecked(&(g_matrix(rho, 2) * u_matrix(&base))).reduced();
        let slack = log_lipschitz_slack(&params, &[moved], ifs.diam_k(), 64, 53).unwrap();
        let values: Vec<f64> = (0..32)
            .map(|_| height_along(y, &point_in(&ifs, &word, &mut rng), rho, &params).unwrap().value)
            .collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
        let upper = mean + 3.0 * (var / values.len() as f64).sqrt();
        let lhs = height_along(y, &base, rho, &params).unwrap().value;
        assert!(lhs <= slack.a_emp * upper * (1.0 + 1e-9), "{lhs} > {} · {upper}", slack.a_emp);
    }
}

/// Height integrals over branches that stay above the audit threshold grow no faster than the
/// per-epoch factor `c A (∫ρ dμ)^{ϱβ−γ}`.
#[test]
fn bad_branch_integrals_compound_per_epoch() {
    let ifs = preset("cantor3").unwrap();
    let params = HeightParams::new(1, &[ifs.sim_dim()], 0.5, 0.5, None).unwrap();
    let panel = lattice_panel(1, 100, 2.0, 61);
    let report = contraction_audit(&ifs, &params, 1, &panel, 2, 62).unwrap();
    let theta = report.c * report.slack.a_emp * report.drift_power;
    let x0 = panel
        .iter()
        .max_by(|a, b| {
            let ha = margulis_height(a, &params, 64.0).unwrap().value;
            let hb = margulis_height(b, &params, 64.0).unwrap().value;
            ha.total_cmp(&hb)
        })
        .unwrap();
    let i0 = margulis_height(x0, &params, 64.0).unwrap().value;
    for n in 1..=4 {
        let mut integral = 0.0;
        for word in ifs.words(n) {
            let x = ifs.code_point(&word).unwrap();
            let mut bad = true;
            let mut h = 0.0;
            for l in 1..=n {
                let rho = ifs.rho_cocycle(&word, l).unwrap();
                h = height_along(x0, &x, rho, &params).unwrap().value;
                bad &= h > report.threshold;
            }
            if bad {
                integral += ifs.cylinder(&word).unwrap().mass * h;
            }
        }
        let cap = 10.0 * theta.powi(n as i32) * i0;
        assert!(integral <= cap, "N={n}: {integral} > {cap}");
    }
}

#[test]
fn audit_threshold_is_shared_across_gamma() {
    let ifs = preset("cantor3").unwrap();
    let top = HeightParams::new(1, &[ifs.sim_dim()], 0.5, 0.5, None).unwrap();
    let panel = lattice_panel(1, 40, 2.0, 71);
    let mut thresholds = Vec::new();
    for gamma in [top.gamma0, 0.5 * (top.gamma0 + top.gamma_max()), top.gamma_max()] {
        let r = contraction_audit(&ifs, &top.with_gamma(gamma).unwrap(), 1, &panel, 2, 72).unwrap();
        assert!(r.c.is_finite() && r.c >= 1.0);
        assert!(r.ch_holds);
        thresholds.push(r.threshold);
    }
    assert!(thresholds.windows(2).all(|w| w[0] == w[1]), "{thresholds:?}");
}

#[test]
fn chained_orbit_matches_direct_evaluation() {
    let ifs = preset("cantor3x3").unwrap();
    let params = carpet_params();
    let spec = ExcursionSpec::new(10.0, 8, 1, 0.5, params.gamma).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(81);
    for x0 in lattice_panel(2, 10, 1.0, 82) {
        let x = point_in(&ifs, &Word(vec![]), &mut rng);
        let trace = orbit_heights(&ifs, &x, &x0, &params, &spec).unwrap();
        for e in &trace.epochs[1..] {
            let direct = height_along(&x0, &x, e.rho, &params).unwrap();
            if e.certified && direct.certified {
                assert!((direct.value - e.height).abs() <= 1e-9 * e.height, "epoch {}", e.index);
            }
        }
    }
}
