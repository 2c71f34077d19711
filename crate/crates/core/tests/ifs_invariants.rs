use std::collections::{HashMap, HashSet};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use singlab::ifs::{preset, Word};

const PRESETS: [&str; 4] = ["cantor3", "cantor3x3", "sierpinski3", "carpet3"];

fn random_word(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Word {
    Word((0..n).map(|_| rng.gen_range(0..m) as u8).collect())
}

#[test]
fn cylinder_masses_partition_unity() {
    for name in PRESETS {
        let ifs = preset(name).unwrap();
        let m = ifs.num_maps();
        for n in 1..=10 {
            if m.pow(n as u32) > 1 << 20 {
                break;
            }
            let total: f64 = ifs.words(n).iter().map(|w| ifs.cylinder(w).unwrap().mass).sum();
            assert!((total - 1.0).abs() < 1e-12, "{name} n={n}: {total}");
        }
    }
}

#[test]
fn diameters_follow_the_cocycle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for name in PRESETS {
        let ifs = preset(name).unwrap();
        for _ in 0..200 {
            let n = rng.gen_range(1..=12);
            let w = random_word(&mut rng, ifs.num_maps(), n);
            let c = ifs.cylinder(&w).unwrap();
            let want = ifs.diam_k() * ifs.rho_cocycle(&w, n).unwrap();
            assert!((c.diameter - want).abs() <= 1e-12 * want.max(1e-300));
        }
    }
}

#[test]
fn complete_prefix_set_cuts_every_branch_once() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut checked = 0;
    for name in PRESETS {
        let ifs = preset(name).unwrap();
        for eps in [0.3, 0.05, 1e-3] {
            let set: HashSet<Word> = ifs.complete_prefix_set(eps).unwrap().into_iter().collect();
            for _ in 0..2500 / 3 {
                let w = random_word(&mut rng, ifs.num_maps(), 40);
                let hits = (0..=40).filter(|&n| set.contains(&w.prefix(n))).count();
                assert_eq!(hits, 1, "{name} eps={eps}");
                checked += 1;
            }
        }
    }
    assert!(checked >= 9_000);
}

/// Wilson–Hilferty approximation of the upper 0.999 chi-square quantile.
fn chi2_crit(df: f64) -> f64 {
    let z = 3.090;
    let a = 2.0 / (9.0 * df);
    df * (1.0 - a + z * a.sqrt()).powi(3)
}

#[test]
fn sampled_words_match_cylinder_masses() {
    for name in ["cantor3x3", "sierpinski3"] {
        let ifs = preset(name).unwrap();
        let depth = 3;
        let count = 1_000_000;
        let mut counts: HashMap<Word, usize> = HashMap::new();
        for w in ifs.sample_words(5, depth, count) {
            *counts.entry(w).or_default() += 1;
        }
        let words = ifs.words(depth);
        let stat: f64 = words
            .iter()
            .map(|w| {
                let expected = count as f64 * ifs.cylinder(w).unwrap().mass;
                let seen = *counts.get(w).unwrap_or(&0) as f64;
                (seen - expected).powi(2) / expected
            })
            .sum();
        let crit = chi2_crit((words.len() - 1) as f64);
        assert!(stat < crit, "{name}: chi2 = {stat}, critical {crit}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn assigned_words_refine(p in 0usize..4, seed in any::<u64>(), m in 1usize..8, extra in 1usize..4) {
        let ifs = preset(PRESETS[p]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_word(&mut rng, ifs.num_maps(), 40);
        let x = ifs.code_point(&w).unwrap();
        let n = (m + extra).min(8);
        let fine = ifs.assign_word(&x, n).unwrap();
        let coarse = ifs.assign_word(&x, m.min(n)).unwrap();
        prop_assert_eq!(fine.prefix(m.min(n)), coarse);
    }

    #[test]
    fn assigned_cylinder_holds_the_point(p in 0usize..4, seed in any::<u64>(), n in 1usize..8) {
        let ifs = preset(PRESETS[p]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = ifs.code_point(&random_word(&mut rng, ifs.num_maps(), 40)).unwrap();
        let w = ifs.assign_word(&x, n).unwrap();
        let c = ifs.cylinder(&w).unwrap();
        let inner = c.map.apply_inverse(&x);
        prop_assert!(ifs.enclosure().contains(&inner, 1e-6));
    }
}
