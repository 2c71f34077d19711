//! Quick invariant suites run by `singlab selftest`.

use rand::Rng;
use serde::Serialize;
use serde_json::json;
use singlab::diophantine::{dirichlet_test, DirichletQuery};
use singlab::dynamics::moment_identity_check;
use singlab::exponents::dimension_bound;
use singlab::exterior::{apply_unipotent, u_matrix, wedge_action, ExteriorVector};
use singlab::ifs::preset;
use singlab::sampling::par_draw;
use singlab::transversality::{normal_vector, normal_vector_oracle, transversality_defect};

use crate::output::{num, Outcome, Table};

#[derive(Clone, Debug, Serialize)]
pub struct Suite {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub worst: f64,
}

impl Suite {
    fn from_errors(name: &'static str, errors: &[f64], tol: f64) -> Self {
        Suite {
            name,
            cases: errors.len(),
            failures: errors.iter().filter(|e| !(**e <= tol)).count(),
            worst: errors.iter().copied().fold(0.0, f64::max),
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn similarity_dimensions() -> Suite {
    let (l2, l3) = (2f64.ln(), 3f64.ln());
    let cases = [("cantor3", l2 / l3), ("cantor3x3", 2.0 * l2 / l3), ("sierpinski3", l3 / l2)];
    let errs: Vec<f64> = cases.iter().map(|(p, s)| (preset(p).map_or(f64::INFINITY, |i| i.sim_dim()) - s).abs()).collect();
    Suite::from_errors("similarity_dimension", &errs, 1e-10)
}

fn moment_identity() -> Suite {
    let mut errs = Vec::new();
    for p in ["cantor3", "cantor3x3", "sierpinski3"] {
        let ifs = preset(p).expect("preset");
        for gamma in [-0.5, -0.1, 0.0, 0.3, 1.0] {
            for n in 1..=5 {
                errs.push(moment_identity_check(&ifs, gamma, n).map_or(f64::INFINITY, |(l, r)| rel(l, r)));
            }
        }
    }
    Suite::from_errors("moment_identity", &errs, 1e-10)
}

fn dimension_bounds() -> Suite {
    let s = 2.0 * 2f64.ln() / 3f64.ln();
    let mut errs = vec![dimension_bound(s, 2, &[s / 2.0, s]).map_or(f64::INFINITY, |b| (b.bound - 2.0 * s / 3.0).abs())];
    for d in [2usize, 3] {
        let alphas: Vec<f64> = (1..=d).map(|l| l as f64).collect();
        let want = (d * d) as f64 / (d + 1) as f64;
        errs.push(dimension_bound(d as f64, d, &alphas).map_or(f64::INFINITY, |b| (b.bound - want).abs()));
    }
    Suite::from_errors("dimension_bound", &errs, 1e-12)
}

fn random_vector(rng: &mut impl Rng, n: usize, level: usize) -> ExteriorVector {
    let len = ExteriorVector::zero(n, level).coords().len();
    ExteriorVector::new(n, level, (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()).expect("sized")
}

fn transversality(seed: u64, cases: usize) -> Suite {
    let errs = par_draw(seed, cases, |rng| {
        let d = rng.gen_range(1..=3usize);
        let level = rng.gen_range(1..=d);
        let v = random_vector(rng, d + 1, level);
        let mut pool: Vec<usize> = (1..=d).collect();
        let mut j: Vec<usize> = (0..level).map(|_| pool.swap_remove(rng.gen_range(0..pool.len()))).collect();
        j.sort_unstable();
        let scale = v.norm().powi(level as i32).max(1.0);
        transversality_defect(&v, &j).map_or(f64::INFINITY, |def| (-def / scale).max(0.0))
    });
    Suite::from_errors("transversality_defect", &errs, 1e-9)
}

fn exterior_oracle(seed: u64, cases: usize) -> Suite {
    let errs = par_draw(seed ^ 0xe7, cases, |rng| {
        let d = rng.gen_range(1..=3usize);
        let level = rng.gen_range(1..=d + 1);
        let v = random_vector(rng, d + 1, level);
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let fast = apply_unipotent(&x, &v);
        let slow = wedge_action(&u_matrix(&x), &v);
        let mut worst: f64 = 0.0;
        match (fast, slow) {
            (Ok(a), Ok(b)) => {
                let scale = b.norm().max(1e-300);
                for (p, q) in a.coords().iter().zip(b.coords()) {
                    worst = worst.max((p - q).abs() / scale);
                }
            }
            _ => return f64::INFINITY,
        }
        if level <= d && level >= 1 {
            let mut set: Vec<usize> = vec![0];
            set.extend(1..level);
            if let (Ok(a), Ok(b)) = (normal_vector(&v, &set), normal_vector_oracle(&v, &set)) {
                let scale = v.norm().max(1e-300);
                for (p, q) in a.iter().zip(&b) {
                    worst = worst.max((p - q).abs() / scale);
                }
            } else {
                return f64::INFINITY;
            }
        }
        worst
    });
    Suite::from_errors("exterior_oracle", &errs, 1e-12)
}

fn dirichlet_full(seed: u64, cases: usize) -> Suite {
    let failures = par_draw(seed ^ 0xd1, cases, |rng| {
        let d = rng.gen_range(1..=3usize);
        let x: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        let n = [10.0, 100.0, 1000.0][rng.gen_range(0..3)];
        match dirichlet_test(&DirichletQuery { x, eps: 1.0, n }) {
            Ok(r) if r.solvable => 0.0,
            _ => 1.0,
        }
    });
    Suite::from_errors("dirichlet_eps_one", &failures, 0.0)
}

pub fn run(seed: u64, cases: usize) -> Outcome {
    let suites = vec![
        similarity_dimensions(),
        moment_identity(),
        dimension_bounds(),
        transversality(seed, cases),
        exterior_oracle(seed, cases),
        dirichlet_full(seed, cases),
    ];
    let mut table = Table::new(&["suite", "cases", "failures", "worst"]);
    for s in &suites {
        table.push(vec![s.name.to_string(), s.cases.to_string(), s.failures.to_string(), num(s.worst)]);
    }
    let passed = suites.iter().all(|s| s.failures == 0);
    Outcome {
        params: json!({ "cases": cases }),
        result: json!({ "suites": suites, "passed": passed }),
        table,
        truncated: false,
        passed,
    }
}
