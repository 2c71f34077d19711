//! Subcommand parameter blocks and their execution.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use singlab::diophantine::fractal_scan;
use singlab::dynamics::{contraction_audit, divergence_fraction, lattice_panel, orbit_heights, ExcursionSpec};
use singlab::exponents::{
    alpha_estimate, dimension_bound, frostman_projection, rotation_cocycle_bound, small_codim_bound, SearchBudget,
};
use singlab::exterior::{HeightParams, Lattice};
use singlab::ifs::IfsSystem;
use singlab::Budgeted;

use crate::config::{merge_params, RunConfig};
use crate::error::CliError;
use crate::output::{join, num, Outcome, Table};
use crate::selftest;

/// Built-in exponent table for `--alphas from-file` when no `--alphas-file` is given.
const EXPONENT_TABLE: &str = include_str!("../../../data/exponents.toml");

/// `--alphas`: comma-separated values, `from-file` (exponent table keyed by preset name),
/// or `certified` (the lower bounds `s − d + ℓ`, valid when `s > d − 1`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSpec {
    List(Vec<f64>),
    Keyword(String),
}

fn parse_alphas(s: &str) -> Result<AlphaSpec, String> {
    let t = s.trim();
    if t.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
        return Ok(AlphaSpec::Keyword(t.to_string()));
    }
    t.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| format!("'{x}' is not a number")))
        .collect::<Result<_, _>>()
        .map(AlphaSpec::List)
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
pub struct AlphaSource {
    /// Exponents α_1..α_d: comma list, `from-file` or `certified`.
    #[arg(long, value_parser = parse_alphas)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alphas: Option<AlphaSpec>,
    /// TOML exponent table with `[<key>] alphas = [...]` sections.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alphas_file: Option<PathBuf>,
    /// Table key (defaults to the preset name).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alphas_key: Option<String>,
}

#[derive(Deserialize)]
struct ExponentEntry {
    alphas: Vec<f64>,
}

impl AlphaSource {
    fn resolve(&self, cfg: &RunConfig, ifs: &IfsSystem) -> Result<Vec<f64>, CliError> {
        let spec = self.alphas.clone().unwrap_or(AlphaSpec::Keyword("from-file".into()));
        let alphas = match spec {
            AlphaSpec::List(v) => v,
            AlphaSpec::Keyword(k) if k == "certified" => small_codim_bound(ifs.sim_dim(), ifs.dim())?,
            AlphaSpec::Keyword(k) if k == "from-file" => {
                let text = match &self.alphas_file {
                    Some(p) => std::fs::read_to_string(p)
                        .map_err(|e| CliError::io(format!("reading {}: {e}", p.display())))?,
                    None => EXPONENT_TABLE.to_string(),
                };
                let table: std::collections::BTreeMap<String, ExponentEntry> =
                    toml::from_str(&text).map_err(|e| CliError::config(format!("exponent table: {}", e.message())))?;
                let key = self
                    .alphas_key
                    .clone()
                    .or_else(|| cfg.preset_name().map(str::to_string))
                    .ok_or_else(|| CliError::config("alphas: from-file needs --alphas-key for a non-preset IFS"))?;
                match table.get(&key) {
                    Some(e) => e.alphas.clone(),
                    None => {
                        let known: Vec<&str> = table.keys().map(String::as_str).collect();
                        return Err(CliError::config(format!(
                            "alphas: no entry '{key}' in the exponent table (known: {}); pass --alphas explicitly",
                            known.join(", ")
                        )));
                    }
                }
            }
            AlphaSpec::Keyword(k) => {
                return Err(CliError::config(format!("alphas: '{k}' is not a list, from-file or certified")))
            }
        };
        if alphas.len() != ifs.dim() {
            return Err(CliError::config(format!("alphas: expected {} values, got {}", ifs.dim(), alphas.len())));
        }
        Ok(alphas)
    }
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
pub struct LadderArgs {
    /// Explicit scale ladder (comma list, decreasing).
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eps: Option<Vec<f64>>,
    /// Default ladder ρ_max^n starts at this n.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eps_from: Option<i32>,
    /// Default ladder ends at this n.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eps_to: Option<i32>,
    /// Direction grid size.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub directions: Option<usize>,
    /// Cylinder resolution as a fraction of ε.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub resolution: Option<f64>,
}

impl LadderArgs {
    fn ladder(&self, ifs: &IfsSystem) -> Result<Vec<f64>, CliError> {
        if let Some(v) = &self.eps {
            return Ok(v.clone());
        }
        let (a, b) = (self.eps_from.unwrap_or(3), self.eps_to.unwrap_or(6));
        if b < a {
            return Err(CliError::config("eps_to must be at least eps_from"));
        }
        Ok((a..=b).map(|n| ifs.max_ratio().powi(n)).collect())
    }

    fn search(&self, cfg: &RunConfig) -> SearchBudget {
        let d = SearchBudget::default();
        SearchBudget {
            directions: self.directions.unwrap_or(d.directions),
            resolution: self.resolution.unwrap_or(d.resolution),
            max_cylinders: cfg.budget.nodes.map_or(d.max_cylinders, |n| n as usize),
        }
    }
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
pub struct AlphaArgs {
    /// Codimension ℓ; all of 1..=d when omitted.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ell: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub ladder: LadderArgs,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
pub struct FrostmanArgs {
    /// Projection direction, degrees from the first axis.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub angle_deg: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub ladder: LadderArgs,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
pub struct RotArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_max: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub theta_grid: Option<usize>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
pub struct HeightArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub alphas: AlphaSource,
    /// Weight ε of the height function.
    #[arg(long = "height-eps")]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub height_eps: Option<f64>,
    /// Exponent ϱ ∈ (0,1).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rho_exp: Option<f64>,
    /// γ (defaults to ϱβ).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma: Option<f64>,
}

impl HeightArgs {
    fn params(&self, cfg: &RunConfig, ifs: &IfsSystem) -> Result<HeightParams, CliError> {
        let alphas = self.alphas.resolve(cfg, ifs)?;
        Ok(HeightParams::new(
            ifs.dim(),
            &alphas,
            self.height_eps.unwrap_or(0.5),
            self.rho_exp.unwrap_or(0.5),
            self.gamma,
        )?)
    }
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
pub struct ContractionArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub height: HeightArgs,
    /// Audits k = 1..=k_max.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k_max: Option<usize>,
    /// Cusp depth of the random lattice panel.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub panel_depth: Option<f64>,
    /// Monte Carlo points per cylinder.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mc: Option<usize>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
pub struct OrbitArgs {
    /// Base point on the attractor (comma list).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub x: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub height: HeightArgs,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub epochs: Option<usize>,
    /// Symbols per epoch.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub epoch_depth: Option<usize>,
    /// Height threshold M for the divergence fraction.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub threshold: Option<f64>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
pub struct ScanArgs {
    /// Cylinder depth.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub depth: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eps_ladder: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_ladder: Option<Vec<f64>>,
    /// Cover-sum exponent offset: weights are diam^{s−γ}.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma: Option<f64>,
    /// Exponents for the comparison bound (omitted when absent).
    #[arg(long, value_parser = parse_alphas)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alphas: Option<AlphaSpec>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
pub struct DimboundArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub alphas: AlphaSource,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
pub struct SelftestArgs {
    /// Random cases per sampled suite (defaults to the sample budget, else 1000).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cases: Option<usize>,
}

#[derive(Clone, Debug, clap::Subcommand)]
pub enum Command {
    /// Subspace-mass decay exponents α_ℓ.
    Alpha(AlphaArgs),
    /// Frostman exponent of a one-dimensional projection (planar IFS).
    Frostman(FrostmanArgs),
    /// Slab-mass cocycle bound for a rotating homogeneous planar IFS.
    Rotcocycle(RotArgs),
    /// Monte Carlo audit of the height contraction inequality.
    Contraction(ContractionArgs),
    /// Heights along the diagonal orbit of a point.
    Orbit(OrbitArgs),
    /// Dirichlet-improvability scan of cylinder representatives.
    Scan(ScanArgs),
    /// Dimension upper bound from exponents α_1..α_d.
    Dimbound(DimboundArgs),
    /// Runs the built-in invariant suites.
    Selftest(SelftestArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Alpha(_) => "alpha",
            Command::Frostman(_) => "frostman",
            Command::Rotcocycle(_) => "rotcocycle",
            Command::Contraction(_) => "contraction",
            Command::Orbit(_) => "orbit",
            Command::Scan(_) => "scan",
            Command::Dimbound(_) => "dimbound",
            Command::Selftest(_) => "selftest",
        }
    }

    pub fn run(&self, cfg: &RunConfig) -> Result<Outcome, CliError> {
        match self {
            Command::Alpha(a) => alpha(&merge_params(a, &cfg.params)?, cfg),
            Command::Frostman(a) => frostman(&merge_params(a, &cfg.params)?, cfg),
            Command::Rotcocycle(a) => rotcocycle(&merge_params(a, &cfg.params)?, cfg),
            Command::Contraction(a) => contraction(&merge_params(a, &cfg.params)?, cfg),
            Command::Orbit(a) => orbit(&merge_params(a, &cfg.params)?, cfg),
            Command::Scan(a) => scan(&merge_params(a, &cfg.params)?, cfg),
            Command::Dimbound(a) => dimbound(&merge_params(a, &cfg.params)?, cfg),
            Command::Selftest(a) => {
                let a: SelftestArgs = merge_params(a, &cfg.params)?;
                let cases = a.cases.or(cfg.budget.samples.map(|s| s as usize)).unwrap_or(1000);
                Ok(selftest::run(cfg.seed, cases))
            }
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn done(params: Value, result: Value, table: Table) -> Outcome {
    Outcome { params, result, table, truncated: false, passed: true }
}

fn alpha(a: &AlphaArgs, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let ifs = cfg.require_ifs()?;
    let ladder = a.ladder.ladder(ifs)?;
    let search = a.ladder.search(cfg);
    let levels: Vec<usize> = match a.ell {
        Some(l) if l == 0 || l > ifs.dim() => return Err(CliError::config(format!("ell must lie in 1..={}", ifs.dim()))),
        Some(l) => vec![l],
        None => (1..=ifs.dim()).collect(),
    };
    let mut table = Table::new(&["ell", "eps", "lower", "upper", "slope"]);
    let mut fits = Vec::new();
    for &l in &levels {
        let fit = alpha_estimate(ifs, l, &ladder, &search)?;
        for i in 0..ladder.len() {
            table.push(vec![l.to_string(), num(ladder[i]), num(fit.lower[i]), num(fit.upper[i]), num(fit.slope)]);
        }
        fits.push(json!({ "ell": l, "fit": to_value(&fit) }));
    }
    let params = json!({ "eps_ladder": ladder, "levels": levels, "search": to_value(&search) });
    Ok(done(params, Value::Array(fits), table))
}

fn frostman(a: &FrostmanArgs, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let ifs = cfg.require_ifs()?;
    let ladder = a.ladder.ladder(ifs)?;
    let search = a.ladder.search(cfg);
    let angle = a.angle_deg.unwrap_or(0.0);
    let dir = [angle.to_radians().cos(), angle.to_radians().sin()];
    let fit = frostman_projection(ifs, &dir, &ladder, &search)?;
    let mut table = Table::new(&["eps", "lower", "upper"]);
    for i in 0..ladder.len() {
        table.push(vec![num(ladder[i]), num(fit.lower[i]), num(fit.upper[i])]);
    }
    let params = json!({ "angle_deg": angle, "eps_ladder": ladder, "search": to_value(&search) });
    Ok(done(params, to_value(&fit), table))
}

fn rotcocycle(a: &RotArgs, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let ifs = cfg.require_ifs()?;
    let (n_max, grid) = (a.n_max.unwrap_or(5), a.theta_grid.unwrap_or(90));
    let r = rotation_cocycle_bound(ifs, n_max, grid)?;
    let mut table = Table::new(&["n", "mean_log_tau", "value"]);
    for l in &r.levels {
        table.push(vec![l.n.to_string(), num(l.mean_log_tau), num(l.value)]);
    }
    Ok(done(json!({ "n_max": n_max, "theta_grid": grid }), to_value(&r), table))
}

fn contraction(a: &ContractionArgs, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let ifs = cfg.require_ifs()?;
    let hp = a.height.params(cfg, ifs)?;
    let k_max = a.k_max.unwrap_or(2);
    let depth = a.panel_depth.unwrap_or(2.0);
    let mc = a.mc.unwrap_or(2);
    let count = cfg.budget.samples.unwrap_or(100) as usize;
    if k_max == 0 || count == 0 {
        return Err(CliError::config("k_max and the sample budget must be positive"));
    }
    let panel = lattice_panel(ifs.dim(), count, depth, cfg.seed);
    let mut table = Table::new(&[
        "k", "c", "threshold", "a_emp", "c0", "best_criterion", "criterion_met", "ch_holds", "classical",
    ]);
    let mut reports = Vec::new();
    for k in 1..=k_max {
        let r = contraction_audit(ifs, &hp, k, &panel, mc, cfg.seed.wrapping_add(k as u64))?;
        let best = r.criterion.iter().map(|c| c.value).fold(f64::INFINITY, f64::min);
        table.push(vec![
            k.to_string(),
            num(r.c),
            num(r.threshold),
            num(r.slack.a_emp),
            num(r.c0),
            num(best),
            r.criterion_met.to_string(),
            r.ch_holds.to_string(),
            r.simplified.as_ref().map_or("n/a".into(), |s| s.classical.to_string()),
        ]);
        reports.push(to_value(&r));
    }
    let params = json!({
        "height": to_value(&hp), "k_max": k_max, "panel_size": count, "panel_depth": depth, "mc_per_cylinder": mc,
    });
    Ok(done(params, Value::Array(reports), table))
}

fn orbit(a: &OrbitArgs, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let ifs = cfg.require_ifs()?;
    let x = a.x.clone().ok_or_else(|| CliError::config("orbit needs --x"))?;
    let hp = a.height.params(cfg, ifs)?;
    let threshold = a.threshold.unwrap_or(10.0);
    let spec = ExcursionSpec::new(threshold, a.epochs.unwrap_or(20), a.epoch_depth.unwrap_or(1), 0.5, hp.gamma)?;
    let trace = orbit_heights(ifs, &x, &Lattice::standard(ifs.dim() + 1), &hp, &spec)?;
    let mut table = Table::new(&["epoch", "rho", "height", "certified", "phis"]);
    for e in &trace.epochs {
        table.push(vec![e.index.to_string(), num(e.rho), num(e.height), e.certified.to_string(), join(&e.phis)]);
    }
    let frac = divergence_fraction(&trace, threshold);
    let params = json!({
        "x": x, "height": to_value(&hp), "epochs": spec.epochs, "epoch_depth": spec.epoch_depth, "threshold": threshold,
    });
    let result = json!({ "epochs": to_value(&trace.epochs), "fraction_at_or_below_threshold": frac });
    Ok(done(params, result, table))
}

fn scan(a: &ScanArgs, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let ifs = cfg.require_ifs()?;
    let depth = a.depth.unwrap_or(3);
    let eps = a.eps_ladder.clone().unwrap_or_else(|| vec![0.25, 0.5, 0.75, 1.0]);
    let ns = a.n_ladder.clone().unwrap_or_else(|| (2..=14).map(|i| 2f64.powi(i)).collect());
    let gamma = a.gamma.unwrap_or(0.0);
    let alphas = match &a.alphas {
        Some(spec) => {
            let src = AlphaSource { alphas: Some(spec.clone()), ..Default::default() };
            Some(src.resolve(cfg, ifs)?)
        }
        None => None,
    };
    let budget = cfg.budget.nodes.unwrap_or(1_000_000);
    let (report, truncated) = match fractal_scan(ifs, depth, &eps, &ns, gamma, alphas.as_deref(), budget) {
        Ok(r) => (r, false),
        Err(Budgeted::Partial { partial, .. }) => (partial, true),
        Err(Budgeted::Failed(e)) => return Err(e.into()),
    };
    let mut header = vec!["word".to_string(), "representative".to_string()];
    for e in &eps {
        header.push(format!("first_failure@{}", num(*e)));
    }
    for e in &eps {
        header.push(format!("flagged@{}", num(*e)));
    }
    header.push("weight".into());
    let mut table = Table { header, rows: Vec::new() };
    for r in &report.rows {
        let mut row = vec![
            r.word.0.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(""),
            join(&r.representative),
        ];
        row.extend(r.first_failure.iter().map(|f| f.map_or("none".into(), num)));
        row.extend(r.flagged.iter().map(|f| f.to_string()));
        row.push(num(r.weight));
        table.push(row);
    }
    let params = json!({ "depth": depth, "eps_ladder": eps, "n_ladder": ns, "gamma": gamma, "alphas": alphas });
    let mut out = done(params, to_value(&report), table);
    out.truncated = truncated;
    Ok(out)
}

fn dimbound(a: &DimboundArgs, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let ifs = cfg.require_ifs()?;
    let alphas = a.alphas.resolve(cfg, ifs)?;
    let b = dimension_bound(ifs.sim_dim(), ifs.dim(), &alphas)?;
    let mut table = Table::new(&["s", "d", "varpi", "beta", "bound"]);
    table.push(vec![num(ifs.sim_dim()), ifs.dim().to_string(), num(b.varpi), num(b.beta), num(b.bound)]);
    let result = json!({ "s": ifs.sim_dim(), "d": ifs.dim(), "alphas": alphas, "bound": b.bound, "varpi": b.varpi, "beta": b.beta });
    Ok(done(json!({ "alphas": alphas }), result, table))
}
