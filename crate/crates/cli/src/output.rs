//! Report documents, CSV/JSON rendering and atomic file output.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use singlab::ifs::IfsSystem;

use crate::config::{Budget, Format, IfsSource, RunConfig};
use crate::error::CliError;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// What a subcommand produced.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub params: Value,
    pub result: Value,
    pub table: Table,
    pub truncated: bool,
    /// `false` when the command ran but its checks failed (selftest).
    pub passed: bool,
}

#[derive(Serialize)]
struct IfsSummary<'a> {
    source: &'a Option<IfsSource>,
    dim: usize,
    maps: usize,
    ratios: Vec<f64>,
    similarity_dimension: f64,
}

#[derive(Serialize)]
struct Document<'a> {
    command: &'a str,
    ifs: Option<IfsSummary<'a>>,
    seed: u64,
    budget: &'a Budget,
    deterministic: bool,
    params: &'a Value,
    truncated: bool,
    passed: bool,
    result: &'a Value,
}

pub fn render(command: &str, cfg: &RunConfig, outcome: &Outcome) -> Result<String, CliError> {
    match cfg.format {
        Format::Json => {
            let doc = Document {
                command,
                ifs: cfg.ifs.as_ref().map(|ifs: &IfsSystem| IfsSummary {
                    source: &cfg.source,
                    dim: ifs.dim(),
                    maps: ifs.num_maps(),
                    ratios: ifs.ratios(),
                    similarity_dimension: ifs.sim_dim(),
                }),
                seed: cfg.seed,
                budget: &cfg.budget,
                deterministic: cfg.deterministic,
                params: &outcome.params,
                truncated: outcome.truncated,
                passed: outcome.passed,
                result: &outcome.result,
            };
            let mut s = serde_json::to_string_pretty(&doc).map_err(|e| CliError::io(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let mut out = String::new();
            let opt = |v: Option<u64>| v.map_or("none".to_string(), |v| v.to_string());
            out.push_str(&format!("# command: {command}\n"));
            if let Some(IfsSource::Preset(p)) = &cfg.source {
                out.push_str(&format!("# preset: {p}\n"));
            }
            out.push_str(&format!("# seed: {}\n", cfg.seed));
            out.push_str(&format!("# budget_nodes: {}\n", opt(cfg.budget.nodes)));
            out.push_str(&format!("# budget_samples: {}\n", opt(cfg.budget.samples)));
            out.push_str(&format!("# params: {}\n", outcome.params));
            out.push_str(&format!("# truncated: {}\n", outcome.truncated));
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&outcome.table.header).map_err(|e| CliError::io(e.to_string()))?;
            for row in &outcome.table.rows {
                w.write_record(row).map_err(|e| CliError::io(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::io(e.to_string()))?;
            out.push_str(&String::from_utf8(bytes).map_err(|e| CliError::io(e.to_string()))?);
            Ok(out)
        }
    }
}

/// Writes `text` to `path` through a temporary file in the same directory, or to stdout.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| CliError::io(e.to_string()))
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)
                .map_err(|e| CliError::io(format!("creating temporary file in {}: {e}", dir.display())))?;
            tmp.write_all(text.as_bytes()).map_err(|e| CliError::io(e.to_string()))?;
            tmp.persist(path).map_err(|e| CliError::io(format!("writing {}: {}", path.display(), e.error)))?;
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a> {
    error: &'a CliError,
    exit_code: i32,
}

pub fn error_envelope(err: &CliError, exit_code: i32) -> String {
    let mut s = serde_json::to_string_pretty(&Envelope { error: err, exit_code }).expect("plain struct");
    s.push('\n');
    s
}

/// Shortest round-trip decimal for a float.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn join(v: &[f64]) -> String {
    v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(";")
}
