//! Run configuration: a TOML document merged with command-line flags (flags win).
//!
//! ```toml
//! preset = "cantor3x3"        # or ifs_file = "my.toml", or an inline [ifs] table
//! seed = 7
//! threads = 1
//! deterministic = true
//! [budget]
//! nodes = 1000000
//! samples = 100
//! [output]
//! path = "run.json"
//! format = "json"
//! [params]                    # command-specific, same names as the long flags
//! depth = 4
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use singlab::ifs::{parse_ifs_file, preset, IfsSystem};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum IfsSource {
    Preset(String),
    File(PathBuf),
    Inline,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Budget {
    pub nodes: Option<u64>,
    pub samples: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub source: Option<IfsSource>,
    pub ifs: Option<IfsSystem>,
    pub seed: u64,
    pub threads: Option<usize>,
    pub deterministic: bool,
    pub budget: Budget,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub params: toml::Table,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            source: None,
            ifs: None,
            seed: 0,
            threads: None,
            deterministic: false,
            budget: Budget::default(),
            out: None,
            format: Format::Json,
            params: toml::Table::new(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: Option<String>,
    ifs_file: Option<PathBuf>,
    ifs: Option<toml::Table>,
    seed: Option<u64>,
    threads: Option<usize>,
    deterministic: Option<bool>,
    budget: Option<RawBudget>,
    output: Option<RawOutput>,
    params: Option<toml::Table>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBudget {
    nodes: Option<u64>,
    samples: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    path: Option<PathBuf>,
    format: Option<Format>,
}

/// Parses and validates a config document; relative paths resolve against the working directory.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    parse_config_in(text, Path::new("."))
}

/// As [`parse_config`], resolving relative paths against `base`.
pub fn parse_config_in(text: &str, base: &Path) -> Result<RunConfig, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::config(e.message()))?;
    let sources = raw.preset.is_some() as u8 + raw.ifs_file.is_some() as u8 + raw.ifs.is_some() as u8;
    if sources > 1 {
        return Err(CliError::config("give at most one of preset, ifs_file, [ifs]"));
    }
    let mut cfg = RunConfig::default();
    if let Some(name) = raw.preset {
        cfg.set_preset(&name)?;
    } else if let Some(path) = raw.ifs_file {
        cfg.set_ifs_file(&base.join(path))?;
    } else if let Some(table) = raw.ifs {
        let text = toml::to_string(&table).map_err(|e| CliError::config(e.to_string()))?;
        cfg.ifs = Some(build_ifs_text(&text)?);
        cfg.source = Some(IfsSource::Inline);
    }
    cfg.seed = raw.seed.unwrap_or(0);
    cfg.threads = raw.threads;
    cfg.deterministic = raw.deterministic.unwrap_or(false);
    if let Some(b) = raw.budget {
        cfg.budget = Budget { nodes: b.nodes, samples: b.samples };
    }
    if let Some(o) = raw.output {
        cfg.out = o.path.map(|p| base.join(p));
        cfg.format = o.format.unwrap_or(Format::Json);
    }
    cfg.params = raw.params.unwrap_or_default();
    Ok(cfg)
}

fn build_ifs_text(text: &str) -> Result<IfsSystem, CliError> {
    parse_ifs_file(text).and_then(|f| f.build()).map_err(CliError::from_validation)
}

impl RunConfig {
    pub fn set_preset(&mut self, name: &str) -> Result<(), CliError> {
        self.ifs = Some(preset(name).map_err(CliError::from_validation)?);
        self.source = Some(IfsSource::Preset(name.trim().to_string()));
        Ok(())
    }

    pub fn set_ifs_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("reading {}: {e}", path.display())))?;
        self.ifs = Some(build_ifs_text(&text)?);
        self.source = Some(IfsSource::File(path.to_path_buf()));
        Ok(())
    }

    pub fn require_ifs(&self) -> Result<&IfsSystem, CliError> {
        self.ifs.as_ref().ok_or_else(|| CliError::config("no IFS given: use --preset, --ifs-file or a config file"))
    }

    pub fn preset_name(&self) -> Option<&str> {
        match &self.source {
            Some(IfsSource::Preset(p)) => Some(p),
            _ => None,
        }
    }
}

/// Overlays `flags` (fields that are `None` are skipped) onto the config `[params]` table
/// and deserializes the result.
pub fn merge_params<T>(flags: &T, params: &toml::Table) -> Result<T, CliError>
where
    T: Serialize + serde::de::DeserializeOwned,
{
    let mut merged = serde_json::to_value(params).map_err(|e| CliError::config(e.to_string()))?;
    let over = serde_json::to_value(flags).map_err(|e| CliError::config(e.to_string()))?;
    if let (Some(base), serde_json::Value::Object(top)) = (merged.as_object_mut(), over) {
        for (k, v) in top {
            if !v.is_null() {
                base.insert(k, v);
            }
        }
    }
    let out: T = serde_json::from_value(merged).map_err(|e| CliError::config(format!("params: {e}")))?;
    // Every recognised key survives the round trip, so anything missing was not recognised.
    let known = serde_json::to_value(&out).map_err(|e| CliError::config(e.to_string()))?;
    if let Some(unknown) = params.keys().find(|k| known.get(k.as_str()).is_none()) {
        return Err(CliError::config(format!("params.{unknown}: not a parameter of this command")));
    }
    Ok(out)
}
