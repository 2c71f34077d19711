//! Command-line driver: configuration, subcommand dispatch and report output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod selftest;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::Parser;

use commands::Command;
use config::{parse_config_in, Format, RunConfig};
use error::CliError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "singlab", version, about = "Singular vectors on self-similar fractals: exponents, heights, scans")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Named IFS preset.
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// IFS definition file (TOML).
    #[arg(long, global = true)]
    pub ifs_file: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default from SINGLAB_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Single-threaded unless --threads is given.
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// Node/cylinder cap for enumerations.
    #[arg(long, global = true)]
    pub budget_nodes: Option<u64>,
    /// Sample cap for Monte Carlo panels.
    #[arg(long, global = true)]
    pub budget_samples: Option<u64>,
    /// Output file (written atomically); stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    /// Config file (if any) overlaid with the command-line flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::io(format!("reading {}: {e}", path.display())))?;
                let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
                parse_config_in(&text, base)?
            }
            None => RunConfig::default(),
        };
        if self.preset.is_some() && self.ifs_file.is_some() {
            return Err(CliError::usage("give --preset or --ifs-file, not both"));
        }
        if let Some(p) = &self.preset {
            cfg.set_preset(p)?;
        }
        if let Some(p) = &self.ifs_file {
            cfg.set_ifs_file(p)?;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.deterministic |= self.deterministic;
        cfg.threads = self.threads.or(cfg.threads);
        if cfg.threads.is_none() {
            if let Ok(v) = std::env::var("SINGLAB_THREADS") {
                cfg.threads = Some(v.trim().parse().map_err(|_| CliError::config("SINGLAB_THREADS: not a number"))?);
            }
        }
        if cfg.deterministic && cfg.threads.is_none() {
            cfg.threads = Some(1);
        }
        if cfg.threads == Some(0) {
            return Err(CliError::config("threads must be positive"));
        }
        cfg.budget.nodes = self.budget_nodes.or(cfg.budget.nodes);
        cfg.budget.samples = self.budget_samples.or(cfg.budget.samples);
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        if let Some(f) = self.format {
            cfg.format = f;
        }
        Ok(cfg)
    }
}

/// Runs one invocation and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            let err = CliError::usage(e.to_string().trim().to_string());
            return fail(&err);
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => fail(&e),
    }
}

fn fail(err: &CliError) -> i32 {
    eprintln!("error: {err}");
    print!("{}", output::error_envelope(err, EXIT_ERROR));
    EXIT_ERROR
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let cfg = cli.resolve()?;
    let work = || -> Result<i32, CliError> {
        let outcome = cli.command.run(&cfg)?;
        let text = output::render(cli.command.name(), &cfg, &outcome)?;
        output::emit(&text, cfg.out.as_deref())?;
        Ok(if !outcome.passed {
            EXIT_ERROR
        } else if outcome.truncated {
            EXIT_PARTIAL
        } else {
            EXIT_OK
        })
    };
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::new("threads", e.to_string()))?
            .install(work),
        None => work(),
    }
}
