//! Command-line front end: `verify`, `solve` and `morita`.

pub mod config;
pub mod morita;
pub mod report;
pub mod solve;
pub mod verify;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use qhm::lattice::{ratio_f64, Grid};

pub use config::{ConfigError, RunConfig};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "qhm",
    version,
    about = "Projective-module calculus and Yang-Mills critical points"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the invariant battery.
    Verify(Common),
    /// Build the critical connection and emit its data.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Also tabulate residuals against the grid spacing.
        #[arg(long)]
        sweep: bool,
    },
    /// Check the Morita transport identities.
    Morita(Common),
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    pub refinement: Option<u32>,
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridSummary {
    pub nx_unit: i64,
    pub nsu: i64,
    pub ny: i64,
    pub nsv: i64,
    pub hx: f64,
    pub hy: f64,
}

impl GridSummary {
    pub fn of(g: &Grid) -> Self {
        Self {
            nx_unit: g.nx_unit(),
            nsu: g.nsu(),
            ny: g.ny(),
            nsv: g.nsv(),
            hx: ratio_f64(g.hx_ratio()),
            hy: ratio_f64(g.hy_ratio()),
        }
    }
}

/// A pipeline failure, tagged with the stage that raised it.
#[derive(Debug, thiserror::Error)]
pub enum StageError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("stage {stage}: {source}")]
    Stage { stage: &'static str, source: qhm::Error },
    #[error("{stage}: {source}")]
    Io {
        stage: &'static str,
        source: std::io::Error,
    },
}

impl StageError {
    pub fn new(stage: &'static str, source: qhm::Error) -> Self {
        Self::Stage { stage, source }
    }

    pub fn config(e: impl std::fmt::Display) -> Self {
        Self::Config(e.to_string())
    }

    pub fn io(stage: &'static str, source: std::io::Error) -> Self {
        Self::Io { stage, source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Io { .. } => EXIT_CONFIG,
            Self::Stage { .. } => EXIT_FAIL,
        }
    }
}

/// Loads the configuration and applies command-line overrides.
pub fn load_config(common: &Common) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(r) = common.refinement {
        cfg.refinement = r;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn finish<S: Serialize>(out: &Path, name: &str, report: &S, pass: bool, checks: &report::Checks) -> i32 {
    if let Err(e) = std::fs::create_dir_all(out).and_then(|_| report::write_json(&out.join(name), report)) {
        eprintln!("error: cannot write {}: {e}", out.join(name).display());
        return EXIT_CONFIG;
    }
    for c in checks.failed() {
        eprintln!(
            "FAIL {} / {}: {:e} vs {:e} ({})",
            c.family, c.name, c.measured, c.tolerance, c.anchor
        );
    }
    println!(
        "{}: {} checks, {} failed",
        out.join(name).display(),
        checks.0.len(),
        checks.failed().len()
    );
    if pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let (common, sweep) = match &cli.command {
        Command::Verify(c) | Command::Morita(c) => (c, false),
        Command::Solve { common, sweep } => (common, *sweep),
    };
    let cfg = match load_config(common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let out = &common.out;
    let result = match cli.command {
        Command::Verify(_) => verify::run(&cfg).map(|r| finish(out, "verify.json", &r, r.pass, &r.checks)),
        Command::Solve { .. } => solve::run(&cfg, out, sweep).map(|r| finish(out, "solve.json", &r, r.pass, &r.checks)),
        Command::Morita(_) => morita::run(&cfg).map(|r| finish(out, "morita.json", &r, r.pass, &r.checks)),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    })
}
