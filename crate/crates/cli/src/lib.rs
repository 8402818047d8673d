//! Library side of the `infosum` command-line tool: input schemas, the
//! five subcommands and their JSON/CSV artifacts.

pub mod commands;
pub mod input;

use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use infosum::{GridConfig, Tolerances};

pub use commands::Artifact;

/// Default bound for the score convolution check.
pub const SCORE_CHECK_TOL: f64 = 5e-3;
/// Default largest `n` for the sweep.
pub const DEFAULT_N_MAX: usize = 6;
/// Bound on ANOVA reconstruction and orthogonality errors.
pub const ANOVA_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Verify,
    CltSweep,
    AnovaDemo,
    PackOptimize,
    ScoreCheck,
}

impl Command {
    pub fn label(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::CltSweep => "clt-sweep",
            Command::AnovaDemo => "anova-demo",
            Command::PackOptimize => "pack-optimize",
            Command::ScoreCheck => "score-check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub input: PathBuf,
    /// `None` writes to stdout.
    pub output: Option<PathBuf>,
    pub format: Format,
    pub grid: GridConfig,
    /// Relative tolerance; also the bound for `score-check`.
    pub tol: Option<f64>,
    /// Absolute tolerance in nats for the entropy forms.
    pub tol_entropy: Option<f64>,
    pub seed: u64,
    pub n_max: Option<usize>,
}

/// Resolved settings shared by every command.
#[derive(Debug, Clone)]
pub struct Settings {
    pub grid: GridConfig,
    pub tol: Tolerances<f64>,
    pub score_tol: f64,
    pub seed: u64,
    pub n_max: Option<usize>,
}

impl RunConfig {
    pub fn settings(&self) -> Result<Settings> {
        self.grid.validate().context("grid")?;
        for (flag, v) in [("--tol", self.tol), ("--tol-entropy", self.tol_entropy)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    bail!("{flag} must be positive and finite, got {v}");
                }
            }
        }
        let mut tol = Tolerances::default();
        if let Some(v) = self.tol {
            tol.relative = v;
        }
        if let Some(v) = self.tol_entropy {
            tol.entropy_abs = v;
        }
        Ok(Settings {
            grid: self.grid,
            tol,
            score_tol: self.tol.unwrap_or(SCORE_CHECK_TOL),
            seed: self.seed,
            n_max: self.n_max,
        })
    }
}

/// Runs the command and returns the artifact without writing it.
pub fn evaluate(cfg: &RunConfig) -> Result<Artifact> {
    let ctx = cfg.settings()?;
    log::info!("{} on {}", cfg.command.label(), cfg.input.display());
    let art = match cfg.command {
        Command::Verify => commands::verify(input::load(&cfg.input)?, &ctx)?,
        Command::CltSweep => commands::clt_sweep(input::load(&cfg.input)?, &ctx)?,
        Command::AnovaDemo => commands::anova_demo(input::load(&cfg.input)?, &ctx)?,
        Command::PackOptimize => commands::pack_optimize(input::load(&cfg.input)?, &ctx)?,
        Command::ScoreCheck => commands::score_check(input::load(&cfg.input)?, &ctx)?,
    };
    Ok(art)
}

pub fn render(art: &Artifact, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(&art.json)?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&art.csv_header)?;
            for row in &art.csv_rows {
                w.write_record(row)?;
            }
            Ok(w.into_inner().map_err(|e| e.into_error())?)
        }
    }
}

/// Evaluates, writes the artifact and returns whether any check was violated.
pub fn run(cfg: &RunConfig) -> Result<bool> {
    let art = evaluate(cfg)?;
    let bytes = render(&art, cfg.format)?;
    match &cfg.output {
        Some(path) => std::fs::write(path, &bytes).with_context(|| format!("cannot write {}", path.display()))?,
        None => std::io::stdout().lock().write_all(&bytes)?,
    }
    Ok(art.violated)
}
