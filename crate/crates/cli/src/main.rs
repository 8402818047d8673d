use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use infosum::GridConfig;
use infosum_cli::{run, Command, Format, RunConfig};

/// Numerical checks of entropy and Fisher information inequalities for sums
/// of independent random variables.
#[derive(Parser)]
#[command(name = "infosum", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every inequality verifier on a system and its collections.
    Verify(Common),
    /// Entropy and Fisher information of normalized i.i.d. sums.
    CltSweep(Common),
    /// ANOVA variance table of a function on a finite product space.
    AnovaDemo(Common),
    /// Optimal fractional packing of a collection.
    PackOptimize(Common),
    /// Score convolution identity on pairs of densities.
    ScoreCheck(Common),
}

#[derive(Args)]
struct Common {
    /// JSON input file.
    #[arg(long)]
    input: PathBuf,
    /// Output file; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Grid points, a power of two >= 1024.
    #[arg(long, default_value_t = 4096)]
    grid_points: usize,
    /// Grid half-width in standard deviations.
    #[arg(long, default_value_t = 8.0)]
    grid_sigmas: f64,
    /// Relative tolerance; also the bound for score-check.
    #[arg(long)]
    tol: Option<f64>,
    /// Absolute tolerance in nats for the entropy forms.
    #[arg(long)]
    tol_entropy: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest n for clt-sweep.
    #[arg(long)]
    n_max: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (command, c) = match cli.command {
        Cmd::Verify(c) => (Command::Verify, c),
        Cmd::CltSweep(c) => (Command::CltSweep, c),
        Cmd::AnovaDemo(c) => (Command::AnovaDemo, c),
        Cmd::PackOptimize(c) => (Command::PackOptimize, c),
        Cmd::ScoreCheck(c) => (Command::ScoreCheck, c),
    };
    let cfg = RunConfig {
        command,
        input: c.input,
        output: c.output,
        format: c.format,
        grid: GridConfig { half_width_sigmas: c.grid_sigmas, points: c.grid_points },
        tol: c.tol,
        tol_entropy: c.tol_entropy,
        seed: c.seed,
        n_max: c.n_max,
    };
    match run(&cfg) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
