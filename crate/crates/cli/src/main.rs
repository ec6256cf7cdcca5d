mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use twofluid::solver::Mode;

use commands::{AppError, Verdict};
use config::RunConfig;

#[derive(Parser)]
#[command(name = "twofluid", version, about = "Decay experiments for the linearized and nonlinear two-fluid Euler-Poisson system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Symbol identities, Lyapunov decrement and spectral-bound sweeps.
    VerifySymbols,
    /// Whole-space linear decay by radial quadrature, fitted against predicted exponents.
    LinearDecay,
    /// Exponential decay of the charge-difference system on the grid.
    DifferenceDecay,
    /// Grid solver run with conservation checks and corroborative slope fits.
    Simulate,
    /// Littlewood-Paley and Besov inequality suite.
    LpTest,
    /// Aggregate the verdicts in earlier output directories.
    Report {
        /// Directories containing `report.json`.
        inputs: Vec<PathBuf>,
    },
}

/// Flags override the config file.
#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Negative Besov index of the data.
    #[arg(long, global = true, conflicts_with = "p")]
    s: Option<f64>,
    /// Lebesgue exponent of the data, in [1, 2).
    #[arg(long, global = true)]
    p: Option<f64>,
    /// Derivative orders, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    ell: Option<Vec<f64>>,
    /// Fit window `t0,t1`.
    #[arg(long, global = true, value_delimiter = ',')]
    window: Option<Vec<f64>>,
    /// Grid points per side.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Box side.
    #[arg(long, global = true)]
    length: Option<f64>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long, global = true)]
    t_final: Option<f64>,
    #[arg(long, global = true)]
    amplitude: Option<f64>,
    /// nonlinear | linear_full
    #[arg(long, global = true, value_parser = parse_mode)]
    mode: Option<Mode>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "nonlinear" => Ok(Mode::Nonlinear),
        "linear_full" | "linear-full" => Ok(Mode::LinearFull),
        other => Err(format!("unknown mode `{other}`, expected nonlinear or linear_full")),
    }
}

impl Common {
    fn resolve(&self, command: &Command) -> Result<RunConfig, AppError> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let difference = matches!(command, Command::DifferenceDecay);
        if let Some(v) = &self.out {
            c.output = v.clone();
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.s {
            c.regime.s = Some(v);
            c.regime.p = None;
        }
        if let Some(v) = self.p {
            c.regime.p = Some(v);
            c.regime.s = None;
        }
        if let Some(v) = &self.ell {
            c.ell = Some(v.clone());
        }
        if let Some(v) = &self.window {
            match v.as_slice() {
                &[a, b] => c.window = Some([a, b]),
                _ => return Err(AppError::Usage("window: expected `t0,t1`".into())),
            }
        }
        if let Some(v) = self.n {
            if difference { c.difference.n = v } else { c.grid.n = v }
        }
        if let Some(v) = self.length {
            if difference { c.difference.length = v } else { c.grid.length = v }
        }
        if let Some(v) = self.dt {
            if difference { c.difference.dt = v } else { c.solver.dt = v }
        }
        if let Some(v) = self.t_final {
            if difference { c.difference.t_final = v } else { c.solver.t_final = v }
        }
        if let Some(v) = self.amplitude {
            if difference { c.difference.amplitude = v } else { c.physics.amplitude = v }
        }
        if let Some(v) = self.mode {
            c.solver.mode = v;
        }
        c.validate()?;
        Ok(c)
    }
}

fn execute(cli: &Cli) -> Result<Verdict, AppError> {
    let config = cli.common.resolve(&cli.command)?;
    match &cli.command {
        Command::VerifySymbols => commands::verify_symbols(&config),
        Command::LinearDecay => commands::linear_decay(&config),
        Command::DifferenceDecay => commands::difference_decay(&config),
        Command::Simulate => commands::simulate(&config),
        Command::LpTest => commands::lp_test(&config),
        Command::Report { inputs } => commands::report(&config, inputs),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(v) => {
            print!("{}", v.summary);
            if v.failing.is_empty() {
                ExitCode::SUCCESS
            } else {
                eprintln!("failing checks: {}", v.failing.join(", "));
                ExitCode::from(1)
            }
        }
        Err(AppError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(AppError::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
