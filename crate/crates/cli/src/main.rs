mod commands;
mod config;
mod output;

use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{CommonArgs, Format, RunConfig};

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Self { code: 2, message: msg.into() }
    }

    pub fn degenerate(msg: impl Into<String>) -> Self {
        Self { code: 3, message: msg.into() }
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Self { code: 4, message: msg.into() }
    }
}

impl From<dnls_ring::Error> for CliError {
    fn from(e: dnls_ring::Error) -> Self {
        use dnls_ring::Error as E;
        let code = match e {
            E::TooFewOscillators(_)
            | E::InvalidAmplitude(_)
            | E::ModeOutOfRange { .. }
            | E::DimensionMismatch { .. }
            | E::UndefinedDelta { .. }
            | E::Potential(_)
            | E::InvalidArgument(_) => 2,
            E::DegenerateAmplitude { .. } => 3,
            _ => 4,
        };
        Self { code, message: e.to_string() }
    }
}

/// Bifurcation analysis of periodic orbits from the rotating wave of a DNLS ring.
#[derive(Parser)]
#[command(name = "dnls-ring", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Rotating-wave state, its frequency and gradient residual.
    Equilibrium,
    /// Coefficients and 2x2 blocks of the Hessian in the isotypic basis.
    Blocks,
    /// Bifurcation points at one amplitude or over a range.
    Bifurcations,
    /// Linear stability verdict with a spectral cross-check.
    Stability,
    /// Continue one branch numerically and check it against the prediction.
    Verify,
    /// Regime structure and plot data over an amplitude range.
    Sweep,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Equilibrium => "equilibrium",
            Command::Blocks => "blocks",
            Command::Bifurcations => "bifurcations",
            Command::Stability => "stability",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
        }
    }
}

fn run(cli: Cli) -> Result<Option<CliError>, CliError> {
    let cfg = RunConfig::resolve(cli.command.name(), cli.common)?;
    let emit = match cli.command {
        Command::Equilibrium => commands::equilibrium(&cfg),
        Command::Blocks => commands::blocks(&cfg),
        Command::Bifurcations => commands::bifurcations(&cfg),
        Command::Stability => commands::stability(&cfg),
        Command::Verify => commands::verify(&cfg),
        Command::Sweep => commands::sweep(&cfg),
    }?;
    let bytes = match cfg.format {
        Format::Json => output::render_json(&cfg, emit.payload),
        Format::Csv => output::render_csv(&emit.table)?,
    };
    match &cfg.out {
        Some(path) => fs::write(path, &bytes).map_err(|e| CliError::invalid(format!("cannot write {path}: {e}")))?,
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| CliError::numerical(format!("stdout: {e}")))?,
    }
    Ok(emit.failure)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(e)) | Err(e) => {
            eprintln!("dnls-ring: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
