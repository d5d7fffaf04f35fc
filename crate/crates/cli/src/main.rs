mod commands;
mod grid;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nonext::infogeo::MetricOptions;

use commands::{InputError, MatrixKind, SolverSettings};

/// Nonextensive entropies, maximum-entropy states and information metrics
/// for finite-dimensional density matrices.
#[derive(Parser)]
#[command(name = "nonext", version)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Density,
    Hermitian,
}

#[derive(Subcommand)]
enum Command {
    /// Check a matrix file for Hermiticity, positivity and unit trace.
    Validate {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Kind::Density)]
        kind: Kind,
    },
    /// Normalized Tsallis entropy of a state.
    Entropy {
        file: PathBuf,
        #[command(flatten)]
        q: QArgs,
    },
    /// Normalized q-divergence in both orders and their sum.
    Divergence {
        rho: PathBuf,
        sigma: PathBuf,
        #[command(flatten)]
        q: QArgs,
    },
    /// Self-consistent maximum-entropy state of a Hamiltonian.
    Equilibrium {
        hamiltonian: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        #[arg(long)]
        q: f64,
        #[command(flatten)]
        solver: SolverArgs,
        /// Also solve from the maximally mixed start and warn on disagreement.
        #[arg(long)]
        multistart: bool,
    },
    /// Equilibrium quantities over a q by beta grid.
    Scan {
        hamiltonian: PathBuf,
        #[command(flatten)]
        q: QArgs,
        #[command(flatten)]
        beta: BetaArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Classical and quantum metric along a curve, with the divergence check.
    Metric {
        curve: PathBuf,
        #[arg(long)]
        q: f64,
        /// Step of the divergence estimate [default: grid spacing].
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        richardson: bool,
        /// Fail instead of flagging when branch tracking is ambiguous.
        #[arg(long)]
        strict_degeneracy: bool,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct QArgs {
    #[arg(long)]
    q: Option<f64>,
    /// Evenly spaced q values, `start:end:count`.
    #[arg(long, value_name = "A:B:N")]
    q_range: Option<String>,
}

impl QArgs {
    fn values(&self) -> Result<Vec<f64>, InputError> {
        match (&self.q, &self.q_range) {
            (Some(q), _) => Ok(vec![*q]),
            (None, Some(r)) => grid::parse_range(r).map_err(InputError),
            (None, None) => Err(InputError("one of --q or --q-range is required".into())),
        }
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct BetaArgs {
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// Evenly spaced beta values, `start:end:count`.
    #[arg(long, value_name = "A:B:N", allow_hyphen_values = true)]
    beta_range: Option<String>,
}

impl BetaArgs {
    fn values(&self) -> Result<Vec<f64>, InputError> {
        match (&self.beta, &self.beta_range) {
            (Some(b), _) => Ok(vec![*b]),
            (None, Some(r)) => grid::parse_range(r).map_err(InputError),
            (None, None) => Err(InputError(
                "one of --beta or --beta-range is required".into(),
            )),
        }
    }
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 0.5)]
    damping: f64,
    /// `gibbs_q1`, `maximally_mixed` or the path of a state file.
    #[arg(long, default_value = "gibbs_q1")]
    init: String,
}

impl SolverArgs {
    fn settings(&self) -> SolverSettings {
        SolverSettings {
            tol: self.tol,
            max_iter: self.max_iter,
            damping: self.damping,
            init: self.init.clone(),
        }
    }
}

fn run(cli: &Cli) -> Result<report::Report, InputError> {
    let threads = grid::threads().map_err(InputError)?;
    match &cli.command {
        Command::Validate { file, kind } => {
            let kind = match kind {
                Kind::Density => MatrixKind::Density,
                Kind::Hermitian => MatrixKind::Hermitian,
            };
            Ok(commands::validate(file, kind))
        }
        Command::Entropy { file, q } => commands::entropy(file, &q.values()?),
        Command::Divergence { rho, sigma, q } => commands::divergence(rho, sigma, &q.values()?),
        Command::Equilibrium {
            hamiltonian,
            beta,
            q,
            solver,
            multistart,
        } => commands::equilibrium(hamiltonian, *beta, *q, &solver.settings(), *multistart),
        Command::Scan {
            hamiltonian,
            q,
            beta,
            solver,
        } => commands::scan(
            hamiltonian,
            &q.values()?,
            &beta.values()?,
            &solver.settings(),
            threads,
        ),
        Command::Metric {
            curve,
            q,
            h,
            richardson,
            strict_degeneracy,
        } => commands::metric(
            curve,
            *q,
            MetricOptions {
                h: *h,
                richardson: *richardson,
                strict_degeneracy: *strict_degeneracy,
            },
            threads,
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let start = Instant::now();
    match run(&cli) {
        Ok(report) => {
            let text = match cli.format {
                Format::Json => report.to_json(),
                Format::Csv => report.to_csv(),
            };
            print!("{text}");
            eprintln!(
                "nonext {}: {:?} in {:.3} s",
                report.command,
                report.status,
                start.elapsed().as_secs_f64()
            );
            if let Some(e) = &report.error {
                eprintln!("error: {e}");
            }
            ExitCode::from(report.status.exit_code())
        }
        Err(InputError(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}
