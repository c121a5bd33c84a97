use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qsink_cli::commands::{cmd_check, cmd_gen, cmd_solve, CliError, GenOptions, Named, SolveOptions};
use qsink_cli::io::{InstanceFile, Kind};

#[derive(Parser)]
#[command(name = "qsink", version, about = "Entropic quantum multi-marginal optimal transport")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and print the result document.
    ///
    /// Exit codes: 0 converged, 1 numerical failure, 2 not converged,
    /// 3 Pauli infeasible or on the Pauli boundary, 4 invalid input.
    Solve {
        instance: PathBuf,
        /// Write the result here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Marginal residual tolerance.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        gap_tol: Option<f64>,
        #[arg(long)]
        max_sweeps: Option<usize>,
        /// Include the optimal coupling on the full space.
        #[arg(long)]
        emit_gamma: bool,
        /// Write one JSON line per sweep to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Start from random potentials drawn with this seed.
        #[arg(long)]
        seeded_init: Option<u64>,
        /// Also run the dense oracle and report the differences.
        #[arg(long)]
        oracle: bool,
        /// No summary on stderr.
        #[arg(short, long)]
        quiet: bool,
    },
    /// Validate an instance without solving it.
    ///
    /// Exit codes: 0 clean, 3 only Pauli findings, 4 other findings.
    Check { instance: PathBuf },
    /// Generate an instance.
    ///
    /// All random draws come from a ChaCha8 stream seeded with --seed:
    /// marginals slot by slot, then the Hamiltonian. For sector kinds the
    /// single-particle marginal is drawn first, then the Hamiltonian.
    Gen {
        #[arg(long, value_enum)]
        named: Option<NamedArg>,
        #[arg(long, value_enum, default_value = "general")]
        kind: KindArg,
        /// Comma-separated slot dimensions, or the single-particle dimension.
        #[arg(long, value_delimiter = ',', default_value = "2,2")]
        dims: Vec<usize>,
        /// Particle number for sector kinds.
        #[arg(long, default_value_t = 2)]
        particles: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 1.0)]
        h_norm: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum NamedArg {
    Zero,
    Diagonal,
    Swap,
    Gibbs,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    General,
    Bosonic,
    Fermionic,
}

fn emit(text: &str, output: Option<&Path>) -> Result<(), CliError> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => match writeln!(std::io::stdout().lock(), "{text}") {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io(format!("stdout: {e}"))),
            _ => Ok(()),
        },
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Solve {
            instance,
            output,
            tol,
            gap_tol,
            max_sweeps,
            emit_gamma,
            trace,
            seeded_init,
            oracle,
            quiet,
        } => {
            let opts = SolveOptions {
                tol,
                gap_tol,
                max_sweeps,
                emit_gamma,
                trace_path: trace,
                seeded_init,
                oracle,
            };
            let (result, code) = match InstanceFile::load(&instance) {
                Ok(file) => cmd_solve(&file, &opts),
                Err(e) => (e.to_result(), e.exit_code()),
            };
            if !quiet {
                match (&result.error, result.gap) {
                    (Some(err), _) => eprintln!("qsink: {err}: {}", result.message.as_deref().unwrap_or("")),
                    (None, Some(gap)) => eprintln!("qsink: converged in {} sweeps, gap {gap:.3e}", result.sweeps),
                    _ => {}
                }
            }
            emit(&result.to_json(), output.as_deref())?;
            Ok(code)
        }
        Command::Check { instance } => {
            let file = InstanceFile::load(&instance)?;
            let (report, code) = cmd_check(&file);
            emit(&serde_json::to_string_pretty(&report).expect("report serializes"), None)?;
            Ok(code)
        }
        Command::Gen {
            named,
            kind,
            dims,
            particles,
            seed,
            epsilon,
            h_norm,
            output,
        } => {
            let opts = GenOptions {
                named: named.map(|n| match n {
                    NamedArg::Zero => Named::Zero,
                    NamedArg::Diagonal => Named::Diagonal,
                    NamedArg::Swap => Named::Swap,
                    NamedArg::Gibbs => Named::Gibbs,
                }),
                kind: match kind {
                    KindArg::General => Kind::General,
                    KindArg::Bosonic => Kind::Bosonic,
                    KindArg::Fermionic => Kind::Fermionic,
                },
                dims,
                particles,
                seed,
                epsilon,
                h_norm,
            };
            let file = cmd_gen(&opts)?;
            emit(&file.to_json(), output.as_deref())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = run(cli).unwrap_or_else(|e| {
        eprintln!("qsink: {e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
