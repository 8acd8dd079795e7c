use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ecadd::ec::{AffinePoint, CurveParams, VariantName};
use ecadd::harness::{self, FuzzMode, HarnessError, RunReport};

/// Verification harness for the reversible elliptic-curve point-addition circuit.
#[derive(Parser)]
#[command(name = "ecadd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Args)]
struct Fixture {
    /// Curve fixture, e.g. {"p": 17, "c1": 0, "c2": 7, "n": 5}.
    #[arg(long)]
    curve: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Structural validation and per-step census check.
    Validate {
        #[command(flatten)]
        fixture: Fixture,
        #[arg(long, default_value = "corrected")]
        variant: VariantName,
    },
    /// Adds two points through the circuit.
    Simulate {
        #[command(flatten)]
        fixture: Fixture,
        #[arg(long)]
        px: u64,
        #[arg(long)]
        py: u64,
        #[arg(long)]
        qx: u64,
        #[arg(long)]
        qy: u64,
        #[arg(long, default_value = "corrected")]
        variant: VariantName,
        /// Include the step-level trace.
        #[arg(long)]
        trace: bool,
    },
    /// Gate census, symbolic Toffoli total and peak ancilla.
    Census {
        #[command(flatten)]
        fixture: Fixture,
        /// Also evaluate at this bit width.
        #[arg(long, conflicts_with = "symbolic")]
        n: Option<i64>,
        /// Report symbolic costs only (the default).
        #[arg(long)]
        symbolic: bool,
        /// One variant, or two to report their cost difference.
        #[arg(long, num_args = 1, action = clap::ArgAction::Append, default_value = "corrected")]
        variant: Vec<VariantName>,
    },
    /// Checks many input pairs against the reference group law.
    Fuzz {
        #[command(flatten)]
        fixture: Fixture,
        /// Every ordered pair of points (the default).
        #[arg(long, conflicts_with = "samples")]
        exhaustive: bool,
        /// Number of uniformly drawn pairs.
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 0, requires = "samples")]
        seed: u64,
        #[arg(long, default_value = "corrected")]
        variant: VariantName,
    },
    /// Runs each buggy variant on its trigger inputs next to the corrected circuit.
    ReproBugs {
        #[command(flatten)]
        fixture: Fixture,
    },
}

fn run(command: Command) -> Result<RunReport, HarnessError> {
    let load = |f: &Fixture| CurveParams::load(&f.curve);
    match command {
        Command::Validate { fixture, variant } => harness::cmd_validate(&load(&fixture)?, variant),
        Command::Simulate { fixture, px, py, qx, qy, variant, trace } => harness::cmd_simulate(
            &load(&fixture)?,
            AffinePoint::new(px, py),
            AffinePoint::new(qx, qy),
            variant,
            trace,
        ),
        Command::Census { fixture, n, variant, .. } => harness::cmd_census(&load(&fixture)?, &variant, n),
        Command::Fuzz { fixture, samples, seed, variant, .. } => {
            let mode = match samples {
                Some(samples) => FuzzMode::Sampled { samples, seed },
                None => FuzzMode::Exhaustive,
            };
            harness::cmd_fuzz(&load(&fixture)?, variant, mode)
        }
        Command::ReproBugs { fixture } => harness::cmd_repro_bugs(&load(&fixture)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::Census { variant, .. } = &cli.command {
        if variant.len() > 2 {
            eprintln!("error: census takes at most two --variant values");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(report) => {
            let text = match cli.format {
                Format::Json => report.to_json() + "\n",
                Format::Table => report.to_table(),
            };
            // A closed pipe is not an error worth reporting.
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
