use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ionjc::experiments::{self, ExperimentConfig, Format};
use ionjc::Error;

/// N-ion Jaynes-Cummings experiments.
///
/// Exit codes: 0 success, 1 runtime or I/O failure, 2 configuration error,
/// 3 numerical validation failure.
#[derive(Parser, Debug)]
#[command(name = "ionjc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file; defaults to the config's output path, then stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Worker threads for sweeps and time series (0 = all cores).
    #[arg(long, global = true, env = "IONJC_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Normal-mode frequencies, mode matrix and Lamb-Dicke factors.
    Modes,
    /// Sideband offsets and field-corrected resonance detunings.
    Resonance,
    /// Balanced vs standard RWA infidelity over a Rabi-frequency grid.
    SweepRabi,
    /// Population and phonon time series of an initial state.
    Evolve,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Modes => "modes",
            Command::Resonance => "resonance",
            Command::SweepRabi => "sweep-rabi",
            Command::Evolve => "evolve",
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::InvalidConfig(_)
        | Error::InvalidDrive(_)
        | Error::InvalidTime(_)
        | Error::Json(_)
        | Error::NoDrive { .. }
        | Error::ModeOutOfRange { .. }
        | Error::SpinOutOfRange { .. }
        | Error::DriveOutOfRange { .. }
        | Error::MissingResonance
        | Error::OverlappingResonances { .. }
        | Error::SingleDriveRequired(_) => 2,
        Error::Validation(_) | Error::NotHermitian { .. } | Error::EquilibriumNotConverged { .. } => 3,
        _ => 1,
    }
}

fn execute(cli: &Cli) -> ionjc::Result<()> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config <path> is required".into()))?;
    let cfg = ExperimentConfig::from_path(path)?;
    let threads = cli.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let table = pool.install(|| experiments::run(cli.command.name(), &cfg))?;

    let output = cfg.output.clone().unwrap_or_default();
    let format = cli.format.unwrap_or(output.format);
    let stamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    match cli.out.clone().or(output.path.map(PathBuf::from)) {
        Some(p) => {
            let mut w = BufWriter::new(File::create(&p)?);
            table.write(&mut w, format, &stamp)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            table.write(stdout.lock(), format, &stamp)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ionjc: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
