mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CliError, Ctx};
use config::Resolver;
use output::{write_outputs, Format, RunInfo};

#[derive(Parser)]
#[command(name = "qrt", version, about = "Critical metrology in the three-site chiral Rabi ring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file (key = value with [sections]).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; defaults to <command>.<format>. A manifest is written to <out>.manifest.json.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Seed for the mean-field multi-start.
    #[arg(long, global = true, default_value_t = qrt::SolverOptions::default().seed)]
    seed: u64,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Boundary curves g1c(θ) per soft mode and a phase-label grid.
    PhaseDiagram,
    /// QFI, photon statistics and soft gap along g1 or θ.
    Sweep,
    /// Power-law exponents from a sweep table.
    Fit,
    /// Effective-theory QFI and gap against exact diagonalization.
    OracleCompare,
    /// Photon-number measurement at a single point.
    Measure,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::PhaseDiagram => "phase-diagram",
            Command::Sweep => "sweep",
            Command::Fit => "fit",
            Command::OracleCompare => "oracle-compare",
            Command::Measure => "measure",
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let text = match &cli.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?,
        None => String::new(),
    };
    let raw = config::parse(&text)?;
    let mut r = Resolver::new(&raw);
    if cli.threads == 0 {
        return Err(CliError::Config("--threads must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build().map_err(|e| CliError::Run(e.to_string()))?;
    let ctx = Ctx { format: cli.format, seed: cli.seed, pool };
    let data = match cli.command {
        Command::PhaseDiagram => commands::phase_diagram(&mut r, &ctx)?,
        Command::Sweep => commands::sweep_cmd(&mut r, &ctx)?,
        Command::Fit => commands::fit_cmd(&mut r, &ctx)?,
        Command::OracleCompare => commands::oracle_compare(&mut r, &ctx)?,
        Command::Measure => commands::measure_cmd(&mut r, &ctx)?,
    };
    let ext = match cli.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}.{ext}", cli.command.name())));
    let info = RunInfo {
        command: cli.command.name(),
        config_path: cli.config.as_deref(),
        resolved: &r.resolved,
        format: cli.format,
        seed: cli.seed,
        threads: cli.threads,
    };
    write_outputs(&out, &data, &info).map_err(|e| CliError::Run(format!("cannot write {}: {e}", out.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qrt {}: {}", cli.command.name(), e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
