use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

use hgsim::config::Kind;
use hgsim::output::metrics_text;
use hgsim::{execute, parse_config, workers_from_env, Format, RunOptions, RunnerError, WORKERS_ENV};
use hgsim_core::exec::{init_workers, Execution};

#[derive(Parser)]
#[command(name = "hgsim", version, about = "Hermite-Gaussian trapped-ion simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Equilibrium positions and axial normal modes
    Modes(Common),
    /// Beam field, gradient, widths and crosstalk
    Beam(Common),
    /// Excitation spectrum of one addressed ion
    Spectrum(Common),
    /// Single-ion state-dependent force: profile, detuned oscillation or thermometry
    Sdf(Common),
    /// One gate (or back-to-back gates) with populations and phase-space trajectory
    Gate(Common),
    /// Bell-state populations and parity scan with detection errors
    Bell(Common),
    /// Fidelity and pairwise parity contrast over repeated gates
    Repeat(Common),
    /// Gate fidelity over chain lengths and mediating modes
    Sweep(Common),
    /// Per-source error budget
    Budget(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML)
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Seed for stochastic parts; overrides the config
    #[arg(long, value_name = "INT")]
    seed: Option<u64>,
    /// Output directory; overrides the config
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Output format; overrides the config
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Run sweep points and budget sources one at a time
    #[arg(long)]
    sequential: bool,
}

impl Command {
    fn parts(&self) -> (Kind, &Common) {
        match self {
            Command::Modes(c) => (Kind::Modes, c),
            Command::Beam(c) => (Kind::BeamProfile, c),
            Command::Spectrum(c) => (Kind::Spectrum, c),
            Command::Sdf(c) => (Kind::SdfSingle, c),
            Command::Gate(c) => (Kind::Gate, c),
            Command::Bell(c) => (Kind::Bell, c),
            Command::Repeat(c) => (Kind::RepeatGates, c),
            Command::Sweep(c) => (Kind::ChainSweep, c),
            Command::Budget(c) => (Kind::Budget, c),
        }
    }
}

fn run(cli: Cli) -> Result<(), RunnerError> {
    if let Some(n) = workers_from_env(std::env::var(WORKERS_ENV).ok().as_deref())? {
        init_workers(n);
    }
    let (kind, args) = cli.command.parts();
    let mut scenario = parse_config(&args.config)?;
    if scenario.kind != kind {
        return Err(RunnerError::KindMismatch {
            expected: kind.command().to_string(),
            found: scenario.kind.name().to_string(),
        });
    }
    if let Some(seed) = args.seed {
        scenario.seed = Some(seed);
    }
    let section = scenario.output.clone();
    let out_dir = args
        .out
        .clone()
        .or_else(|| section.as_ref().and_then(|o| o.dir.clone()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("hgsim-out").join(kind.name()));
    let format = match args.format {
        Some(FormatArg::Csv) => Format::Csv,
        Some(FormatArg::Json) => Format::Json,
        None => section.and_then(|o| o.format).unwrap_or_default(),
    };
    let opts = RunOptions {
        out_dir,
        format,
        execution: if args.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        },
    };
    let (report, _) = execute(&scenario, &opts)?;
    print!("{}", metrics_text(&report.metrics));
    for f in &report.manifest {
        println!("wrote {}", opts.out_dir.join(f).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
