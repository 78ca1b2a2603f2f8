mod commands;
mod config;
mod error;
mod output;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use commands::{execute, Op};
use config::RawConfig;
use error::CliError;

const DEFAULT_OUT: &str = "qdsim-out";

#[derive(Debug, Parser)]
#[command(name = "qdsim", version, about = "Quantum-dot cavity QED simulations from a config file")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a parameter, `section.key=value`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// RNG seed; same as `--set run.seed=N`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Output directory. Defaults to [run] out, then $QDSIM_OUT, then ./qdsim-out.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form figures of merit of the device.
    Figures,
    /// Extraction efficiency against pillar diameter.
    SweepDesign,
    /// Steady-state reflectivity against detuning.
    Spectrum,
    /// Steady-state reflectivity against incident flux.
    PowerSweep,
    /// Pulsed reflectivity against photons per pulse, with threshold.
    PulseThreshold,
    /// Linear reflectivity over temperature and laser frequency.
    TempMap,
    /// Spin-dependent polarization rotation.
    Kerr,
    /// Second-order autocorrelation of the pulsed source.
    G2,
    /// Two-photon interference visibility.
    Hom,
    /// Brightness against indistinguishability for two pumping schemes.
    Tradeoff,
    /// Linear-optics CNOT gate.
    Gate {
        #[command(subcommand)]
        cmd: GateCmd,
    },
    /// Charge sensing from a reflectivity trace.
    Sense {
        #[command(subcommand)]
        cmd: SenseCmd,
    },
}

#[derive(Debug, Subcommand)]
enum GateCmd {
    TruthTable {
        /// Wavepacket overlap of the two photons.
        #[arg(long = "M")]
        m: Option<f64>,
    },
    Fidelity {
        #[arg(long = "M")]
        m: Option<f64>,
    },
    Sweep,
}

#[derive(Debug, Subcommand)]
enum SenseCmd {
    Trace,
    Histogram,
    ErrorCurve,
}

impl Command {
    fn op(&self) -> (Op, Option<f64>) {
        match self {
            Command::Figures => (Op::Figures, None),
            Command::SweepDesign => (Op::SweepDesign, None),
            Command::Spectrum => (Op::Spectrum, None),
            Command::PowerSweep => (Op::PowerSweep, None),
            Command::PulseThreshold => (Op::PulseThreshold, None),
            Command::TempMap => (Op::TempMap, None),
            Command::Kerr => (Op::Kerr, None),
            Command::G2 => (Op::G2, None),
            Command::Hom => (Op::Hom, None),
            Command::Tradeoff => (Op::Tradeoff, None),
            Command::Gate { cmd: GateCmd::TruthTable { m } } => (Op::GateTruthTable, *m),
            Command::Gate { cmd: GateCmd::Fidelity { m } } => (Op::GateFidelity, *m),
            Command::Gate { cmd: GateCmd::Sweep } => (Op::GateSweep, None),
            Command::Sense { cmd: SenseCmd::Trace } => (Op::SenseTrace, None),
            Command::Sense { cmd: SenseCmd::Histogram } => (Op::SenseHistogram, None),
            Command::Sense { cmd: SenseCmd::ErrorCurve } => (Op::SenseErrorCurve, None),
        }
    }
}

fn load_config(cli: &Cli, m: Option<f64>) -> Result<RawConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RawConfig::load(path)?,
        None => RawConfig::default(),
    };
    for s in &cli.set {
        cfg.set(s)?;
    }
    if let Some(seed) = cli.seed {
        cfg.set_value("run.seed", &seed.to_string())?;
    }
    if let Some(m) = m {
        cfg.set_value("gate.m", &m.to_string())?;
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: &RawConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.string("run.out").map(PathBuf::from))
        .or_else(|| std::env::var_os("QDSIM_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn run(cli: Cli) -> Result<Value, CliError> {
    let started = Instant::now();
    let (op, m) = cli.command.op();
    let cfg = load_config(&cli, m)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(match cli.jobs {
            Some(0) => return Err(CliError::Usage("--jobs must be at least 1".into())),
            Some(n) => n,
            None => 0,
        })
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let sweeping = cfg.contains("sweep.axis1") || cfg.contains("sweep.axis2");
    if op.stochastic() {
        commands::seed(&cfg)?;
    }
    let report = pool.install(|| if sweeping { sweep::run_sweep(op, &cfg) } else { execute(op, &cfg) })?;

    let dir = out_dir(&cli, &cfg);
    let mut files = Vec::new();
    for t in &report.tables {
        output::write_atomic(&dir, &t.file, t.to_csv().as_bytes())?;
        files.push(t.file.clone());
    }
    let hash = cfg.hash();
    let version = env!("CARGO_PKG_VERSION");
    let command_file = format!("{}.json", op.name());
    files.push(command_file.clone());
    output::write_json(
        &dir,
        &command_file,
        &json!({
            "command": op.name(),
            "sweep": sweeping,
            "config_hash": hash,
            "version": version,
            "scalars": report.scalars,
            "details": report.details,
            "files": files,
        }),
    )?;
    files.push("summary.json".into());
    let summary = json!({
        "command": op.name(),
        "config_hash": hash,
        "version": version,
        "outputs": report.scalars,
        "out_dir": dir.display().to_string(),
        "files": files,
        "wall_clock_seconds": started.elapsed().as_secs_f64(),
    });
    output::write_json(&dir, "summary.json", &summary)?;
    Ok(summary)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Usage(e.to_string().trim_end().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
