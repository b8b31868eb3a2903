//! Command-line entry point.
//!
//! Exit codes: 0 success, 1 configuration/usage error, 2 runtime abort.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mgsim::analysis::{dominant_frequency, SpectrumConfig};
use mgsim::config::{parse_config, parse_duration, ScenarioConfig};
use mgsim::io::{write_waveforms, RunManifest};
use mgsim::rt::split::{
    read_interval_log, run_rt_controller, run_rt_plant, write_interval_log, RtRunResult,
};
use mgsim::rt::{histogram, interval_stats};
use mgsim::scenario::{group_by_timebase, run_scenario};
use mgsim::waveform::Waveform;

#[derive(Parser)]
#[command(name = "mgsim", version, about = "Deterministic mixed-signal microgrid simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario configuration file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Time step override, seconds or with unit suffix (ns/us/ms/s).
    #[arg(long)]
    dt: Option<String>,
    /// Duration override, seconds or with unit suffix.
    #[arg(long)]
    duration: Option<String>,
}

#[derive(Args)]
struct RtArgs {
    /// Scenario configuration file (JSON, scenario `dc`).
    #[arg(long)]
    config: PathBuf,
    /// Address this side's publisher listens on (host:port).
    #[arg(long)]
    bind: String,
    /// Address of the peer's publisher (host:port).
    #[arg(long)]
    connect: String,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write waveform CSVs plus a manifest.
    Run(RunArgs),
    /// Run a scenario once per time step and report the dominant frequency.
    SweepDt {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated step list, e.g. `20ns,50us,5ms`.
        #[arg(long)]
        steps: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Real-time plant side of the split DC run.
    RtPlant(RtArgs),
    /// Real-time secondary-controller side of the split DC run.
    RtController(RtArgs),
    /// Interval statistics of a publish-timestamp log.
    Stats {
        /// Interval log CSV (`topic,seq,wall_ns`).
        #[arg(long)]
        log: PathBuf,
        /// Histogram bin width in seconds.
        #[arg(long, default_value_t = 1e-4)]
        bin_width: f64,
    },
}

enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(1),
            CliError::Runtime(_) => ExitCode::from(2),
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }
}

fn config_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

fn load_config(args: &RunArgs) -> Result<ScenarioConfig, CliError> {
    let mut cfg = parse_config(&args.config).map_err(config_err)?;
    if let Some(dt) = &args.dt {
        cfg.dt = parse_duration(dt).map_err(config_err)?;
    }
    if let Some(d) = &args.duration {
        cfg.duration = parse_duration(d).map_err(config_err)?;
    }
    if let Some(out) = &args.out {
        cfg.out = out.clone();
    }
    cfg.validate().map_err(config_err)?;
    Ok(cfg)
}

/// Deterministic output file names: `<scenario>.csv` for the first time-base
/// group, `<scenario>_2.csv` and so on for further groups.
fn output_names(cfg: &ScenarioConfig, n_groups: usize) -> Vec<String> {
    (0..n_groups)
        .map(|g| {
            if g == 0 {
                format!("{}.csv", cfg.scenario)
            } else {
                format!("{}_{}.csv", cfg.scenario, g + 1)
            }
        })
        .collect()
}

fn write_run_outputs(cfg: &ScenarioConfig, ws: Vec<Waveform>) -> Result<Vec<PathBuf>, CliError> {
    let groups = group_by_timebase(ws);
    let names = output_names(cfg, groups.len());
    let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    // The manifest goes to disk before any waveform file.
    RunManifest::new(cfg, &name_refs).write(&cfg.out).map_err(runtime_err)?;
    let mut paths = Vec::new();
    for (group, name) in groups.iter().zip(&names) {
        let path = cfg.out.join(name);
        write_waveforms(group, &path).map_err(runtime_err)?;
        paths.push(path);
    }
    Ok(paths)
}

fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let cfg = load_config(args)?;
    let ws = run_scenario(&cfg).map_err(runtime_err)?;
    let paths = write_run_outputs(&cfg, ws)?;
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_sweep_dt(config: &PathBuf, steps: &str, out: Option<&PathBuf>) -> Result<(), CliError> {
    let base = parse_config(config).map_err(config_err)?;
    let steps: Vec<(String, f64)> = steps
        .split(',')
        .map(|s| parse_duration(s).map(|v| (s.trim().to_string(), v)))
        .collect::<Result<_, _>>()
        .map_err(config_err)?;
    if steps.is_empty() {
        return Err(CliError::Config("empty step list".into()));
    }
    println!("{:>12}  {:>16}", "dt", "dominant rad/s");
    for (label, dt) in steps {
        let mut cfg = base.clone();
        cfg.dt = dt;
        if let Some(out) = out {
            cfg.out = out.join(format!("sweep_{label}"));
        } else {
            cfg.out = base.out.join(format!("sweep_{label}"));
        }
        cfg.validate().map_err(config_err)?;
        let ws = run_scenario(&cfg).map_err(runtime_err)?;
        let lead = ws[0].clone();
        write_run_outputs(&cfg, ws)?;
        // Analyze the opening transient only: a few natural periods fit in
        // 10 ms while the mains-frequency drive is still below the analyzer's
        // minimum-cycles cutoff, so the table shows which steps resolve the
        // ringing rather than the steady drive.
        let window = cfg.duration.min(10e-3);
        let dominant = dominant_frequency(&lead, 0.0, window, &SpectrumConfig::default());
        match dominant {
            Some(f) => println!("{label:>12}  {f:>16.1}"),
            None => println!("{label:>12}  {:>16}", "none"),
        }
    }
    Ok(())
}

fn report_rt(result: &RtRunResult, side: &str) {
    match interval_stats(&result.log) {
        Ok(s) => println!(
            "{side}: {} publishes, interval mean {:.5} ms, median {:.5} ms, std {:.5} ms, {} deadline misses",
            s.count + 1,
            s.mean * 1e3,
            s.median * 1e3,
            s.std * 1e3,
            result.deadline_misses
        ),
        Err(e) => println!("{side}: no interval statistics ({e})"),
    }
}

fn cmd_rt(args: &RtArgs, plant: bool) -> Result<(), CliError> {
    let cfg = {
        let mut cfg = parse_config(&args.config).map_err(config_err)?;
        if let Some(out) = &args.out {
            cfg.out = out.clone();
        }
        cfg
    };
    let (result, side) = if plant {
        (run_rt_plant(&cfg, &args.bind, &args.connect).map_err(runtime_err)?, "plant")
    } else {
        (run_rt_controller(&cfg, &args.bind, &args.connect).map_err(runtime_err)?, "controller")
    };
    std::fs::create_dir_all(&cfg.out).map_err(runtime_err)?;
    let csv = cfg.out.join(format!("rt_{side}.csv"));
    write_waveforms(&result.waveforms, &csv).map_err(runtime_err)?;
    let log_path = cfg.out.join(format!("rt_{side}_intervals.csv"));
    write_interval_log(&result.log, &log_path).map_err(runtime_err)?;
    report_rt(&result, side);
    Ok(())
}

fn cmd_stats(log: &PathBuf, bin_width: f64) -> Result<(), CliError> {
    let log = read_interval_log(log).map_err(config_err)?;
    let s = interval_stats(&log).map_err(runtime_err)?;
    println!(
        "topic {}: {} intervals, mean {:.5} ms, median {:.5} ms, std {:.5} ms, min {:.5} ms, max {:.5} ms",
        log.topic,
        s.count,
        s.mean * 1e3,
        s.median * 1e3,
        s.std * 1e3,
        s.min * 1e3,
        s.max * 1e3
    );
    for (edge, count) in histogram(&log, bin_width) {
        println!("{:>10.4} ms  {count}", edge * 1e3);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::SweepDt { config, steps, out } => cmd_sweep_dt(config, steps, out.as_ref()),
        Command::RtPlant(args) => cmd_rt(args, true),
        Command::RtController(args) => cmd_rt(args, false),
        Command::Stats { log, bin_width } => cmd_stats(log, *bin_width),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}
