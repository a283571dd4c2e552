//! Command-line front end: validate scenario files, run them, and audit
//! the logs they produce.
//!
//! Exit codes: 0 success, 1 invalid scenario or metrics mismatch, 2 for
//! I/O and usage errors.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};

use nrsim_core::batch::run_batch_with_jobs;
use nrsim_core::sim::event::{EventKind, EventLog};
use nrsim_core::{Metrics, Scenario};

#[derive(Parser)]
#[command(name = "nrsim", version, about = "Broadcast-plane attack simulator")]
struct Cli {
    /// Worker threads for batch runs (default: one per core)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a scenario file and report whether it is well formed
    Validate { file: PathBuf },
    /// Run scenario files, writing an event log and metrics per scenario
    Run {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Output directory
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override every scenario's seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Recompute metrics from an event log and cross-check metrics.csv
    Report { log: PathBuf },
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

type CliResult = Result<(), Failure>;

fn invalid(error: anyhow::Error) -> Failure {
    Failure { code: 1, error }
}

fn io_failure(error: anyhow::Error) -> Failure {
    Failure { code: 2, error }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("NRSIM_LOG")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { file } => validate(&file),
        Command::Run { files, out, seed } => run(&files, &out, seed, cli.jobs),
        Command::Report { log } => report(&log),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            ExitCode::from(failure.code)
        }
    }
}

fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(io_failure)?;
    Scenario::parse(&text)
        .with_context(|| format!("scenario {}", path.display()))
        .map_err(invalid)
}

fn validate(file: &Path) -> CliResult {
    let sc = load_scenario(file)?;
    println!(
        "ok: {} ({} cells, {} ues, {} ms, seed {})",
        sc.name,
        sc.cells.len(),
        sc.ues.len(),
        sc.duration_ms,
        sc.seed
    );
    Ok(())
}

fn run(files: &[PathBuf], out: &Path, seed: Option<u64>, jobs: Option<usize>) -> CliResult {
    let mut scenarios = Vec::with_capacity(files.len());
    for file in files {
        let mut sc = load_scenario(file)?;
        if let Some(seed) = seed {
            sc.seed = seed;
        }
        scenarios.push(sc);
    }
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, sc) in scenarios.iter().enumerate() {
        if let Some(&first) = seen.get(sc.name.as_str()) {
            return Err(invalid(anyhow!(
                "duplicate scenario name {:?} ({} and {})",
                sc.name,
                files[first].display(),
                files[i].display()
            )));
        }
        seen.insert(sc.name.as_str(), i);
    }

    log::info!("running {} scenario(s)", scenarios.len());
    let outputs = run_batch_with_jobs(&scenarios, jobs);

    for (sc, output) in scenarios.iter().zip(&outputs) {
        let dir = if scenarios.len() == 1 { out.to_path_buf() } else { out.join(&sc.name) };
        fs::create_dir_all(&dir)
            .with_context(|| format!("creating {}", dir.display()))
            .map_err(io_failure)?;
        let log_path = dir.join("events.log");
        let csv_path = dir.join("metrics.csv");
        fs::write(&log_path, output.log.to_text())
            .with_context(|| format!("writing {}", log_path.display()))
            .map_err(io_failure)?;
        fs::write(&csv_path, output.metrics.to_csv())
            .with_context(|| format!("writing {}", csv_path.display()))
            .map_err(io_failure)?;
        let m = &output.metrics;
        println!(
            "{}: {} events, rlf={} reestablish={} si_reacq={} duty={:.6} uptime={:.6} -> {}",
            sc.name,
            output.log.events.len(),
            m.rlf_count,
            m.reestablish_attempts,
            m.si_reacquisitions,
            m.duty_cycle,
            m.connected_uptime_fraction,
            log_path.display()
        );
    }
    Ok(())
}

fn report(log_path: &Path) -> CliResult {
    let text = fs::read_to_string(log_path)
        .with_context(|| format!("reading {}", log_path.display()))
        .map_err(io_failure)?;
    let log = EventLog::parse(&text)
        .with_context(|| format!("parsing {}", log_path.display()))
        .map_err(invalid)?;
    let metrics = Metrics::derive(&log).context("deriving metrics").map_err(invalid)?;

    println!("log: {}", log_path.display());
    for line in &log.header {
        println!("  # {line}");
    }
    println!("events: {}", log.events.len());
    for kind in EventKind::ALL {
        let n = log.events.iter().filter(|e| e.kind == kind).count();
        if n > 0 {
            println!("  {}: {}", kind.as_str(), n);
        }
    }

    println!("metrics:");
    let csv = metrics.to_csv();
    let mut lines = csv.lines();
    let (header, row) = (lines.next().unwrap_or(""), lines.next().unwrap_or(""));
    for (key, value) in header.split(',').zip(row.split(',')) {
        println!("  {key}={}", if value.is_empty() { "-" } else { value });
    }

    let reacq: Vec<u64> = log
        .events
        .iter()
        .filter(|e| e.kind == EventKind::SiReacquisition)
        .map(|e| e.time_ms)
        .collect();
    if reacq.len() > 1 {
        let gaps: Vec<u64> = reacq.windows(2).map(|w| w[1] - w[0]).collect();
        let mean = gaps.iter().sum::<u64>() as f64 / gaps.len() as f64;
        println!(
            "si reacquisition intervals ms: n={} min={} mean={:.1} max={}",
            gaps.len(),
            gaps.iter().min().unwrap(),
            mean,
            gaps.iter().max().unwrap()
        );
    }
    let rlfs: Vec<String> = log
        .events
        .iter()
        .filter(|e| e.kind == EventKind::Rlf)
        .map(|e| e.time_ms.to_string())
        .collect();
    if !rlfs.is_empty() {
        println!("rlf times ms: {}", rlfs.join(" "));
    }

    let csv_path = log_path.parent().unwrap_or(Path::new(".")).join("metrics.csv");
    match fs::read_to_string(&csv_path) {
        Ok(stored) => {
            if stored == metrics.to_csv() {
                println!("metrics.csv: matches");
                Ok(())
            } else {
                Err(invalid(anyhow!(
                    "recomputed metrics differ from {}",
                    csv_path.display()
                )))
            }
        }
        Err(_) => {
            println!("metrics.csv: not found, skipped cross-check");
            Ok(())
        }
    }
}
