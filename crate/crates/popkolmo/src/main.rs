//! Command-line front end: analyze | simulate | compare.
//!
//! Exit codes: 0 success, 1 I/O or numeric non-convergence, 2 input
//! validation, 3 runtime divergence (non-finite state). Diagnostics go to
//! standard error as single-line JSON objects.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use popkolmo::error::{Error, Result};
use popkolmo::io;
use popkolmo::{
    aggregate, analyze_matrix, simulate, AnalysisReport, SimulationConfig, StateKind, Trajectory,
};

#[derive(Parser)]
#[command(
    name = "popkolmo",
    about = "Kolmogorov transition-matrix analysis and age-structured multi-patch population simulation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a matrix file and write the structure/spectral report.
    Analyze {
        /// Matrix JSON file ({"n", "entries"} or {"n", "offdiagonal_rates"}).
        matrix: PathBuf,
        /// Validation tolerance, relative to max(1, max|entry|).
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Report path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the age-structured simulation described by a config file.
    Simulate {
        /// Simulation config JSON file.
        config: PathBuf,
        /// Output directory (created if missing).
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
    },
    /// Run the full model against its k-weighted aggregated model.
    Compare {
        /// Simulation config JSON file.
        config: PathBuf,
        /// Output directory (created if missing).
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
        /// Comma-separated ε sweep overriding the config value,
        /// e.g. 1e-1,1e-2,1e-3.
        #[arg(long)]
        epsilons: Option<String>,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Analyze { matrix, tol, out } => run(cmd_analyze(&matrix, tol, out.as_deref())),
        Command::Simulate { config, out_dir } => run(cmd_simulate(&config, &out_dir)),
        Command::Compare {
            config,
            out_dir,
            epsilons,
        } => run(cmd_compare(&config, &out_dir, epsilons.as_deref())),
    };
    std::process::exit(code);
}

fn run(result: Result<()>) -> i32 {
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!(
                "{}",
                json!({"error": err.kind(), "message": err.to_string()})
            );
            exit_code(&err)
        }
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NonFiniteState { .. } => 3,
        Error::NonSquare { .. }
        | Error::NegativeOffDiagonal { .. }
        | Error::ColumnSumNonZero { .. }
        | Error::DimensionMismatch { .. }
        | Error::GridMismatch(_)
        | Error::InvalidInput(_)
        | Error::Json(_) => 2,
        _ => 1,
    }
}

fn cmd_analyze(matrix_path: &Path, tol: f64, out: Option<&Path>) -> Result<()> {
    let matrix = io::load_matrix(matrix_path, tol)?;
    let report = analyze_matrix(&matrix)?;
    let text = io::to_json_string(&io::analysis_report_value(&report));
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_simulate(config_path: &Path, out_dir: &Path) -> Result<()> {
    let started = Instant::now();
    let config = io::load_config(config_path)?;
    let trajectory = simulate(&config)?;

    std::fs::create_dir_all(out_dir)?;
    std::fs::write(
        out_dir.join("trajectory.csv"),
        io::trajectory_csv(&trajectory),
    )?;
    let mut snapshot_files = Vec::new();
    let mut sample_index = Vec::new();
    for (idx, sample) in trajectory.samples.iter().enumerate() {
        let name = format!("snapshot_{idx:04}.csv");
        std::fs::write(out_dir.join(&name), io::snapshot_csv(&sample.state))?;
        snapshot_files.push(name);
        sample_index.push(json!({
            "index": idx,
            "step": sample.step,
            "time": sample.time,
        }));
    }

    let manifest = json!({
        "command": "simulate",
        "config": config_manifest(&config),
        "samples": sample_index,
        "outputs": {
            "trajectory": "trajectory.csv",
            "snapshots": snapshot_files,
        },
        "wall_time_seconds": started.elapsed().as_secs_f64(),
    });
    std::fs::write(out_dir.join("manifest.json"), io::to_json_string(&manifest))?;
    Ok(())
}

fn config_manifest(config: &SimulationConfig) -> Value {
    json!({
        "n": config.matrix.n(),
        "epsilon": config.epsilon,
        "age_max": config.rates.grid.age_max,
        "grid_count": config.rates.grid.cells,
        "da": config.rates.grid.da(),
        "horizon": config.horizon,
        "output_stride": config.output_stride,
        "fertility_cutoff": config.rates.fertility_cutoff,
    })
}

struct CompareOutcome {
    tag: String,
    rows: Vec<aggregate::CompareRow>,
    summary: Value,
}

fn cmd_compare(config_path: &Path, out_dir: &Path, epsilons: Option<&str>) -> Result<()> {
    let started = Instant::now();
    let config = io::load_config(config_path)?;
    let report = analyze_matrix(&config.matrix)?;

    let jobs: Vec<(String, f64)> = match epsilons {
        Some(list) => list
            .split(',')
            .map(|token| {
                let token = token.trim();
                let eps: f64 = token.parse().map_err(|_| {
                    Error::InvalidInput(format!("cannot parse epsilon {token:?}"))
                })?;
                Ok((token.to_string(), eps))
            })
            .collect::<Result<Vec<_>>>()?,
        None => vec![(format!("{}", config.epsilon), config.epsilon)],
    };
    let sweep = epsilons.is_some();

    let outcomes = run_compare_jobs(&config, &report, &jobs)?;

    std::fs::create_dir_all(out_dir)?;
    let mut summaries = Vec::new();
    for outcome in &outcomes {
        let (csv_name, summary_name) = if sweep {
            (
                format!("error_report_eps_{}.csv", outcome.tag),
                format!("summary_eps_{}.json", outcome.tag),
            )
        } else {
            ("error_report.csv".to_string(), "summary.json".to_string())
        };
        std::fs::write(out_dir.join(csv_name), io::compare_csv(&outcome.rows))?;
        std::fs::write(
            out_dir.join(summary_name),
            io::to_json_string(&outcome.summary),
        )?;
        summaries.push(outcome.summary.clone());
    }
    if sweep {
        let sweep_summary = json!({
            "command": "compare",
            "sweep": summaries,
            "wall_time_seconds": started.elapsed().as_secs_f64(),
        });
        std::fs::write(
            out_dir.join("sweep_summary.json"),
            io::to_json_string(&sweep_summary),
        )?;
    }
    Ok(())
}

/// Runs one compare job per ε, fanned out over worker threads. The worker
/// count is capped by POPKOLMO_THREADS (default: machine parallelism); files
/// are written afterwards by the caller only.
fn run_compare_jobs(
    config: &SimulationConfig,
    report: &AnalysisReport,
    jobs: &[(String, f64)],
) -> Result<Vec<CompareOutcome>> {
    let threads = thread_cap().min(jobs.len()).max(1);
    let mut slots: Vec<Option<Result<CompareOutcome>>> = Vec::new();
    slots.resize_with(jobs.len(), || None);
    let slots = std::sync::Mutex::new(slots);
    let next = std::sync::atomic::AtomicUsize::new(0);

    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if idx >= jobs.len() {
                    break;
                }
                let (tag, eps) = &jobs[idx];
                let outcome = compare_once(config, report, tag, *eps);
                slots.lock().expect("worker panicked").as_mut_slice()[idx] = Some(outcome);
            });
        }
    });

    slots
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|slot| slot.expect("job not executed"))
        .collect()
}

fn thread_cap() -> usize {
    match std::env::var("POPKOLMO_THREADS") {
        Ok(s) => s.parse::<usize>().ok().filter(|&t| t >= 1).unwrap_or(1),
        Err(_) => std::thread::available_parallelism()
            .map(|p| p.get())
            .unwrap_or(1),
    }
}

fn compare_once(
    config: &SimulationConfig,
    report: &AnalysisReport,
    tag: &str,
    epsilon: f64,
) -> Result<CompareOutcome> {
    let mut config = config.clone();
    config.epsilon = epsilon;

    let k = &report.spectral.default_perron;
    let full = simulate(&config)?;
    let model = aggregate::averaged_rates(&config.rates, k)?;
    let nodes = config.rates.grid.nodes();
    let mut aggregated_initial = vec![0.0; nodes];
    for profile in &config.initial {
        for (acc, v) in aggregated_initial.iter_mut().zip(profile) {
            *acc += v;
        }
    }
    let aggregated = aggregate::simulate_aggregated(
        &model,
        &aggregated_initial,
        config.horizon,
        config.output_stride,
    )?;
    let rows = aggregate::compare(&full, &model, &aggregated)?;

    let transient_patches: Vec<usize> = report
        .state_labels
        .iter()
        .enumerate()
        .filter(|(_, k)| **k == StateKind::Transient)
        .map(|(i, _)| i + 1)
        .collect();
    let final_transient_share = transient_share(&full, &report.state_labels);
    let last = rows.last().expect("compare produced no rows");
    let summary = json!({
        "epsilon": epsilon,
        "tag": tag,
        "k": k,
        "final_d_share": last.d_share,
        "final_d_prof": last.d_prof,
        "transient_patches": transient_patches,
        "final_transient_share": final_transient_share,
    });
    Ok(CompareOutcome {
        tag: tag.to_string(),
        rows,
        summary,
    })
}

fn transient_share(full: &Trajectory, labels: &[StateKind]) -> Value {
    let shares = &full.final_sample().shares;
    let total: f64 = shares
        .iter()
        .zip(labels)
        .filter(|(_, k)| **k == StateKind::Transient)
        .map(|(s, _)| *s)
        .sum();
    Value::from(total)
}
