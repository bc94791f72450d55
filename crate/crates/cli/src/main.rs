//! Command-line front end for the self-play laboratory.
//!
//! Three verbs cover the experimental workflow:
//!
//! - `run` executes one experiment from a flat key=value config file plus
//!   command-line overrides, streaming per-step metrics as JSON lines and
//!   writing pool snapshots and a summary record.
//! - `grid` runs the Cartesian product of one or more config axes over a
//!   shared base seed, one isolated output directory per cell, and collects
//!   per-cell collapse onsets into a grid summary.
//! - `report` tabulates closed-form predictions against fresh simulations,
//!   compares collapse onsets and final solver proxies across runs, and
//!   emits one plot-ready series file per metric.
//!
//! Every run directory contains `manifest.json`, `config.txt` (the effective
//! configuration; re-parsing it reproduces the run exactly), `metrics.jsonl`,
//! `snapshots.txt`, and `summary.json`. Runs are deterministic: the same
//! manifest produces byte-identical metrics streams.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::Rng;
use serde::{Deserialize, Serialize};

use selfplay_lab::config::ExperimentConfig;
use selfplay_lab::engine::{detect_collapse, run_experiment, StepMetrics};
use selfplay_lab::rng::RngStreams;
use selfplay_lab::theory;

#[derive(Parser)]
#[command(
    name = "selfplay-lab",
    about = "Runner, ablation grids, and theory-vs-simulation reports for the self-play laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one experiment and write its metrics, snapshots, and summary.
    Run(RunArgs),
    /// Run the Cartesian product of config axes, one cell per directory.
    Grid(GridArgs),
    /// Compare theory against simulation and summarize completed runs.
    Report(ReportArgs),
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Flat key=value config file; defaults apply for omitted keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for this run.
    #[arg(long)]
    out: PathBuf,
    /// RNG seed override (applies to both the engine and the world).
    #[arg(long)]
    seed: Option<u64>,
    /// Step-count override.
    #[arg(long)]
    steps: Option<usize>,
    /// Single key=value override; repeatable, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    base: RunArgs,
    /// Grid axis as key=v1,v2,...; repeatable, product over all axes.
    #[arg(long = "axis", value_name = "KEY=V1,V2,...", required = true)]
    axes: Vec<String>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory for the report and its series files.
    #[arg(long)]
    out: PathBuf,
    /// Completed run directories to summarize.
    #[arg(required = true)]
    runs: Vec<PathBuf>,
}

/// Everything needed to reproduce a run byte for byte.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RunManifest {
    /// Config file the run started from, if any.
    config_path: Option<String>,
    output_dir: String,
    run_id: String,
    /// Version of the binary that produced the run.
    revision: String,
    seed: u64,
}

/// End-of-run record; `config_text` re-parses to the effective config.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RunSummary {
    run_id: String,
    steps: usize,
    final_pool_size: usize,
    /// Earliest step starting a sustained low-validity window, if any.
    collapse_onset: Option<usize>,
    /// Mean solver pass proxy over the last 30 steps.
    final_solver_proxy: f64,
    /// True when any emitted series contained a NaN or infinity.
    failed: bool,
    config_text: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run_verb(&args),
        Command::Grid(args) => grid_verb(&args),
        Command::Report(args) => report_verb(&args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

/// Builds the effective config: file, then --set pairs, then --seed/--steps.
fn effective_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        cfg.apply_text(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
    }
    for pair in &args.set {
        let (key, value) = pair
            .split_once('=')
            .with_context(|| format!("--set `{pair}` is not of the form key=value"))?;
        cfg.set(key.trim(), value.trim())
            .with_context(|| format!("applying --set {pair}"))?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
        cfg.world.seed = seed;
    }
    if let Some(steps) = args.steps {
        cfg.steps = steps;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_verb(args: &RunArgs) -> Result<ExitCode> {
    let cfg = effective_config(args)?;
    let summary = execute_run(&cfg, args, &args.out)?;
    println!(
        "run {} finished: {} steps, pool {}, collapse {}",
        summary.run_id,
        summary.steps,
        summary.final_pool_size,
        match summary.collapse_onset {
            Some(s) => format!("at step {s}"),
            None => "none".into(),
        }
    );
    Ok(if summary.failed {
        eprintln!("error: non-finite values in the metrics stream; run marked failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}

/// Runs one configured experiment into `out` and writes all artifacts.
fn execute_run(cfg: &ExperimentConfig, args: &RunArgs, out: &Path) -> Result<RunSummary> {
    fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))?;
    let run_id = out
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    let manifest = RunManifest {
        config_path: args
            .config
            .as_ref()
            .map(|p| p.to_string_lossy().into_owned()),
        output_dir: out.to_string_lossy().into_owned(),
        run_id: run_id.clone(),
        revision: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    fs::write(out.join("config.txt"), cfg.to_text())?;

    let result = run_experiment(cfg)?;

    let mut metrics_file = fs::File::create(out.join("metrics.jsonl"))?;
    let mut failed = false;
    for record in &result.metrics {
        failed |= !record.all_finite();
        serde_json::to_writer(&mut metrics_file, record)?;
        metrics_file.write_all(b"\n")?;
    }
    let mut snapshot_text = String::new();
    for snap in &result.snapshots {
        snapshot_text.push_str(&format!("# step {}\n{}\n", snap.step, snap.pool));
    }
    snapshot_text.push_str(&format!("# final\n{}\n", result.final_pool));
    fs::write(out.join("snapshots.txt"), snapshot_text)?;

    let summary = RunSummary {
        run_id,
        steps: result.metrics.len(),
        final_pool_size: result.metrics.last().map_or(0, |m| m.pool_size),
        collapse_onset: detect_collapse(&result.metrics),
        final_solver_proxy: tail_mean(
            &result
                .metrics
                .iter()
                .map(|m| m.solver_pass_proxy)
                .collect::<Vec<_>>(),
            30,
        ),
        failed,
        config_text: cfg.to_text(),
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

/// One grid cell: the axis values it was assigned and where it ran.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct CellSummary {
    directory: String,
    overrides: BTreeMap<String, String>,
    collapse_onset: Option<usize>,
    final_pool_size: usize,
    final_solver_proxy: f64,
    failed: bool,
}

fn grid_verb(args: &GridArgs) -> Result<ExitCode> {
    // Validate axes up front: recognized keys, at least one value each.
    let mut axes: Vec<(String, Vec<String>)> = Vec::new();
    let mut probe = ExperimentConfig::default();
    for spec in &args.axes {
        let (key, values) = spec
            .split_once('=')
            .with_context(|| format!("--axis `{spec}` is not of the form key=v1,v2"))?;
        let values: Vec<String> = values
            .split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(str::to_string)
            .collect();
        if values.is_empty() {
            bail!("axis `{key}` has no values");
        }
        for v in &values {
            probe
                .set(key.trim(), v)
                .with_context(|| format!("validating axis {key}"))?;
        }
        axes.push((key.trim().to_string(), values));
    }

    let base_cfg = effective_config(&args.base)?;
    fs::create_dir_all(&args.base.out)?;

    // Cartesian product, every cell sharing the base seed.
    let mut cells: Vec<BTreeMap<String, String>> = vec![BTreeMap::new()];
    for (key, values) in &axes {
        let mut next = Vec::with_capacity(cells.len() * values.len());
        for cell in &cells {
            for v in values {
                let mut c = cell.clone();
                c.insert(key.clone(), v.clone());
                next.push(c);
            }
        }
        cells = next;
    }

    // Cells are independent engine instances; run them on worker threads,
    // each isolated in its own directory.
    let mut summaries: Vec<Result<CellSummary>> = Vec::with_capacity(cells.len());
    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(cells.len());
        for cell in &cells {
            let base_cfg = &base_cfg;
            let args = &args.base;
            handles.push(scope.spawn(move || -> Result<CellSummary> {
                let mut cfg = base_cfg.clone();
                for (k, v) in cell {
                    cfg.set(k, v)?;
                }
                cfg.validate()?;
                let dir = args.out.join(cell_name(cell));
                let summary = execute_run(&cfg, args, &dir)?;
                Ok(CellSummary {
                    directory: dir.to_string_lossy().into_owned(),
                    overrides: cell.clone(),
                    collapse_onset: summary.collapse_onset,
                    final_pool_size: summary.final_pool_size,
                    final_solver_proxy: summary.final_solver_proxy,
                    failed: summary.failed,
                })
            }));
        }
        for handle in handles {
            summaries.push(handle.join().expect("cell thread panicked"));
        }
    });

    let mut collected = Vec::with_capacity(summaries.len());
    for s in summaries {
        collected.push(s?);
    }
    write_json(&args.base.out.join("grid_summary.json"), &collected)?;
    let any_failed = collected.iter().any(|c| c.failed);
    for cell in &collected {
        println!(
            "cell {}: collapse {}, pool {}, proxy {:.3}{}",
            cell.directory,
            match cell.collapse_onset {
                Some(s) => format!("at step {s}"),
                None => "none".into(),
            },
            cell.final_pool_size,
            cell.final_solver_proxy,
            if cell.failed { " [failed]" } else { "" }
        );
    }
    Ok(if any_failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}

/// Directory name for a cell, `key=value` pairs joined with commas.
fn cell_name(cell: &BTreeMap<String, String>) -> String {
    if cell.is_empty() {
        return "cell".into();
    }
    cell.iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// One row of the theory-vs-simulation table.
#[derive(Debug, Clone, Serialize)]
struct ComparisonRow {
    quantity: String,
    predicted: f64,
    simulated: f64,
    abs_error: f64,
}

fn comparison_row(quantity: &str, predicted: f64, simulated: f64) -> ComparisonRow {
    ComparisonRow {
        quantity: quantity.to_string(),
        predicted,
        simulated,
        abs_error: (predicted - simulated).abs(),
    }
}

fn report_verb(args: &ReportArgs) -> Result<ExitCode> {
    if args.runs.is_empty() {
        bail!("no run directories given");
    }
    let mut runs = Vec::with_capacity(args.runs.len());
    for dir in &args.runs {
        runs.push(load_run(dir)?);
    }
    fs::create_dir_all(&args.out)?;

    let table = theory_table();
    let mut text = String::new();
    text.push_str("theory vs simulation\n");
    text.push_str(&format!(
        "{:<34} {:>14} {:>14} {:>12}\n",
        "quantity", "predicted", "simulated", "abs error"
    ));
    for row in &table {
        text.push_str(&format!(
            "{:<34} {:>14.8} {:>14.8} {:>12.3e}\n",
            row.quantity, row.predicted, row.simulated, row.abs_error
        ));
    }

    text.push_str("\nruns\n");
    for run in &runs {
        text.push_str(&format!(
            "{}: steps={} collapse={} final_proxy={:.3}{}\n",
            run.id,
            run.metrics.len(),
            match run.collapse_onset {
                Some(s) => s.to_string(),
                None => "none".into(),
            },
            run.final_proxy,
            if run.failed { " [failed]" } else { "" }
        ));
    }

    // Collapse-onset ordering: collapsing runs first, earliest onset first,
    // surviving runs listed after.
    let mut ordered: Vec<&LoadedRun> = runs.iter().collect();
    ordered.sort_by_key(|r| (r.collapse_onset.is_none(), r.collapse_onset));
    text.push_str("\ncollapse-onset ordering (earliest first, survivors last)\n");
    for run in &ordered {
        text.push_str(&format!(
            "  {} ({})\n",
            run.id,
            match run.collapse_onset {
                Some(s) => format!("step {s}"),
                None => "no collapse".into(),
            }
        ));
    }
    let mut by_proxy: Vec<&LoadedRun> = runs.iter().collect();
    by_proxy.sort_by(|a, b| b.final_proxy.partial_cmp(&a.final_proxy).unwrap());
    text.push_str("\nfinal solver proxy ordering (best first)\n");
    for run in &by_proxy {
        text.push_str(&format!("  {} ({:.3})\n", run.id, run.final_proxy));
    }

    fs::write(args.out.join("report.txt"), &text)?;
    write_json(&args.out.join("report.json"), &table)?;

    // One plot-ready file per metric per run: "step value" rows.
    let series_dir = args.out.join("series");
    for run in &runs {
        let dir = series_dir.join(&run.id);
        fs::create_dir_all(&dir)?;
        for (name, extract) in metric_series() {
            let mut body = String::new();
            for m in &run.metrics {
                body.push_str(&format!("{} {}\n", m.step, extract(m)));
            }
            fs::write(dir.join(format!("{name}.dat")), body)?;
        }
    }

    print!("{text}");
    Ok(ExitCode::SUCCESS)
}

struct LoadedRun {
    id: String,
    metrics: Vec<StepMetrics>,
    collapse_onset: Option<usize>,
    final_proxy: f64,
    failed: bool,
}

fn load_run(dir: &Path) -> Result<LoadedRun> {
    let path = dir.join("metrics.jsonl");
    let text = fs::read_to_string(&path)
        .with_context(|| format!("missing metrics stream {}", path.display()))?;
    let mut metrics = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: StepMetrics = serde_json::from_str(line)
            .with_context(|| format!("{}:{}", path.display(), i + 1))?;
        metrics.push(record);
    }
    if metrics.is_empty() {
        bail!("metrics stream {} is empty", path.display());
    }
    let failed = metrics.iter().any(|m| !m.all_finite());
    let proxies: Vec<f64> = metrics.iter().map(|m| m.solver_pass_proxy).collect();
    Ok(LoadedRun {
        id: dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.to_string_lossy().into_owned()),
        collapse_onset: detect_collapse(&metrics),
        final_proxy: tail_mean(&proxies, 30),
        failed,
        metrics,
    })
}

/// The three closed forms every report checks against fresh simulations:
/// signal starvation, sparse-sampling distortion, and momentum drift.
fn theory_table() -> Vec<ComparisonRow> {
    let mut rows = Vec::new();

    // Zero-hit probability of an 8-draw group at mass 1/256, Monte Carlo
    // over a fixed stream so the table itself is deterministic.
    let p = 1.0 / 256.0;
    let n = 8;
    let predicted = theory::starvation_probability(p, n).zero_hit;
    let groups = 200_000u64;
    let mut zero_hits = 0u64;
    let streams = RngStreams::new(7);
    for g in 0..groups {
        let mut rng = streams.stream("report-starvation", g);
        if (0..n).all(|_| rng.gen::<f64>() >= p) {
            zero_hits += 1;
        }
    }
    rows.push(comparison_row(
        "starvation zero-hit p=1/256 N=8",
        predicted,
        zero_hits as f64 / groups as f64,
    ));

    // Per-negative repulsion of a single-positive group of 8 versus full
    // enumeration over 256, measured from the advantage estimator: the
    // gradient weight on a negative is |advantage| / N, the enumerated
    // weight is 1/M, and their ratio is the amplification.
    let mut rewards = vec![0.0; 8];
    rewards[0] = 1.0;
    let adv = selfplay_lab::advantages::mlrl_group_advantages(&rewards, 0.0)
        .expect("nonempty group");
    let sampled_neg_weight = -adv.values[1] / 8.0;
    let measured_amplification = sampled_neg_weight / (1.0 / 256.0);
    rows.push(comparison_row(
        "distortion amplification M=256 N=8",
        theory::distortion_amplification(256, 8).expect("m > n"),
        measured_amplification,
    ));

    // Zero-gradient AdamW displacement over 50 steps, simulated directly
    // on the scalar recursion.
    let (beta1, beta2, tau) = (0.9, 0.999, 50);
    let predicted_drift = theory::momentum_drift_closed_form(beta1, beta2, tau).exact_partial_sum;
    let (mut m, mut v) = (1.0f64, 1.0f64);
    let mut displacement = 0.0;
    for _ in 0..tau {
        m *= beta1;
        v *= beta2;
        displacement += m / v.sqrt();
    }
    rows.push(comparison_row(
        "momentum drift partial sum tau=50",
        predicted_drift,
        displacement,
    ));

    rows
}

/// Metric extractors, one series file each.
fn metric_series() -> Vec<(&'static str, fn(&StepMetrics) -> f64)> {
    vec![
        ("q_valid_rate", |m| m.q_valid_rate),
        ("pool_size", |m| m.pool_size as f64),
        ("new_admissions", |m| m.new_admissions as f64),
        ("solver_pass_proxy", |m| m.solver_pass_proxy),
        ("grad_norm", |m| m.grad_norm),
        ("grad_norm_q", |m| m.grad_norm_q),
        ("grad_norm_s", |m| m.grad_norm_s),
        ("proposer_entropy", |m| m.proposer_entropy),
        ("mean_selection_depth", |m| m.mean_selection_depth),
        ("w_q", |m| m.w_q),
        ("w_s", |m| m.w_s),
        ("reward_mean_q", |m| m.reward_mean_q),
        ("reward_mean_s", |m| m.reward_mean_s),
        ("solver_ability", |m| m.solver_ability),
    ]
}

fn tail_mean(xs: &[f64], n: usize) -> f64 {
    let take = n.min(xs.len());
    if take == 0 {
        return 0.0;
    }
    xs.iter().rev().take(take).sum::<f64>() / take as f64
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
