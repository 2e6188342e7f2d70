//! Seeded repetitions of the optimizer on a benchmark.

use std::fs;
use std::path::{Path, PathBuf};

use done_core::{engine, RunTrace};
use rayon::prelude::*;
use serde::Serialize;

use crate::benchmark::{distance_to_optimum, Benchmark, BenchmarkRegistry};
use crate::config::ExperimentConfig;
use crate::error::BenchError;
use crate::noise::with_noise;
use crate::trace::write_trace;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub repetition: usize,
    pub seed: u64,
    pub x1: Vec<f64>,
    /// Noise-free objective at the start point.
    pub initial_value: f64,
    /// Last surrogate minimizer.
    pub final_x_hat: Vec<f64>,
    /// Noise-free objective at `final_x_hat`.
    pub final_value: f64,
    pub final_distance_to_optimum: Option<f64>,
    pub best_index: usize,
    pub best_g_hat: f64,
    pub mean_update_seconds: f64,
    pub mean_solve_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub benchmark: String,
    pub dim: usize,
    pub num_features: usize,
    pub iterations: usize,
    pub repetitions: usize,
    pub noise_std: f64,
    pub median_initial_value: f64,
    pub median_final_value: f64,
    pub median_final_distance_to_optimum: Option<f64>,
    pub median_update_seconds: f64,
    pub median_solve_seconds: f64,
    pub runs: Vec<RunSummary>,
}

pub struct ExperimentOutcome {
    pub summary: ExperimentSummary,
    pub traces: Vec<RunTrace>,
}

/// Median of a nonempty slice; NaN when empty.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

pub fn lookup<'a>(
    registry: &'a BenchmarkRegistry,
    name: &str,
) -> Result<&'a dyn Benchmark, BenchError> {
    registry.get(name).ok_or_else(|| {
        BenchError::Config(format!(
            "unknown benchmark '{name}', expected one of: {}",
            registry.names().join(", ")
        ))
    })
}

/// Runs one repetition.
pub fn run_repetition(
    bench: &dyn Benchmark,
    cfg: &ExperimentConfig,
    rep: usize,
) -> Result<(RunTrace, RunSummary), BenchError> {
    let done_cfg = cfg.done_config(bench, rep)?;
    let x1 = match &cfg.x1 {
        Some(x) => {
            if x.len() != bench.dim() || !done_cfg.bounds.contains(x) {
                return Err(BenchError::Config(format!(
                    "x1 must be a point of the {}-dimensional box",
                    bench.dim()
                )));
            }
            x.clone()
        }
        None => bench.initial_point(done_cfg.seed),
    };
    let mut objective = with_noise(|x: &[f64]| bench.evaluate(x), cfg.noise_std, done_cfg.seed);
    let every = (done_cfg.iterations / 10).max(1);
    let name = bench.name();
    let trace = engine::run_with_observer(&mut objective, &x1, &done_cfg, &mut |r| {
        if r.n % every == 0 {
            log::debug!(
                "{name} rep {rep}: iteration {} y {:.6e} ghat {:.6e}",
                r.n,
                r.y,
                r.g_hat
            );
        }
    })?;

    let last = trace.records.last().expect("at least one iteration");
    let best_index = trace.best_index().expect("at least one iteration");
    let count = trace.records.len() as f64;
    let summary = RunSummary {
        repetition: rep,
        seed: done_cfg.seed,
        initial_value: bench.evaluate(&x1),
        x1,
        final_value: bench.evaluate(&last.x_hat),
        final_distance_to_optimum: distance_to_optimum(bench, &last.x_hat),
        final_x_hat: last.x_hat.clone(),
        best_index,
        best_g_hat: trace.records[best_index].g_hat,
        mean_update_seconds: trace.total_update_seconds() / count,
        mean_solve_seconds: trace.total_solve_seconds() / count,
        total_seconds: trace.total_update_seconds() + trace.total_solve_seconds(),
    };
    Ok((trace, summary))
}

/// Runs every repetition of `cfg` in parallel.
pub fn run_experiment(
    registry: &BenchmarkRegistry,
    cfg: &ExperimentConfig,
) -> Result<ExperimentOutcome, BenchError> {
    cfg.validate()?;
    let bench = lookup(registry, &cfg.benchmark)?;
    let first = cfg.done_config(bench, 0)?;
    let results = (0..cfg.repetitions)
        .into_par_iter()
        .map(|rep| run_repetition(bench, cfg, rep))
        .collect::<Result<Vec<_>, _>>()?;
    let (traces, runs): (Vec<_>, Vec<_>) = results.into_iter().unzip();

    let pick = |f: fn(&RunSummary) -> f64| median(&runs.iter().map(f).collect::<Vec<_>>());
    let distances: Option<Vec<f64>> = runs.iter().map(|r| r.final_distance_to_optimum).collect();
    let summary = ExperimentSummary {
        benchmark: bench.name().to_string(),
        dim: bench.dim(),
        num_features: first.num_features,
        iterations: first.iterations,
        repetitions: cfg.repetitions,
        noise_std: cfg.noise_std,
        median_initial_value: pick(|r| r.initial_value),
        median_final_value: pick(|r| r.final_value),
        median_final_distance_to_optimum: distances.map(|d| median(&d)),
        median_update_seconds: pick(|r| r.mean_update_seconds),
        median_solve_seconds: pick(|r| r.mean_solve_seconds),
        runs,
    };
    Ok(ExperimentOutcome { summary, traces })
}

/// Writes `run_<rep>.csv` for every trace and `summary.json` into `dir`.
pub fn write_outputs(outcome: &ExperimentOutcome, dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    fs::create_dir_all(dir)
        .map_err(|e| BenchError::io(format!("creating {}", dir.display()), e))?;
    let mut written = Vec::new();
    for (run, trace) in outcome.summary.runs.iter().zip(&outcome.traces) {
        let path = dir.join(format!("run_{:03}.csv", run.repetition));
        let file = fs::File::create(&path)
            .map_err(|e| BenchError::io(format!("creating {}", path.display()), e))?;
        write_trace(std::io::BufWriter::new(file), trace, outcome.summary.dim)?;
        written.push(path);
    }
    let path = dir.join("summary.json");
    let json = serde_json::to_string_pretty(&outcome.summary).expect("summary serializes");
    fs::write(&path, json + "\n")
        .map_err(|e| BenchError::io(format!("writing {}", path.display()), e))?;
    written.push(path);
    Ok(written)
}
