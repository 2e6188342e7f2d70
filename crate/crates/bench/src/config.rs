//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use done_core::{DoneConfig, FreqDistribution, SolverOptions};
use serde::{Deserialize, Serialize};

use crate::benchmark::Benchmark;
use crate::error::BenchError;

/// One experiment: a benchmark, optimizer settings and how many seeded
/// repetitions to run. Optimizer fields left out fall back to the
/// benchmark's defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub benchmark: String,
    #[serde(default)]
    pub num_features: Option<usize>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub sigma_perturb: Option<f64>,
    #[serde(default)]
    pub sigma_explore: Option<f64>,
    #[serde(default)]
    pub iterations: Option<usize>,
    #[serde(default)]
    pub freq_dist: Option<FreqDistribution>,
    #[serde(default)]
    pub solver: Option<SolverOptions>,
    /// Seed of the first repetition; repetition `r` uses `seed + r`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub repetitions: usize,
    /// Standard deviation of the additive measurement noise.
    #[serde(default)]
    pub noise_std: f64,
    /// Start point; drawn uniformly in the box per repetition when absent.
    #[serde(default)]
    pub x1: Option<Vec<f64>>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

fn one() -> usize {
    1
}

fn default_output() -> PathBuf {
    PathBuf::from("done-output")
}

impl ExperimentConfig {
    /// Defaults for `benchmark`; every optimizer field comes from the benchmark.
    pub fn for_benchmark(benchmark: &str) -> Self {
        Self {
            benchmark: benchmark.to_string(),
            num_features: None,
            lambda: None,
            sigma_perturb: None,
            sigma_explore: None,
            iterations: None,
            freq_dist: None,
            solver: None,
            seed: 0,
            repetitions: 1,
            noise_std: 0.0,
            x1: None,
            output_dir: default_output(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        serde_json::from_str(text).map_err(|e| BenchError::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.repetitions == 0 {
            return Err(BenchError::Config("repetitions must be at least 1".into()));
        }
        if !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            return Err(BenchError::Config(format!(
                "noise_std must be nonnegative, got {}",
                self.noise_std
            )));
        }
        Ok(())
    }

    /// Optimizer settings for repetition `rep`.
    pub fn done_config(&self, bench: &dyn Benchmark, rep: usize) -> Result<DoneConfig, BenchError> {
        let mut cfg = bench.default_config(self.seed.wrapping_add(rep as u64));
        if let Some(v) = self.num_features {
            cfg.num_features = v;
        }
        if let Some(v) = self.lambda {
            cfg.lambda = v;
        }
        if let Some(v) = self.sigma_perturb {
            cfg.sigma_perturb = v;
        }
        if let Some(v) = self.sigma_explore {
            cfg.sigma_explore = v;
        }
        if let Some(v) = self.iterations {
            cfg.iterations = v;
        }
        if let Some(v) = &self.freq_dist {
            cfg.freq_dist = v.clone();
        }
        if let Some(v) = self.solver {
            cfg.solver = v;
        }
        cfg.validate()
            .map_err(|e| BenchError::Config(e.to_string()))?;
        Ok(cfg)
    }
}
