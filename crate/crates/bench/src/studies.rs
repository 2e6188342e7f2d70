//! Camelback fitting studies and the suites built on them.

use done_core::hyperparam::{choose_freq_dist, grid_fourier_magnitude};
use done_core::theory::{
    real_vs_complex_fit, CheckResult, SuiteOptions, SuiteRegistry, SuiteReport, TheorySuite,
};
use done_core::{Dataset, DoneError, FreqDistribution, RfeModel};
use rayon::prelude::*;
use serde::Serialize;

use crate::benchmark::{camelback, Benchmark, Camelback};
use crate::experiment::median;

pub const FIT_POINTS: usize = 1000;
pub const FIT_LAMBDA: f64 = 1e-10;
pub const COMPARISON_FEATURES: [usize; 8] = [10, 20, 40, 80, 160, 320, 640, 1280];

/// `N` uniform camelback samples, noise-free.
pub fn camelback_data(points: usize, seed: u64) -> Result<Dataset, DoneError> {
    let b = Camelback.bounds();
    Dataset::sample_uniform(b.lower(), b.upper(), points, seed, camelback)
}

/// Training RMSE of a batch fit with `D` Gaussian frequencies of scale `sigma`.
pub fn camelback_fit_rmse(sigma: f64, num_features: usize, seed: u64) -> Result<f64, DoneError> {
    let data = camelback_data(FIT_POINTS, seed)?;
    let model = RfeModel::sample(2, num_features, &FreqDistribution::gaussian(sigma)?, seed)?;
    model.fit_batch(&data, FIT_LAMBDA)?.rmse(&data)
}

/// Gaussian scale chosen from a 512 x 256 grid transform of the camelback.
pub fn camelback_sigma() -> Result<f64, DoneError> {
    let b = Camelback.bounds();
    let mag = grid_fourier_magnitude(camelback, b.lower(), b.upper(), &[512, 256])?;
    match choose_freq_dist(&mag, 2)? {
        FreqDistribution::IsotropicGaussian { sigma } => Ok(sigma),
        other => Err(DoneError::Unsupported(format!(
            "expected a gaussian fit, got {other:?}"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub num_features: usize,
    pub median_real_rmse: f64,
    pub median_complex_rmse: f64,
}

/// Median training RMSE of real and complex fits for each feature count.
pub fn real_vs_complex_study(
    features: &[usize],
    seeds: u64,
    sigma: f64,
) -> Result<Vec<ComparisonRow>, DoneError> {
    let dist = FreqDistribution::gaussian(sigma)?;
    let jobs: Vec<(usize, u64)> = features
        .iter()
        .flat_map(|&d| (0..seeds).map(move |s| (d, s)))
        .collect();
    let fits = jobs
        .par_iter()
        .map(|&(d, s)| {
            let data = camelback_data(FIT_POINTS, s)?;
            real_vs_complex_fit(&data, d, &dist, FIT_LAMBDA, s)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(features
        .iter()
        .map(|&d| {
            let (real, complex): (Vec<f64>, Vec<f64>) = fits
                .iter()
                .filter(|f| f.num_features == d)
                .map(|f| (f.real_rmse, f.complex_rmse))
                .unzip();
            ComparisonRow {
                num_features: d,
                median_real_rmse: median(&real),
                median_complex_rmse: median(&complex),
            }
        })
        .collect())
}

/// Checks on the rows of [`real_vs_complex_study`]: real medians strictly decrease and
/// real and complex medians stay within a factor 3.
pub fn real_vs_complex_checks(rows: &[ComparisonRow]) -> Vec<CheckResult> {
    let mut checks = Vec::new();
    let decreasing = rows
        .windows(2)
        .all(|w| w[1].median_real_rmse < w[0].median_real_rmse);
    let series: Vec<String> = rows
        .iter()
        .map(|r| format!("{:.2e}", r.median_real_rmse))
        .collect();
    checks.push(CheckResult {
        name: "real RMSE decreasing in D".into(),
        passed: decreasing,
        detail: series.join(" > "),
    });
    for r in rows {
        let ratio = r.median_real_rmse / r.median_complex_rmse;
        checks.push(CheckResult {
            name: format!("real vs complex D={}", r.num_features),
            passed: (1.0 / 3.0..=3.0).contains(&ratio),
            detail: format!(
                "{:.3e} vs {:.3e}",
                r.median_real_rmse, r.median_complex_rmse
            ),
        });
    }
    checks
}

struct RealVsComplexSuite;

impl TheorySuite for RealVsComplexSuite {
    fn name(&self) -> &str {
        "real-vs-complex"
    }

    fn description(&self) -> &str {
        "real vs complex least-squares fits of the camelback over D (20 seeds)"
    }

    fn run(&self, _: &SuiteOptions) -> Result<SuiteReport, DoneError> {
        let rows = real_vs_complex_study(&COMPARISON_FEATURES, 20, 10.0)?;
        Ok(SuiteReport {
            suite: self.name().into(),
            checks: real_vs_complex_checks(&rows),
        })
    }
}

/// The core theory suites plus the camelback fit comparison.
pub fn theory_registry() -> SuiteRegistry {
    let mut r = SuiteRegistry::default();
    r.register(Box::new(RealVsComplexSuite));
    r
}
