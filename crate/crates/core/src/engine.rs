//! The online optimization loop.
//!
//! Iteration `n` measures at `x_n`, absorbs the measurement into the surrogate
//! weights, minimizes the surrogate from a perturbed copy of `x_n`, and
//! perturbs the surrogate minimizer to obtain `x_{n+1}`. All points are clipped
//! to the search box.

use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, DoneError, Result};
use crate::lbfgs::{minimize, SearchBox, SmoothObjective, SolverOptions};
use crate::rfe::{FreqDistribution, RfeModel};
use crate::rls::RlsState;
use crate::rng::{stream_rng, Stream, StreamRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoneConfig {
    /// Number of cosine terms `D`.
    pub num_features: usize,
    /// Ridge regularization of the weight fit.
    pub lambda: f64,
    /// Std-dev of the perturbation applied to `x_n` before the inner solve.
    pub sigma_perturb: f64,
    /// Std-dev of the perturbation applied to the surrogate minimizer.
    pub sigma_explore: f64,
    pub bounds: SearchBox,
    /// Number of measurements `N`.
    pub iterations: usize,
    pub freq_dist: FreqDistribution,
    pub seed: u64,
    #[serde(default)]
    pub solver: SolverOptions,
}

impl DoneConfig {
    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn validate(&self) -> Result<()> {
        self.bounds.validate()?;
        self.freq_dist.validate()?;
        if self.num_features == 0 {
            return Err(DoneError::InvalidParameter(
                "num_features must be positive".into(),
            ));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(DoneError::InvalidParameter(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        for (name, s) in [
            ("sigma_perturb", self.sigma_perturb),
            ("sigma_explore", self.sigma_explore),
        ] {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(DoneError::InvalidParameter(format!(
                    "{name} must be nonnegative, got {s}"
                )));
            }
        }
        if self.iterations == 0 {
            return Err(DoneError::InvalidParameter(
                "iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Produces the (possibly noisy) measurement `y = f(x) + eta`.
pub trait Objective {
    fn measure(&mut self, x: &[f64]) -> f64;
}

impl<F: FnMut(&[f64]) -> f64> Objective for F {
    fn measure(&mut self, x: &[f64]) -> f64 {
        self(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub n: usize,
    pub x: Vec<f64>,
    pub y: f64,
    /// Surrogate minimizer found this iteration.
    pub x_hat: Vec<f64>,
    /// Surrogate value at `x_hat`.
    pub g_hat: f64,
    pub update_seconds: f64,
    pub solve_seconds: f64,
    pub solver_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunTrace {
    pub records: Vec<IterationRecord>,
}

impl RunTrace {
    /// The last surrogate minimizer, the value the loop itself returns.
    pub fn final_minimizer(&self) -> Option<&[f64]> {
        self.records.last().map(|r| r.x_hat.as_slice())
    }

    /// Index of the record with the lowest surrogate minimum.
    pub fn best_index(&self) -> Option<usize> {
        self.records
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.g_hat.total_cmp(&b.1.g_hat))
            .map(|(i, _)| i)
    }

    pub fn best(&self) -> Option<&IterationRecord> {
        self.best_index().map(|i| &self.records[i])
    }

    pub fn total_update_seconds(&self) -> f64 {
        self.records.iter().map(|r| r.update_seconds).sum()
    }

    pub fn total_solve_seconds(&self) -> f64 {
        self.records.iter().map(|r| r.solve_seconds).sum()
    }
}

struct Surrogate<'a>(&'a RfeModel);

impl SmoothObjective for Surrogate<'_> {
    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.0.eval_with_gradient(x, grad).unwrap_or(f64::NAN)
    }
}

/// Stepwise driver; [`run`] wraps it for whole runs.
pub struct DoneOptimizer {
    cfg: DoneConfig,
    model: RfeModel,
    rls: RlsState,
    init_rng: StreamRng,
    next_rng: StreamRng,
    x_next: Vec<f64>,
    n: usize,
    row: Vec<f64>,
}

impl DoneOptimizer {
    pub fn new(cfg: DoneConfig, x1: &[f64]) -> Result<Self> {
        cfg.validate()?;
        check_dim(cfg.dim(), x1.len())?;
        if !cfg.bounds.contains(x1) {
            return Err(DoneError::InvalidParameter(format!(
                "start point {x1:?} outside the box"
            )));
        }
        let model = RfeModel::sample(cfg.dim(), cfg.num_features, &cfg.freq_dist, cfg.seed)?;
        let rls = RlsState::new(cfg.num_features, cfg.lambda)?;
        Ok(Self {
            init_rng: stream_rng(cfg.seed, Stream::InitPerturbation),
            next_rng: stream_rng(cfg.seed, Stream::NextPerturbation),
            row: vec![0.0; cfg.num_features],
            x_next: x1.to_vec(),
            n: 0,
            model,
            rls,
            cfg,
        })
    }

    pub fn config(&self) -> &DoneConfig {
        &self.cfg
    }

    /// Current surrogate; its weights track the recursive fit.
    pub fn model(&self) -> &RfeModel {
        &self.model
    }

    pub fn rls(&self) -> &RlsState {
        &self.rls
    }

    /// Point that the next [`step`](Self::step) will measure.
    pub fn next_point(&self) -> &[f64] {
        &self.x_next
    }

    pub fn iteration(&self) -> usize {
        self.n
    }

    pub fn step(&mut self, objective: &mut dyn Objective) -> Result<IterationRecord> {
        self.n += 1;
        let n = self.n;
        let x = self.x_next.clone();

        let y = objective.measure(&x);
        if !y.is_finite() {
            return Err(DoneError::NonFinite(format!(
                "measurement {y} at iteration {n}, x = {x:?}"
            )));
        }

        let t0 = Instant::now();
        self.model.regressor_row_into(&x, &mut self.row)?;
        self.rls.update(&self.row, y)?;
        self.model.set_weights(self.rls.weights())?;
        let update_seconds = t0.elapsed().as_secs_f64();

        let t1 = Instant::now();
        let mut x_init = x.clone();
        perturb(&mut x_init, self.cfg.sigma_perturb, &mut self.init_rng);
        self.cfg.bounds.project(&mut x_init);
        let report = minimize(
            &Surrogate(&self.model),
            &x_init,
            &self.cfg.bounds,
            &self.cfg.solver,
        )?;
        let solve_seconds = t1.elapsed().as_secs_f64();

        let mut x_next = report.minimizer.clone();
        perturb(&mut x_next, self.cfg.sigma_explore, &mut self.next_rng);
        self.cfg.bounds.project(&mut x_next);
        self.x_next = x_next;

        Ok(IterationRecord {
            n,
            x,
            y,
            x_hat: report.minimizer,
            g_hat: report.value,
            update_seconds,
            solve_seconds,
            solver_converged: report.converged,
        })
    }
}

fn perturb(x: &mut [f64], sigma: f64, rng: &mut StreamRng) {
    // draw even when sigma == 0 so the stream position only depends on n
    for v in x {
        let z: f64 = rng.sample(StandardNormal);
        *v += sigma * z;
    }
}

/// Runs `cfg.iterations` iterations from `x1`.
pub fn run(objective: &mut dyn Objective, x1: &[f64], cfg: &DoneConfig) -> Result<RunTrace> {
    run_with_observer(objective, x1, cfg, &mut |_| {})
}

/// Like [`run`], calling `observer` with each record as it is produced.
pub fn run_with_observer(
    objective: &mut dyn Objective,
    x1: &[f64],
    cfg: &DoneConfig,
    observer: &mut dyn FnMut(&IterationRecord),
) -> Result<RunTrace> {
    let mut opt = DoneOptimizer::new(cfg.clone(), x1)?;
    let mut trace = RunTrace {
        records: Vec::with_capacity(cfg.iterations),
    };
    for _ in 0..cfg.iterations {
        let record = opt.step(objective)?;
        observer(&record);
        trace.records.push(record);
    }
    Ok(trace)
}

/// Mean surrogate-update wall time (regressor row plus recursive update) over
/// `window` iterations starting at each checkpoint, on a cheap quadratic
/// objective. The inner solve is excluded; its cost does not depend on `n`.
pub fn per_iteration_cost_probe(
    cfg: &DoneConfig,
    checkpoints: &[usize],
    window: usize,
) -> Result<Vec<(usize, f64)>> {
    let window = window.max(1);
    if checkpoints.iter().any(|&c| c == 0) {
        return Err(DoneError::InvalidParameter(
            "checkpoints are 1-based".into(),
        ));
    }
    let last = checkpoints.iter().copied().max().unwrap_or(0) + window - 1;
    if checkpoints.is_empty() {
        return Ok(Vec::new());
    }
    let mut cfg = cfg.clone();
    cfg.iterations = last;
    let x1: Vec<f64> = cfg
        .bounds
        .lower()
        .iter()
        .zip(cfg.bounds.upper())
        .map(|(l, u)| 0.5 * (l + u))
        .collect();
    let mut objective = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
    let mut opt = DoneOptimizer::new(cfg, &x1)?;
    let mut times = Vec::with_capacity(last);
    for _ in 0..last {
        times.push(opt.step(&mut objective)?.update_seconds);
    }
    Ok(checkpoints
        .iter()
        .map(|&c| {
            let slice = &times[c - 1..c - 1 + window];
            (c, slice.iter().sum::<f64>() / window as f64)
        })
        .collect())
}
