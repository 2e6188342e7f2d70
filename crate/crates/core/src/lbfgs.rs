//! Projected L-BFGS on a box `[lb, ub]^d`.
//!
//! Trial points are projected onto the box, convergence is judged on the
//! projected gradient, and the curvature memory is dropped whenever the set of
//! variables held at a bound changes. Steps use backtracking Armijo search.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, DoneError, Result};

/// An axis-aligned box. Algorithm-level callers mostly use the cube
/// `[lb, ub]^d` built by [`SearchBox::uniform`]; benchmarks such as camelback
/// need per-coordinate bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SearchBox {
    pub fn uniform(lb: f64, ub: f64, dim: usize) -> Result<Self> {
        Self::new(vec![lb; dim], vec![ub; dim])
    }

    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let b = Self { lower, upper };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.is_empty() {
            return Err(DoneError::InvalidParameter(
                "box dimension must be positive".into(),
            ));
        }
        check_dim(self.lower.len(), self.upper.len())?;
        for (lb, ub) in self.lower.iter().zip(&self.upper) {
            if !(lb < ub) || !lb.is_finite() || !ub.is_finite() {
                return Err(DoneError::InvalidParameter(format!(
                    "box bounds must satisfy lb < ub, got [{lb}, {ub}]"
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Componentwise `max(min(x, ub), lb)`.
    pub fn project(&self, x: &mut [f64]) {
        for ((v, lb), ub) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lb, *ub);
        }
    }

    pub fn projected(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        self.project(&mut y);
        y
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.lower)
                .zip(&self.upper)
                .all(|((v, lb), ub)| v >= lb && v <= ub)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub memory: usize,
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iter: 100,
            grad_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub minimizer: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub grad_inf_norm: f64,
}

/// A function with an analytic gradient.
pub trait SmoothObjective {
    /// Returns `f(x)` and writes the gradient into `grad`.
    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64;
}

impl<F> SmoothObjective for F
where
    F: Fn(&[f64], &mut [f64]) -> f64,
{
    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self(x, grad)
    }
}

const ARMIJO_C1: f64 = 1e-4;
const BACKTRACK_FACTOR: f64 = 0.5;
const MAX_BACKTRACKS: usize = 30;

/// Minimizes `objective` over `bounds` starting from `x_init` (projected first).
pub fn minimize(
    objective: &dyn SmoothObjective,
    x_init: &[f64],
    bounds: &SearchBox,
    opts: &SolverOptions,
) -> Result<SolverReport> {
    let d = bounds.dim();
    check_dim(d, x_init.len())?;
    let mut x = bounds.projected(x_init);
    let mut grad = vec![0.0; d];
    let mut f = evaluate(objective, &x, &mut grad)?;

    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut active = active_set(&x, &grad, bounds);
    let mut iterations = 0;
    let mut trial = vec![0.0; d];
    let mut trial_grad = vec![0.0; d];

    loop {
        let pg_norm = projected_grad_norm(&x, &grad, bounds);
        if pg_norm <= opts.grad_tol || iterations >= opts.max_iter {
            return Ok(SolverReport {
                minimizer: x,
                value: f,
                iterations,
                converged: pg_norm <= opts.grad_tol,
                grad_inf_norm: pg_norm,
            });
        }
        iterations += 1;

        let mut direction = two_loop(&grad, &active, &memory);
        let mut step = initial_step(&direction, &memory);
        let mut accepted = None;
        for attempt in 0..2 {
            if attempt == 1 || dot(&direction, &grad) >= 0.0 {
                // fall back to projected steepest descent with a fresh memory
                memory.clear();
                direction = grad
                    .iter()
                    .zip(&active)
                    .map(|(g, a)| if *a { 0.0 } else { -g })
                    .collect();
                step = initial_step(&direction, &memory);
            }
            accepted = line_search(
                objective,
                bounds,
                &x,
                f,
                &grad,
                &direction,
                step,
                &mut trial,
                &mut trial_grad,
            )?;
            if accepted.is_some() || memory.is_empty() {
                break;
            }
        }
        let Some(f_new) = accepted else {
            // no descent possible along the projected path
            let pg_norm = projected_grad_norm(&x, &grad, bounds);
            return Ok(SolverReport {
                minimizer: x,
                value: f,
                iterations,
                converged: pg_norm <= opts.grad_tol,
                grad_inf_norm: pg_norm,
            });
        };

        let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = trial_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        x.copy_from_slice(&trial);
        grad.copy_from_slice(&trial_grad);
        f = f_new;

        let new_active = active_set(&x, &grad, bounds);
        if new_active != active {
            memory.clear();
            active = new_active;
        }
        let sy = dot(&s, &y);
        if opts.memory > 0 && sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if memory.len() == opts.memory {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
    }
}

fn evaluate(objective: &dyn SmoothObjective, x: &[f64], grad: &mut [f64]) -> Result<f64> {
    let f = objective.value_and_gradient(x, grad);
    if !f.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(DoneError::NonFinite(format!(
            "objective or gradient not finite at x = {x:?} (f = {f})"
        )));
    }
    Ok(f)
}

/// Variables pinned at a bound with the gradient pushing outward.
fn active_set(x: &[f64], grad: &[f64], bounds: &SearchBox) -> Vec<bool> {
    x.iter()
        .zip(grad)
        .enumerate()
        .map(|(i, (&v, &g))| (v <= bounds.lower[i] && g > 0.0) || (v >= bounds.upper[i] && g < 0.0))
        .collect()
}

/// `||x - P(x - grad)||_inf`.
fn projected_grad_norm(x: &[f64], grad: &[f64], bounds: &SearchBox) -> f64 {
    x.iter()
        .zip(grad)
        .enumerate()
        .map(|(i, (&v, &g))| (v - (v - g).clamp(bounds.lower[i], bounds.upper[i])).abs())
        .fold(0.0, f64::max)
}

fn two_loop(
    grad: &[f64],
    active: &[bool],
    memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>,
) -> Vec<f64> {
    let mut q: Vec<f64> = grad
        .iter()
        .zip(active)
        .map(|(g, a)| if *a { 0.0 } else { *g })
        .collect();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let alpha = rho * dot(s, &q);
        axpy(-alpha, y, &mut q);
        alphas.push(alpha);
    }
    if let Some((s, y, _)) = memory.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), alpha) in memory.iter().zip(alphas.into_iter().rev()) {
        let beta = rho * dot(y, &q);
        axpy(alpha - beta, s, &mut q);
    }
    q.iter()
        .zip(active)
        .map(|(v, a)| if *a { 0.0 } else { -v })
        .collect()
}

fn initial_step(direction: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> f64 {
    if memory.is_empty() {
        let norm = direction.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if norm > 1.0 {
            return 1.0 / norm;
        }
    }
    1.0
}

#[allow(clippy::too_many_arguments)]
fn line_search(
    objective: &dyn SmoothObjective,
    bounds: &SearchBox,
    x: &[f64],
    f: f64,
    grad: &[f64],
    direction: &[f64],
    mut step: f64,
    trial: &mut [f64],
    trial_grad: &mut [f64],
) -> Result<Option<f64>> {
    for _ in 0..=MAX_BACKTRACKS {
        for i in 0..x.len() {
            trial[i] = (x[i] + step * direction[i]).clamp(bounds.lower[i], bounds.upper[i]);
        }
        let decrease: f64 = trial
            .iter()
            .zip(x)
            .zip(grad)
            .map(|((t, v), g)| g * (t - v))
            .sum();
        if decrease >= 0.0 {
            // projection turned the step uphill or left the point unchanged
            if trial.iter().zip(x).all(|(t, v)| t == v) {
                return Ok(None);
            }
            step *= BACKTRACK_FACTOR;
            continue;
        }
        let f_trial = evaluate(objective, trial, trial_grad)?;
        if f_trial <= f + ARMIJO_C1 * decrease {
            return Ok(Some(f_trial));
        }
        step *= BACKTRACK_FACTOR;
    }
    Ok(None)
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;
    use std::cell::RefCell;

    fn sphere(x: &[f64], g: &mut [f64]) -> f64 {
        for (gi, xi) in g.iter_mut().zip(x) {
            *gi = 2.0 * xi;
        }
        x.iter().map(|v| v * v).sum()
    }

    fn camelback(x: &[f64], g: &mut [f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        g[0] = 8.0 * a - 8.4 * a.powi(3) + 2.0 * a.powi(5) + b;
        g[1] = a - 8.0 * b + 16.0 * b.powi(3);
        (4.0 - 2.1 * a * a + a.powi(4) / 3.0) * a * a + a * b + (-4.0 + 4.0 * b * b) * b * b
    }

    #[test]
    fn convex_quadratic() {
        let b = SearchBox::uniform(-1.0, 1.0, 3).unwrap();
        let r = minimize(&sphere, &[0.5, -0.5, 0.2], &b, &SolverOptions::default()).unwrap();
        assert!(r.converged);
        assert!(r.minimizer.iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn linear_objective_hits_corner() {
        let b = SearchBox::uniform(0.0, 1.0, 2).unwrap();
        let f = |x: &[f64], g: &mut [f64]| {
            g.fill(1.0);
            x.iter().sum()
        };
        let r = minimize(&f, &[0.5, 0.5], &b, &SolverOptions::default()).unwrap();
        assert_eq!(r.minimizer, vec![0.0, 0.0]);
        assert!(r.converged);
        assert_eq!(r.grad_inf_norm, 0.0);
    }

    #[test]
    fn camelback_local_minimum() {
        let b = SearchBox::new(vec![-2.0, -1.0], vec![2.0, 1.0]).unwrap();
        let r = minimize(&camelback, &[0.1, -0.6], &b, &SolverOptions::default()).unwrap();
        assert!((r.minimizer[0] - 0.0898).abs() < 1e-4, "{:?}", r.minimizer);
        assert!((r.minimizer[1] + 0.7126).abs() < 1e-4, "{:?}", r.minimizer);
        assert!((r.value + 1.0316).abs() < 1e-4);
        assert!(r.converged);
    }

    #[test]
    fn non_finite_aborts() {
        let b = SearchBox::uniform(-1.0, 1.0, 1).unwrap();
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 1.0;
            if x[0] < 0.0 {
                f64::NAN
            } else {
                x[0]
            }
        };
        let r = minimize(&f, &[0.5], &b, &SolverOptions::default());
        assert!(matches!(r, Err(DoneError::NonFinite(_))));
    }

    #[test]
    fn evaluated_points_stay_feasible_and_values_decrease() {
        let b = SearchBox::uniform(-0.3, 0.4, 4).unwrap();
        let seen = RefCell::new(Vec::new());
        let f = |x: &[f64], g: &mut [f64]| {
            seen.borrow_mut().push(x.to_vec());
            let target = [1.0, -1.0, 0.2, 0.0];
            let mut v = 0.0;
            for i in 0..4 {
                let r = x[i] - target[i];
                v += r * r + (3.0 * x[i]).sin();
                g[i] = 2.0 * r + 3.0 * (3.0 * x[i]).cos();
            }
            v
        };
        let start = vec![0.1, 0.2, -0.1, 0.3];
        let mut g0 = vec![0.0; 4];
        let f0 = f(&start, &mut g0);
        let r = minimize(&f, &start, &b, &SolverOptions::default()).unwrap();
        assert!(r.value <= f0 + 1e-12);
        assert!(seen.borrow().iter().all(|x| b.contains(x)));
        assert!(b.contains(&r.minimizer));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn interior_quadratic_matches_linear_solve(
            d in 1usize..=10,
            entries in proptest::collection::vec(-1.0f64..1.0, 100),
            rhs in proptest::collection::vec(-1.0f64..1.0, 10),
        ) {
            let m = DMatrix::from_fn(d, d, |i, j| entries[i * 10 + j]);
            let h = &m * m.transpose() + DMatrix::identity(d, d);
            let bvec = DVector::from_column_slice(&rhs[..d]);
            let exact = h.clone().lu().solve(&bvec).unwrap();
            let f = |x: &[f64], g: &mut [f64]| {
                let xv = DVector::from_column_slice(x);
                let hx = &h * &xv;
                g.copy_from_slice((&hx - &bvec).as_slice());
                0.5 * xv.dot(&hx) - bvec.dot(&xv)
            };
            let bounds = SearchBox::uniform(-1e3, 1e3, d).unwrap();
            let opts = SolverOptions { grad_tol: 1e-11, max_iter: 500, ..Default::default() };
            let r = minimize(&f, &vec![0.0; d], &bounds, &opts).unwrap();
            let err = r.minimizer.iter().zip(exact.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            prop_assert!(err < 1e-8, "error {}", err);
        }
    }
}
