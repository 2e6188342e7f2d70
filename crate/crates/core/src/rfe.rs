//! Random Fourier expansions.
//!
//! An [`RfeModel`] is `g(x) = sum_k c_k cos(w_k^T x + b_k)` with `D` terms in
//! `d` input dimensions. Frequencies come from a [`FreqDistribution`], phases
//! are uniform on `[0, 2pi)`, and weights start at zero until a fit assigns them.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, DoneError, Result};
use crate::linalg;
use crate::rng::{stream_rng, Stream, StreamRng};

/// Tolerance on the trapezoid integral of a tabulated density.
pub const DENSITY_NORMALIZATION_TOL: f64 = 1e-6;

/// A law from which RFE frequencies can be drawn and whose density can be
/// evaluated at a drawn point.
///
/// Estimators that reweight by `1 / p(w)` need both halves to agree exactly,
/// so implementors must return the density of the sampler they actually use.
pub trait FrequencyLaw {
    fn sample_frequency(&self, dim: usize, rng: &mut StreamRng) -> Result<Vec<f64>>;
    fn density(&self, w: &[f64]) -> f64;
}

/// One coordinate of a separable tabulated frequency density.
///
/// Sampling inverts the piecewise-linear CDF built from trapezoid sums, so the
/// density actually sampled is constant on each grid cell at the cell-average
/// of the tabulated end values; [`TabulatedMarginal::density`] reports exactly
/// that.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMarginal", into = "RawMarginal")]
pub struct TabulatedMarginal {
    grid: Vec<f64>,
    density: Vec<f64>,
    cdf: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawMarginal {
    grid: Vec<f64>,
    density: Vec<f64>,
}

impl TryFrom<RawMarginal> for TabulatedMarginal {
    type Error = DoneError;
    fn try_from(raw: RawMarginal) -> Result<Self> {
        TabulatedMarginal::new(raw.grid, raw.density)
    }
}

impl From<TabulatedMarginal> for RawMarginal {
    fn from(m: TabulatedMarginal) -> Self {
        RawMarginal {
            grid: m.grid,
            density: m.density,
        }
    }
}

impl TabulatedMarginal {
    /// Builds a marginal whose density already integrates to one.
    pub fn new(grid: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        let cdf = Self::validate(&grid, &density)?;
        let total = *cdf.last().unwrap();
        if (total - 1.0).abs() > DENSITY_NORMALIZATION_TOL {
            return Err(DoneError::InvalidDistribution(format!(
                "tabulated density integrates to {total}, expected 1"
            )));
        }
        let cdf = cdf.into_iter().map(|c| c / total).collect();
        Ok(Self { grid, density, cdf })
    }

    /// Builds a marginal from any nonnegative profile, rescaling it to unit mass.
    pub fn normalized(grid: Vec<f64>, profile: Vec<f64>) -> Result<Self> {
        let cdf = Self::validate(&grid, &profile)?;
        let total = *cdf.last().unwrap();
        if !(total > 0.0) || !total.is_finite() {
            return Err(DoneError::InvalidDistribution(
                "tabulated profile has no mass".into(),
            ));
        }
        let density = profile.into_iter().map(|p| p / total).collect();
        Self::new(grid, density)
    }

    fn validate(grid: &[f64], density: &[f64]) -> Result<Vec<f64>> {
        if grid.len() < 2 || grid.len() != density.len() {
            return Err(DoneError::InvalidDistribution(format!(
                "grid of {} points with {} density values",
                grid.len(),
                density.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(DoneError::InvalidDistribution(
                "grid must be strictly increasing".into(),
            ));
        }
        if density.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(DoneError::InvalidDistribution(
                "density values must be finite and nonnegative".into(),
            ));
        }
        let mut cdf = Vec::with_capacity(grid.len());
        cdf.push(0.0);
        for i in 1..grid.len() {
            let cell = 0.5 * (density[i - 1] + density[i]) * (grid[i] - grid[i - 1]);
            cdf.push(cdf[i - 1] + cell);
        }
        Ok(cdf)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.density
    }

    /// Inverse-CDF draw for `u` in `[0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        let n = self.cdf.len();
        // first index with cdf > u, clamped to a valid cell
        let hi = self.cdf.partition_point(|&c| c <= u).clamp(1, n - 1);
        let lo = hi - 1;
        let mass = self.cdf[hi] - self.cdf[lo];
        if mass <= 0.0 {
            return self.grid[lo];
        }
        let t = ((u - self.cdf[lo]) / mass).clamp(0.0, 1.0);
        self.grid[lo] + t * (self.grid[hi] - self.grid[lo])
    }

    pub fn density(&self, w: f64) -> f64 {
        let n = self.grid.len();
        if !(w >= self.grid[0] && w <= self.grid[n - 1]) {
            return 0.0;
        }
        let hi = self.grid.partition_point(|&g| g <= w).clamp(1, n - 1);
        let lo = hi - 1;
        (self.cdf[hi] - self.cdf[lo]) / (self.grid[hi] - self.grid[lo])
    }

    pub fn sample(&self, rng: &mut StreamRng) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    pub fn mean(&self) -> f64 {
        // exact for the piecewise-constant sampled density
        self.grid
            .windows(2)
            .zip(self.cdf.windows(2))
            .map(|(g, c)| (c[1] - c[0]) * 0.5 * (g[0] + g[1]))
            .sum()
    }
}

/// Sampling law for the RFE frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FreqDistribution {
    /// `N(0, sigma^2 I)`.
    IsotropicGaussian { sigma: f64 },
    /// Independent coordinates, each from a tabulated marginal. A single
    /// marginal is shared by every coordinate; otherwise there must be one per
    /// coordinate.
    Tabulated { marginals: Vec<TabulatedMarginal> },
}

impl FreqDistribution {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        let dist = FreqDistribution::IsotropicGaussian { sigma };
        dist.validate()?;
        Ok(dist)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FreqDistribution::IsotropicGaussian { sigma } => {
                if *sigma > 0.0 && sigma.is_finite() {
                    Ok(())
                } else {
                    Err(DoneError::InvalidDistribution(format!(
                        "gaussian sigma must be positive, got {sigma}"
                    )))
                }
            }
            FreqDistribution::Tabulated { marginals } => {
                if marginals.is_empty() {
                    return Err(DoneError::InvalidDistribution(
                        "tabulated distribution has no marginals".into(),
                    ));
                }
                // marginals are validated on construction and deserialization
                Ok(())
            }
        }
    }

    fn marginal(&self, coord: usize, dim: usize) -> Result<&TabulatedMarginal> {
        match self {
            FreqDistribution::Tabulated { marginals } => match marginals.len() {
                1 => Ok(&marginals[0]),
                n if n == dim => Ok(&marginals[coord]),
                n => Err(DoneError::DimensionMismatch {
                    expected: dim,
                    got: n,
                }),
            },
            FreqDistribution::IsotropicGaussian { .. } => unreachable!(),
        }
    }
}

impl FrequencyLaw for FreqDistribution {
    fn sample_frequency(&self, dim: usize, rng: &mut StreamRng) -> Result<Vec<f64>> {
        match self {
            FreqDistribution::IsotropicGaussian { sigma } => Ok((0..dim)
                .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
                .collect()),
            FreqDistribution::Tabulated { .. } => (0..dim)
                .map(|i| Ok(self.marginal(i, dim)?.sample(rng)))
                .collect(),
        }
    }

    fn density(&self, w: &[f64]) -> f64 {
        match self {
            FreqDistribution::IsotropicGaussian { sigma } => {
                let norm = (TAU.sqrt() * sigma).powi(w.len() as i32);
                let q: f64 = w.iter().map(|v| v * v).sum();
                (-0.5 * q / (sigma * sigma)).exp() / norm
            }
            FreqDistribution::Tabulated { .. } => w
                .iter()
                .enumerate()
                .map(|(i, &v)| self.marginal(i, w.len()).map_or(0.0, |m| m.density(v)))
                .product(),
        }
    }
}

/// Measurement pairs `(x_i, y_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Vec<Vec<f64>>,
    outputs: Vec<f64>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, outputs: Vec<f64>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(DoneError::EmptyDataset);
        }
        check_dim(inputs.len(), outputs.len())?;
        let d = inputs[0].len();
        for x in &inputs {
            check_dim(d, x.len())?;
        }
        Ok(Self { inputs, outputs })
    }

    /// Evaluates `f` at `n` points drawn uniformly from `[lower_i, upper_i]`.
    pub fn sample_uniform(
        lower: &[f64],
        upper: &[f64],
        n: usize,
        seed: u64,
        mut f: impl FnMut(&[f64]) -> f64,
    ) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        let mut rng = stream_rng(seed, Stream::Data);
        let inputs: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                lower
                    .iter()
                    .zip(upper)
                    .map(|(&lo, &hi)| rng.random_range(lo..hi))
                    .collect()
            })
            .collect();
        let outputs = inputs.iter().map(|x| f(x)).collect();
        Self::new(inputs, outputs)
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }
}

/// A random Fourier expansion `g(x) = sum_k c_k cos(w_k^T x + b_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RfeModel {
    dim: usize,
    /// Row-major `D x d`.
    freqs: Vec<f64>,
    phases: Vec<f64>,
    weights: Vec<f64>,
}

impl RfeModel {
    /// Draws `num_features` frequencies from `dist` and phases uniformly from
    /// `[0, 2pi)`, each from its own sub-stream of `seed`. Weights start at zero.
    pub fn sample(
        dim: usize,
        num_features: usize,
        dist: &FreqDistribution,
        seed: u64,
    ) -> Result<Self> {
        if dim == 0 || num_features == 0 {
            return Err(DoneError::InvalidParameter(format!(
                "dimension ({dim}) and feature count ({num_features}) must be positive"
            )));
        }
        dist.validate()?;
        let mut freq_rng = stream_rng(seed, Stream::Frequencies);
        let mut phase_rng = stream_rng(seed, Stream::Phases);
        let mut freqs = Vec::with_capacity(num_features * dim);
        for _ in 0..num_features {
            freqs.extend(dist.sample_frequency(dim, &mut freq_rng)?);
        }
        let phases = (0..num_features)
            .map(|_| phase_rng.random_range(0.0..TAU))
            .collect();
        Ok(Self {
            dim,
            freqs,
            phases,
            weights: vec![0.0; num_features],
        })
    }

    /// Assembles a model from explicit parameters. `freqs` holds one length-`dim`
    /// vector per feature.
    pub fn from_parts(
        dim: usize,
        freqs: Vec<Vec<f64>>,
        phases: Vec<f64>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 || freqs.is_empty() {
            return Err(DoneError::InvalidParameter(
                "model needs a positive dimension and at least one feature".into(),
            ));
        }
        check_dim(freqs.len(), phases.len())?;
        check_dim(freqs.len(), weights.len())?;
        for w in &freqs {
            check_dim(dim, w.len())?;
        }
        if let Some(b) = phases.iter().find(|b| !(**b >= 0.0 && **b < TAU)) {
            return Err(DoneError::InvalidParameter(format!(
                "phase {b} outside [0, 2pi)"
            )));
        }
        Ok(Self {
            dim,
            freqs: freqs.concat(),
            phases,
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_features(&self) -> usize {
        self.phases.len()
    }

    pub fn frequency(&self, k: usize) -> &[f64] {
        &self.freqs[k * self.dim..(k + 1) * self.dim]
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        check_dim(self.num_features(), weights.len())?;
        Ok(Self {
            weights,
            ..self.clone()
        })
    }

    /// Overwrites the weights in place.
    pub fn set_weights(&mut self, weights: &[f64]) -> Result<()> {
        check_dim(self.num_features(), weights.len())?;
        self.weights.copy_from_slice(weights);
        Ok(())
    }

    #[inline]
    fn argument(&self, k: usize, x: &[f64]) -> f64 {
        let w = self.frequency(k);
        w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.phases[k]
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok((0..self.num_features())
            .map(|k| self.weights[k] * self.argument(k, x).cos())
            .sum())
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut grad = vec![0.0; self.dim];
        self.eval_with_gradient(x, &mut grad)?;
        Ok(grad)
    }

    /// Value and gradient in one pass; `grad` is overwritten.
    pub fn eval_with_gradient(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        check_dim(self.dim, grad.len())?;
        grad.fill(0.0);
        let mut value = 0.0;
        for k in 0..self.num_features() {
            let c = self.weights[k];
            if c == 0.0 {
                continue;
            }
            let (s, co) = self.argument(k, x).sin_cos();
            value += c * co;
            let scale = -c * s;
            for (g, w) in grad.iter_mut().zip(self.frequency(k)) {
                *g += scale * w;
            }
        }
        Ok(value)
    }

    /// `[cos(w_1^T x + b_1), ..., cos(w_D^T x + b_D)]`.
    pub fn regressor_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut row = vec![0.0; self.num_features()];
        self.regressor_row_into(x, &mut row)?;
        Ok(row)
    }

    pub fn regressor_row_into(&self, x: &[f64], row: &mut [f64]) -> Result<()> {
        check_dim(self.dim, x.len())?;
        check_dim(self.num_features(), row.len())?;
        for (k, r) in row.iter_mut().enumerate() {
            *r = self.argument(k, x).cos();
        }
        Ok(())
    }

    /// `N x D` matrix of regressor rows.
    pub fn design_matrix(&self, data: &Dataset) -> Result<DMatrix<f64>> {
        check_dim(self.dim, data.dim())?;
        let d = self.num_features();
        let mut a = DMatrix::zeros(data.len(), d);
        for (i, x) in data.inputs().iter().enumerate() {
            for k in 0..d {
                a[(i, k)] = self.argument(k, x).cos();
            }
        }
        Ok(a)
    }

    /// Regularized least-squares weights `(A^T A + lambda I)^-1 A^T y`, solved
    /// by Cholesky on the normal equations. Frequencies and phases are kept.
    pub fn fit_batch(&self, data: &Dataset, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(DoneError::InvalidParameter(format!(
                "regularization must be positive, got {lambda}"
            )));
        }
        let a = self.design_matrix(data)?;
        let y = DVector::from_column_slice(data.outputs());
        let c = linalg::ridge_solve(&a, &y, lambda)?;
        self.with_weights(c.as_slice().to_vec())
    }

    /// Root mean squared residual over `data`.
    pub fn rmse(&self, data: &Dataset) -> Result<f64> {
        if data.is_empty() {
            return Err(DoneError::EmptyDataset);
        }
        let mut sq = 0.0;
        for (x, y) in data.inputs().iter().zip(data.outputs()) {
            let r = y - self.eval(x)?;
            sq += r * r;
        }
        Ok((sq / data.len() as f64).sqrt())
    }

    /// Monte-Carlo kernel value `(2/D) sum_k cos(w_k^T xi + b_k) cos(w_k^T xj + b_k)`.
    pub fn kernel_estimate(&self, xi: &[f64], xj: &[f64]) -> Result<f64> {
        check_dim(self.dim, xi.len())?;
        check_dim(self.dim, xj.len())?;
        let d = self.num_features();
        let s: f64 = (0..d)
            .map(|k| self.argument(k, xi).cos() * self.argument(k, xj).cos())
            .sum();
        Ok(2.0 * s / d as f64)
    }
}

/// `J(c) = ||y - A c||^2 + lambda ||c||^2`.
pub fn ridge_objective(model: &RfeModel, data: &Dataset, lambda: f64) -> Result<f64> {
    let mut j = lambda * model.weights().iter().map(|c| c * c).sum::<f64>();
    for (x, y) in data.inputs().iter().zip(data.outputs()) {
        let r = y - model.eval(x)?;
        j += r * r;
    }
    Ok(j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::PI;

    fn central_difference(model: &RfeModel, x: &[f64], h: f64) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[i] += h;
                xm[i] -= h;
                (model.eval(&xp).unwrap() - model.eval(&xm).unwrap()) / (2.0 * h)
            })
            .collect()
    }

    fn random_model(d: usize, num: usize, seed: u64) -> RfeModel {
        let m = RfeModel::sample(d, num, &FreqDistribution::gaussian(1.5).unwrap(), seed).unwrap();
        let mut rng = stream_rng(seed, Stream::Data);
        let w = (0..num).map(|_| rng.random_range(-1.0..1.0)).collect();
        m.with_weights(w).unwrap()
    }

    #[test]
    fn sample_has_zero_weights_and_valid_phases() {
        let m = RfeModel::sample(2, 3, &FreqDistribution::gaussian(1.0).unwrap(), 7).unwrap();
        assert_eq!(m.num_features(), 3);
        assert_eq!(m.dim(), 2);
        assert_eq!(m.weights(), &[0.0, 0.0, 0.0]);
        assert!(m.phases().iter().all(|b| (0.0..TAU).contains(b)));
        let again = RfeModel::sample(2, 3, &FreqDistribution::gaussian(1.0).unwrap(), 7).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn invalid_sigma_rejected() {
        let dist = FreqDistribution::IsotropicGaussian { sigma: 0.0 };
        assert!(matches!(
            RfeModel::sample(1, 1, &dist, 0),
            Err(DoneError::InvalidDistribution(_))
        ));
    }

    #[test]
    fn unnormalized_table_rejected() {
        assert!(TabulatedMarginal::new(vec![0.0, 1.0], vec![2.0, 2.0]).is_err());
        assert!(TabulatedMarginal::new(vec![0.0, 1.0], vec![1.0, 1.0]).is_ok());
    }

    #[test]
    fn sampled_frequency_spread_matches_sigma() {
        let m = RfeModel::sample(2, 500, &FreqDistribution::gaussian(10.0).unwrap(), 1).unwrap();
        let all: Vec<f64> = (0..500).flat_map(|k| m.frequency(k).to_vec()).collect();
        let mean = all.iter().sum::<f64>() / all.len() as f64;
        let var = all.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (all.len() - 1) as f64;
        let sd = var.sqrt();
        assert!((9.0..=11.0).contains(&sd), "sd = {sd}");
    }

    #[test]
    fn eval_examples() {
        let zero = RfeModel::sample(3, 4, &FreqDistribution::gaussian(1.0).unwrap(), 2).unwrap();
        assert_eq!(zero.eval(&[0.3, -1.0, 2.0]).unwrap(), 0.0);

        let constant = RfeModel::from_parts(1, vec![vec![0.0]], vec![0.0], vec![2.0]).unwrap();
        assert_eq!(constant.eval(&[123.4]).unwrap(), 2.0);

        let two = RfeModel::from_parts(
            1,
            vec![vec![PI], vec![PI]],
            vec![0.0, PI / 2.0],
            vec![1.0, 1.0],
        )
        .unwrap();
        assert!((two.eval(&[1.0]).unwrap() + 1.0).abs() < 1e-12);
        assert!(matches!(
            two.eval(&[1.0, 2.0]),
            Err(DoneError::DimensionMismatch {
                expected: 1,
                got: 2
            })
        ));
    }

    #[test]
    fn gradient_examples() {
        let zero = RfeModel::sample(2, 4, &FreqDistribution::gaussian(1.0).unwrap(), 2).unwrap();
        assert_eq!(zero.gradient(&[0.1, 0.2]).unwrap(), vec![0.0, 0.0]);
        let m = RfeModel::from_parts(1, vec![vec![1.0]], vec![0.0], vec![1.0]).unwrap();
        assert_eq!(m.gradient(&[0.0]).unwrap(), vec![0.0]);
        assert!(m.gradient(&[0.0, 0.0]).is_err());

        let model = random_model(3, 20, 11);
        let x = [0.3, -0.7, 0.45];
        let g = model.gradient(&x).unwrap();
        let fd = central_difference(&model, &x, 1e-5);
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() <= 1e-5 * a.abs().max(1e-3), "{a} vs {b}");
        }
    }

    #[test]
    fn regressor_row_examples() {
        let m =
            RfeModel::from_parts(2, vec![vec![0.0, 0.0]; 3], vec![0.0; 3], vec![0.0; 3]).unwrap();
        assert_eq!(m.regressor_row(&[4.0, -2.0]).unwrap(), vec![1.0; 3]);

        let m = RfeModel::from_parts(
            1,
            vec![vec![PI], vec![PI / 2.0]],
            vec![0.0, 0.0],
            vec![0.0; 2],
        )
        .unwrap();
        let row = m.regressor_row(&[1.0]).unwrap();
        assert!((row[0] + 1.0).abs() < 1e-12 && row[1].abs() < 1e-12);
    }

    #[test]
    fn fit_batch_scalar_closed_form() {
        let m = RfeModel::from_parts(1, vec![vec![0.7]], vec![0.2], vec![0.0]).unwrap();
        let x = 0.4;
        let a = (0.7f64 * x + 0.2).cos();
        let (y, lambda) = (1.3, 0.25);
        let fit = m
            .fit_batch(&Dataset::new(vec![vec![x]], vec![y]).unwrap(), lambda)
            .unwrap();
        let expected = a * y / (a * a + lambda);
        assert!((fit.weights()[0] - expected).abs() < 1e-14);
    }

    #[test]
    fn fit_batch_recovers_generating_weights() {
        let truth = random_model(2, 20, 5);
        let data = Dataset::sample_uniform(&[-2.0, -2.0], &[2.0, 2.0], 200, 9, |x| {
            truth.eval(x).unwrap()
        })
        .unwrap();
        let fit = truth
            .with_weights(vec![0.0; 20])
            .unwrap()
            .fit_batch(&data, 1e-10)
            .unwrap();
        let err = fit
            .weights()
            .iter()
            .zip(truth.weights())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "max weight error {err}");
        assert!(fit.rmse(&data).unwrap() < 1e-8);
    }

    #[test]
    fn fit_batch_rejects_bad_lambda() {
        let m = random_model(1, 2, 0);
        let data = Dataset::new(vec![vec![0.0]], vec![1.0]).unwrap();
        assert!(m.fit_batch(&data, 0.0).is_err());
        assert!(m.fit_batch(&data, -1.0).is_err());
        let wrong = Dataset::new(vec![vec![0.0, 1.0]], vec![1.0]).unwrap();
        assert!(matches!(
            m.fit_batch(&wrong, 1.0),
            Err(DoneError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn fit_batch_is_a_minimizer() {
        let model = random_model(2, 15, 3).with_weights(vec![0.0; 15]).unwrap();
        let data = Dataset::sample_uniform(&[-1.0, -1.0], &[1.0, 1.0], 40, 4, |x| {
            (3.0 * x[0]).sin() + x[1] * x[1]
        })
        .unwrap();
        let lambda = 1e-2;
        let fit = model.fit_batch(&data, lambda).unwrap();
        let j0 = ridge_objective(&fit, &data, lambda).unwrap();
        let mut rng = stream_rng(99, Stream::Data);
        for _ in 0..20 {
            let dir: Vec<f64> = (0..15)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            let w: Vec<f64> = fit
                .weights()
                .iter()
                .zip(&dir)
                .map(|(c, v)| c + 1e-4 * v / norm)
                .collect();
            let j = ridge_objective(&fit.with_weights(w).unwrap(), &data, lambda).unwrap();
            assert!(j >= j0 - 1e-12, "objective decreased: {j} < {j0}");
        }
    }

    #[test]
    fn rmse_examples() {
        let m = RfeModel::from_parts(1, vec![vec![0.0]], vec![0.0], vec![0.0]).unwrap();
        let exact = Dataset::new(vec![vec![1.0], vec![2.0]], vec![0.0, 0.0]).unwrap();
        assert_eq!(m.rmse(&exact).unwrap(), 0.0);
        let constant = Dataset::new(vec![vec![1.0], vec![2.0]], vec![-2.5, -2.5]).unwrap();
        assert_eq!(m.rmse(&constant).unwrap(), 2.5);
        let mixed = Dataset::new(vec![vec![1.0], vec![2.0]], vec![3.0, 4.0]).unwrap();
        assert!((m.rmse(&mixed).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(Dataset::new(vec![], vec![]), Err(DoneError::EmptyDataset));
    }

    #[test]
    fn kernel_approximation_converges() {
        // k(r) = exp(-|r|^2 / 2) has spectral density N(0, I)
        let model =
            RfeModel::sample(2, 10_000, &FreqDistribution::gaussian(1.0).unwrap(), 21).unwrap();
        let mut rng = stream_rng(22, Stream::Data);
        for _ in 0..20 {
            let xi: [f64; 2] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let xj: [f64; 2] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let r2 = (xi[0] - xj[0]).powi(2) + (xi[1] - xj[1]).powi(2);
            let k = (-0.5 * r2).exp();
            let est = model.kernel_estimate(&xi, &xj).unwrap();
            assert!((est - k).abs() < 5e-2, "{est} vs {k}");
        }
    }

    #[test]
    fn tabulated_sampling_matches_density() {
        let grid: Vec<f64> = (0..=200).map(|i| -5.0 + 0.05 * i as f64).collect();
        let profile: Vec<f64> = grid.iter().map(|w| (-0.5 * w * w).exp()).collect();
        let m = TabulatedMarginal::normalized(grid, profile).unwrap();
        let mut rng = stream_rng(1, Stream::Frequencies);
        let n = 50_000;
        let samples: Vec<f64> = (0..n).map(|_| m.sample(&mut rng)).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|v| v * v).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.03, "var {var}");
        assert_eq!(m.density(10.0), 0.0);
        assert!((m.density(0.01) - 1.0 / TAU.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn freq_distribution_json_round_trip() {
        let dist = FreqDistribution::Tabulated {
            marginals: vec![TabulatedMarginal::new(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap()],
        };
        let text = serde_json::to_string(&dist).unwrap();
        let back: FreqDistribution = serde_json::from_str(&text).unwrap();
        assert_eq!(dist, back);
        let bad = r#"{"kind":"tabulated","marginals":[{"grid":[0,1],"density":[3,3]}]}"#;
        assert!(serde_json::from_str::<FreqDistribution>(bad).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn gradient_matches_central_differences(
            d in 1usize..=5,
            num in 1usize..=50,
            seed in 0u64..10_000,
            xs in proptest::collection::vec(-2.0f64..2.0, 5),
        ) {
            let model = random_model(d, num, seed);
            let x = &xs[..d];
            let g = model.gradient(x).unwrap();
            let fd = central_difference(&model, x, 1e-5);
            for (a, b) in g.iter().zip(&fd) {
                let err = (a - b).abs();
                prop_assert!(err < 1e-8 || err <= 1e-5 * a.abs(), "{} vs {}", a, b);
            }
        }

        #[test]
        fn eval_is_dot_of_weights_and_regressors(
            d in 1usize..=4,
            num in 1usize..=30,
            seed in 0u64..10_000,
            xs in proptest::collection::vec(-3.0f64..3.0, 4),
        ) {
            let model = random_model(d, num, seed);
            let x = &xs[..d];
            let row = model.regressor_row(x).unwrap();
            prop_assert!(row.iter().all(|r| (-1.0..=1.0).contains(r)));
            let dot: f64 = row.iter().zip(model.weights()).map(|(a, c)| a * c).sum();
            prop_assert!((dot - model.eval(x).unwrap()).abs() <= 1e-12 * (1.0 + dot.abs()));
        }
    }
}
