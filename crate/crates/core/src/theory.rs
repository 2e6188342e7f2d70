//! Executable checks of the estimator theory behind the expansion: ideal
//! weights, unbiased Monte-Carlo estimators, optimal sampling densities and
//! their second-moment orderings.
//!
//! Transforms use `f^(w) = int f(x) exp(-i w x) dx`, so
//! `f(x) = (2 pi)^-d int |f^(w)| cos(w x + arg f^(w)) dw`.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{check_dim, DoneError, Result};
use crate::linalg;
use crate::quad::adaptive_simpson;
use crate::rfe::{Dataset, FreqDistribution, FrequencyLaw, RfeModel};
use crate::rng::{draw_rng, StreamRng};

const QUAD_TOL: f64 = 1e-8;
const MAX_REJECTIONS: usize = 100_000;

/// A function together with its closed-form Fourier transform.
pub trait SpectralFunction: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64;

    fn transform(&self, w: &[f64]) -> Complex64;

    /// `int |f^(w)| dw`.
    fn magnitude_integral(&self) -> f64;

    /// One draw from `|f^| / int |f^|`; `None` when `f^` vanishes.
    fn sample_matched(&self, rng: &mut StreamRng) -> Option<Vec<f64>>;

    /// Interval holding all but a negligible part of `|f^|` (1-D).
    fn frequency_range(&self) -> (f64, f64);

    /// Interval holding all but a negligible part of `|f|` (1-D).
    fn spatial_range(&self) -> (f64, f64);

    fn magnitude(&self, w: &[f64]) -> f64 {
        self.transform(w).norm()
    }

    fn phase(&self, w: &[f64]) -> f64 {
        self.transform(w).arg()
    }

    /// `c*(w, b) = |f^(w)| cos(arg f^(w) - b) / pi`.
    fn ideal_weight(&self, w: &[f64], b: f64) -> f64 {
        let z = self.transform(w);
        z.norm() * (z.arg() - b).cos() / PI
    }
}

/// `f(x) = A exp(-(x - s)^2 / (2 w^2))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBump {
    pub amplitude: f64,
    pub width: f64,
    pub shift: f64,
}

impl SpectralFunction for GaussianBump {
    fn name(&self) -> &str {
        "gaussian-bump"
    }

    fn value(&self, x: &[f64]) -> f64 {
        let u = (x[0] - self.shift) / self.width;
        self.amplitude * (-0.5 * u * u).exp()
    }

    fn transform(&self, w: &[f64]) -> Complex64 {
        let v = self.width * w[0];
        let mag = self.amplitude * self.width * TAU.sqrt() * (-0.5 * v * v).exp();
        Complex64::from_polar(mag, -w[0] * self.shift)
    }

    fn magnitude_integral(&self) -> f64 {
        TAU * self.amplitude.abs()
    }

    fn sample_matched(&self, rng: &mut StreamRng) -> Option<Vec<f64>> {
        if self.amplitude == 0.0 {
            return None;
        }
        let z: f64 = rng.sample(StandardNormal);
        Some(vec![z / self.width])
    }

    fn frequency_range(&self) -> (f64, f64) {
        (-12.0 / self.width, 12.0 / self.width)
    }

    fn spatial_range(&self) -> (f64, f64) {
        (
            self.shift - 12.0 * self.width,
            self.shift + 12.0 * self.width,
        )
    }
}

/// `f(x) = exp(-x^2 / (2 w^2)) cos(w0 x + theta)`; its spectrum is two shifted
/// Gaussians with opposite phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulatedGaussian {
    pub width: f64,
    pub carrier: f64,
    pub theta: f64,
    integral: f64,
}

impl ModulatedGaussian {
    pub fn new(width: f64, carrier: f64, theta: f64) -> Result<Self> {
        if !(width > 0.0) || !carrier.is_finite() || !theta.is_finite() {
            return Err(DoneError::InvalidParameter(format!(
                "modulated gaussian needs positive width, got {width}"
            )));
        }
        let mut out = Self {
            width,
            carrier,
            theta,
            integral: 0.0,
        };
        let (a, b) = out.frequency_range();
        out.integral = adaptive_simpson(&|w| out.magnitude(&[w]), a, b, QUAD_TOL)?;
        Ok(out)
    }

    fn envelope_part(&self, w: f64) -> f64 {
        let v = self.width * w;
        self.width * TAU.sqrt() * (-0.5 * v * v).exp()
    }
}

impl SpectralFunction for ModulatedGaussian {
    fn name(&self) -> &str {
        "modulated-gaussian"
    }

    fn value(&self, x: &[f64]) -> f64 {
        let u = x[0] / self.width;
        (-0.5 * u * u).exp() * (self.carrier * x[0] + self.theta).cos()
    }

    fn transform(&self, w: &[f64]) -> Complex64 {
        let up = Complex64::from_polar(self.envelope_part(w[0] - self.carrier), self.theta);
        let down = Complex64::from_polar(self.envelope_part(w[0] + self.carrier), -self.theta);
        0.5 * (up + down)
    }

    fn magnitude_integral(&self) -> f64 {
        self.integral
    }

    fn sample_matched(&self, rng: &mut StreamRng) -> Option<Vec<f64>> {
        // rejection from the envelope 0.5 (g(w - w0) + g(w + w0)) >= |f^|
        for _ in 0..MAX_REJECTIONS {
            let z: f64 = rng.sample(StandardNormal);
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let w = sign * self.carrier + z / self.width;
            let env =
                0.5 * (self.envelope_part(w - self.carrier) + self.envelope_part(w + self.carrier));
            if rng.random::<f64>() * env <= self.magnitude(&[w]) {
                return Some(vec![w]);
            }
        }
        None
    }

    fn frequency_range(&self) -> (f64, f64) {
        let r = self.carrier.abs() + 12.0 / self.width;
        (-r, r)
    }

    fn spatial_range(&self) -> (f64, f64) {
        (-12.0 * self.width, 12.0 * self.width)
    }
}

/// `f = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ZeroFunction;

impl SpectralFunction for ZeroFunction {
    fn name(&self) -> &str {
        "zero"
    }

    fn value(&self, _: &[f64]) -> f64 {
        0.0
    }

    fn transform(&self, _: &[f64]) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }

    fn magnitude_integral(&self) -> f64 {
        0.0
    }

    fn sample_matched(&self, _: &mut StreamRng) -> Option<Vec<f64>> {
        None
    }

    fn frequency_range(&self) -> (f64, f64) {
        (-1.0, 1.0)
    }

    fn spatial_range(&self) -> (f64, f64) {
        (-1.0, 1.0)
    }
}

/// `p~ = |f^| / int |f^|`.
pub struct MatchedLaw<'a>(pub &'a dyn SpectralFunction);

impl FrequencyLaw for MatchedLaw<'_> {
    fn sample_frequency(&self, dim: usize, rng: &mut StreamRng) -> Result<Vec<f64>> {
        check_dim(self.0.dim(), dim)?;
        self.0
            .sample_matched(rng)
            .ok_or_else(|| DoneError::InvalidDistribution("spectrum has no mass to sample".into()))
    }

    fn density(&self, w: &[f64]) -> f64 {
        let total = self.0.magnitude_integral();
        if total > 0.0 {
            self.0.magnitude(w) / total
        } else {
            0.0
        }
    }
}

/// `p* ∝ |f^(w)| sqrt(cos(2 arg f^(w) + 2 w x) + 2)`, the density minimizing the
/// variance of the real estimator at `x`.
pub struct OptimalRealLaw<'a> {
    sf: &'a dyn SpectralFunction,
    x: f64,
    norm: f64,
}

impl<'a> OptimalRealLaw<'a> {
    fn shape(&self, w: f64) -> f64 {
        let z = self.sf.transform(&[w]);
        z.norm() * ((2.0 * z.arg() + 2.0 * w * self.x).cos() + 2.0).sqrt()
    }

    /// Normalization constant of the unnormalized shape.
    pub fn normalization(&self) -> f64 {
        self.norm
    }

    pub fn point(&self) -> f64 {
        self.x
    }
}

impl FrequencyLaw for OptimalRealLaw<'_> {
    fn sample_frequency(&self, dim: usize, rng: &mut StreamRng) -> Result<Vec<f64>> {
        check_dim(1, dim)?;
        for _ in 0..MAX_REJECTIONS {
            let w = self.sf.sample_matched(rng).ok_or_else(|| {
                DoneError::InvalidDistribution("spectrum has no mass to sample".into())
            })?[0];
            let z = self.sf.transform(&[w]);
            let h = (2.0 * z.arg() + 2.0 * w * self.x).cos() + 2.0;
            if rng.random::<f64>() * 3f64.sqrt() <= h.sqrt() {
                return Ok(vec![w]);
            }
        }
        Err(DoneError::InvalidDistribution(
            "rejection sampler did not accept".into(),
        ))
    }

    fn density(&self, w: &[f64]) -> f64 {
        self.shape(w[0]) / self.norm
    }
}

/// Builds `p*` for the point `x`; one-dimensional functions only.
pub fn optimal_real_pdf<'a>(sf: &'a dyn SpectralFunction, x: &[f64]) -> Result<OptimalRealLaw<'a>> {
    if sf.dim() != 1 || x.len() != 1 {
        return Err(DoneError::Unsupported(
            "optimal real density is only available for one-dimensional functions".into(),
        ));
    }
    let mut law = OptimalRealLaw {
        sf,
        x: x[0],
        norm: 1.0,
    };
    let (a, b) = sf.frequency_range();
    let norm = adaptive_simpson(&|w| law.shape(w), a, b, QUAD_TOL)?;
    if !(norm > 0.0) {
        return Err(DoneError::InvalidDistribution(
            "spectrum has no mass".into(),
        ));
    }
    law.norm = norm;
    Ok(law)
}

/// Errors when `law` has no density on a part of the frequency range where
/// `|f^|` is not negligible (1-D probe on 801 points).
pub fn check_support(sf: &dyn SpectralFunction, law: &dyn FrequencyLaw) -> Result<()> {
    if sf.dim() != 1 {
        return Ok(());
    }
    let (a, b) = sf.frequency_range();
    let pts: Vec<f64> = (0..=800).map(|i| a + (b - a) * i as f64 / 800.0).collect();
    let peak = pts.iter().map(|&w| sf.magnitude(&[w])).fold(0.0, f64::max);
    for &w in &pts {
        if sf.magnitude(&[w]) > 1e-6 * peak && !(law.density(&[w]) > 0.0) {
            return Err(DoneError::InvalidDistribution(format!(
                "sampling density vanishes at w = {w} where the spectrum does not"
            )));
        }
    }
    Ok(())
}

/// One draw of `G(x) = sum_k C_k cos(W_k x + B_k)` with
/// `C_k = 2 |f^(W_k)| cos(arg f^(W_k) - B_k) / (D (2 pi)^d p(W_k))`.
pub fn ideal_real_estimator(
    sf: &dyn SpectralFunction,
    law: &dyn FrequencyLaw,
    num_features: usize,
    x: &[f64],
    rng: &mut StreamRng,
) -> Result<f64> {
    let d = sf.dim();
    check_dim(d, x.len())?;
    if num_features == 0 {
        return Err(DoneError::InvalidParameter(
            "feature count must be positive".into(),
        ));
    }
    if sf.magnitude_integral() == 0.0 {
        return Ok(0.0);
    }
    let scale = 2.0 / (num_features as f64 * TAU.powi(d as i32));
    let mut total = 0.0;
    for _ in 0..num_features {
        let w = law.sample_frequency(d, rng)?;
        let b = rng.random_range(0.0..TAU);
        let z = sf.transform(&w);
        if z.norm() == 0.0 {
            continue;
        }
        let p = law.density(&w);
        if !(p > 0.0) {
            return Err(DoneError::InvalidDistribution(format!(
                "sampling density vanishes at {w:?} where the spectrum does not"
            )));
        }
        let arg: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b;
        total += scale * z.norm() / p * (z.arg() - b).cos() * arg.cos();
    }
    Ok(total)
}

/// One draw of the complex estimator `sum_k C~_k exp(i (W_k x + B_k))` with
/// `W_k ~ p~` and `C~_k = f^(W_k) exp(-i B_k) / (D (2 pi)^d p~(W_k))`.
pub fn complex_estimator_sample(
    sf: &dyn SpectralFunction,
    num_features: usize,
    x: &[f64],
    rng: &mut StreamRng,
) -> Result<Complex64> {
    let d = sf.dim();
    check_dim(d, x.len())?;
    if num_features == 0 {
        return Err(DoneError::InvalidParameter(
            "feature count must be positive".into(),
        ));
    }
    let total_mag = sf.magnitude_integral();
    if total_mag == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let scale = 1.0 / (num_features as f64 * TAU.powi(d as i32));
    let mut total = Complex64::new(0.0, 0.0);
    for _ in 0..num_features {
        let w = sf.sample_matched(rng).ok_or_else(|| {
            DoneError::InvalidDistribution("spectrum has no mass to sample".into())
        })?;
        let b = rng.random_range(0.0..TAU);
        let z = sf.transform(&w);
        let p = z.norm() / total_mag;
        let arg: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b;
        let weight = z * Complex64::from_polar(scale / p, -b);
        total += weight * Complex64::from_polar(1.0, arg);
    }
    Ok(total)
}

/// Real part of [`complex_estimator_sample`].
pub fn complex_estimator(
    sf: &dyn SpectralFunction,
    num_features: usize,
    x: &[f64],
    rng: &mut StreamRng,
) -> Result<f64> {
    Ok(complex_estimator_sample(sf, num_features, x, rng)?.re)
}

/// `E|G~(x) - f(x)|^2 = ((int |f^|)^2 / (2 pi)^(2d) - f(x)^2) / D` under `p~`.
pub fn complex_estimator_variance(
    sf: &dyn SpectralFunction,
    num_features: usize,
    x: &[f64],
) -> f64 {
    let i = sf.magnitude_integral() / TAU.powi(sf.dim() as i32);
    let f = sf.value(x);
    (i * i - f * f) / num_features as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloSummary {
    pub draws: usize,
    pub mean: f64,
    pub variance: f64,
    pub std_err: f64,
}

impl MonteCarloSummary {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n.max(1) as f64;
        let variance = if n > 1 {
            samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            draws: n,
            mean,
            variance,
            std_err: (variance / n.max(1) as f64).sqrt(),
        }
    }

    /// `|mean - target| <= k * std_err`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_err
    }
}

/// Runs `draw` once per index with an independent generator derived from
/// `seed` and the index.
pub fn monte_carlo<T>(
    draws: usize,
    seed: u64,
    mut draw: impl FnMut(&mut StreamRng) -> Result<T>,
) -> Result<Vec<T>> {
    (0..draws as u64)
        .map(|i| draw(&mut draw_rng(seed, i)))
        .collect()
}

/// Estimated second moment with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub value: f64,
    pub std_err: f64,
}

impl From<MonteCarloSummary> for MomentEstimate {
    fn from(s: MonteCarloSummary) -> Self {
        Self {
            value: s.mean,
            std_err: s.std_err,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentReport {
    /// `E[G^2]` with frequencies from `p*`.
    pub real_optimal: MomentEstimate,
    /// `E[G^2]` with frequencies from `p~`.
    pub real_matched: MomentEstimate,
    /// `E|G~|^2` with frequencies from `p~`.
    pub complex_matched: MomentEstimate,
    /// `E_p*[G^2] / sqrt(3) <= E_p~[G^2] <= sqrt(3) E_p*[G^2]`.
    pub optimal_vs_matched: bool,
    /// `E_p~[G~^2] / 2 <= E_p~[G^2] <= 3/2 E_p~[G~^2]`.
    pub real_vs_complex: bool,
    /// False when the draw count is too small for the slack to mean anything.
    pub sufficient_precision: bool,
}

impl MomentReport {
    pub fn holds(&self) -> bool {
        self.sufficient_precision && self.optimal_vs_matched && self.real_vs_complex
    }
}

const MIN_MOMENT_DRAWS: usize = 1000;
const MAX_RELATIVE_STD_ERR: f64 = 0.05;
const MOMENT_SLACK_SE: f64 = 3.0;

/// Monte-Carlo check of the sandwich inequalities between the second moments
/// of the real estimator under `p*` and `p~` and of the complex estimator.
pub fn second_moment_ordering_check(
    sf: &dyn SpectralFunction,
    x: &[f64],
    num_features: usize,
    draws: usize,
    seed: u64,
) -> Result<MomentReport> {
    if sf.magnitude_integral() == 0.0 {
        let zero = MomentEstimate {
            value: 0.0,
            std_err: 0.0,
        };
        return Ok(MomentReport {
            real_optimal: zero,
            real_matched: zero,
            complex_matched: zero,
            optimal_vs_matched: true,
            real_vs_complex: true,
            sufficient_precision: true,
        });
    }
    let optimal = optimal_real_pdf(sf, x)?;
    let matched = MatchedLaw(sf);
    let squares = |law: &dyn FrequencyLaw, stream: u64| -> Result<MomentEstimate> {
        let s = monte_carlo(draws, seed ^ stream, |rng| {
            Ok(ideal_real_estimator(sf, law, num_features, x, rng)?.powi(2))
        })?;
        Ok(MonteCarloSummary::from_samples(&s).into())
    };
    let real_optimal = squares(&optimal, 0x5a5a_0001)?;
    let real_matched = squares(&matched, 0x5a5a_0002)?;
    let complex = monte_carlo(draws, seed ^ 0x5a5a_0003, |rng| {
        Ok(complex_estimator_sample(sf, num_features, x, rng)?.norm_sqr())
    })?;
    let complex_matched: MomentEstimate = MonteCarloSummary::from_samples(&complex).into();

    // a <= k b, allowing for the combined standard error
    let le = |a: MomentEstimate, k: f64, b: MomentEstimate| {
        a.value - k * b.value
            <= MOMENT_SLACK_SE * (a.std_err.powi(2) + (k * b.std_err).powi(2)).sqrt()
    };
    let r3 = 3f64.sqrt();
    let scaled = |m: MomentEstimate, k: f64| MomentEstimate {
        value: k * m.value,
        std_err: k * m.std_err,
    };
    let optimal_vs_matched =
        le(scaled(real_optimal, 1.0 / r3), 1.0, real_matched) && le(real_matched, r3, real_optimal);
    let real_vs_complex = le(scaled(complex_matched, 0.5), 1.0, real_matched)
        && le(real_matched, 1.5, complex_matched);
    let precise =
        |m: MomentEstimate| m.value == 0.0 || m.std_err <= MAX_RELATIVE_STD_ERR * m.value.abs();
    let sufficient_precision = draws >= MIN_MOMENT_DRAWS
        && precise(real_optimal)
        && precise(real_matched)
        && precise(complex_matched);
    Ok(MomentReport {
        real_optimal,
        real_matched,
        complex_matched,
        optimal_vs_matched,
        real_vs_complex,
        sufficient_precision,
    })
}

/// Both sides of `||c*||^2 = ((2 pi)^d / pi) ||f||^2` by quadrature (1-D).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormIdentity {
    pub weight_norm_sq: f64,
    pub scaled_function_norm_sq: f64,
}

impl NormIdentity {
    pub fn relative_gap(&self) -> f64 {
        (self.weight_norm_sq - self.scaled_function_norm_sq).abs()
            / self.scaled_function_norm_sq.abs().max(f64::MIN_POSITIVE)
    }
}

pub fn norm_identity(sf: &dyn SpectralFunction) -> Result<NormIdentity> {
    if sf.dim() != 1 {
        return Err(DoneError::Unsupported(
            "norm identity is checked for one-dimensional functions".into(),
        ));
    }
    let (wa, wb) = sf.frequency_range();
    let inner = |w: f64| {
        adaptive_simpson(&|b| sf.ideal_weight(&[w], b).powi(2), 0.0, TAU, QUAD_TOL)
            .unwrap_or(f64::NAN)
    };
    let weight_norm_sq = adaptive_simpson(&inner, wa, wb, QUAD_TOL)?;
    let (xa, xb) = sf.spatial_range();
    let f_norm_sq = adaptive_simpson(&|x| sf.value(&[x]).powi(2), xa, xb, QUAD_TOL)?;
    Ok(NormIdentity {
        weight_norm_sq,
        scaled_function_norm_sq: TAU / PI * f_norm_sq,
    })
}

/// Training RMSE of least-squares fits with the real and the complex feature
/// maps sharing the same frequencies and phases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitComparison {
    pub num_features: usize,
    pub real_rmse: f64,
    pub complex_rmse: f64,
}

/// Fits `f` on `data` with `D` features drawn from `dist`, once with
/// `cos(w x + b)` and once with `exp(i (w x + b))` (real part of the
/// prediction), both by regularized least squares.
pub fn real_vs_complex_fit(
    data: &Dataset,
    num_features: usize,
    dist: &FreqDistribution,
    lambda: f64,
    seed: u64,
) -> Result<FitComparison> {
    let model = RfeModel::sample(data.dim(), num_features, dist, seed)?;
    let real = model.fit_batch(data, lambda)?;
    let real_rmse = real.rmse(data)?;

    let n = data.len();
    let mut a = DMatrix::<Complex64>::zeros(n, num_features);
    for (i, x) in data.inputs().iter().enumerate() {
        for k in 0..num_features {
            let arg: f64 = model
                .frequency(k)
                .iter()
                .zip(x)
                .map(|(w, v)| w * v)
                .sum::<f64>()
                + model.phases()[k];
            a[(i, k)] = Complex64::from_polar(1.0, arg);
        }
    }
    let y = DVector::from_iterator(n, data.outputs().iter().map(|&v| Complex64::new(v, 0.0)));
    let c = linalg::ridge_solve(&a, &y, lambda)?;
    let pred = &a * c;
    let sq: f64 = pred
        .iter()
        .zip(data.outputs())
        .map(|(p, y)| (p.re - y).powi(2))
        .sum();
    Ok(FitComparison {
        num_features,
        real_rmse,
        complex_rmse: (sq / n as f64).sqrt(),
    })
}

/// Outcome of one named check inside a suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOptions {
    pub draws: usize,
    pub seed: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            draws: 100_000,
            seed: 0,
        }
    }
}

/// A named group of checks runnable from the command line.
pub trait TheorySuite: Send + Sync {
    fn name(&self) -> &str;
    fn description(&self) -> &str;
    fn run(&self, opts: &SuiteOptions) -> Result<SuiteReport>;
}

/// Suites selectable by name.
pub struct SuiteRegistry {
    suites: Vec<Box<dyn TheorySuite>>,
}

impl Default for SuiteRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(Unbiasedness));
        r.register(Box::new(ComplexVariance));
        r.register(Box::new(OptimalDensity));
        r.register(Box::new(MomentOrdering));
        r.register(Box::new(NormIdentitySuite));
        r.register(Box::new(KernelSuite));
        r
    }
}

impl SuiteRegistry {
    pub fn empty() -> Self {
        Self { suites: Vec::new() }
    }

    /// Adds a suite, replacing any with the same name.
    pub fn register(&mut self, suite: Box<dyn TheorySuite>) {
        self.suites.retain(|s| s.name() != suite.name());
        self.suites.push(suite);
    }

    pub fn names(&self) -> Vec<&str> {
        self.suites.iter().map(|s| s.name()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&dyn TheorySuite> {
        self.suites
            .iter()
            .find(|s| s.name() == name)
            .map(|s| s.as_ref())
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn TheorySuite> {
        self.suites.iter().map(|s| s.as_ref())
    }

    /// Runs `name`, or every suite for `"all"`.
    pub fn run(&self, name: &str, opts: &SuiteOptions) -> Result<Vec<SuiteReport>> {
        if name == "all" {
            return self.suites.iter().map(|s| s.run(opts)).collect();
        }
        let suite = self.get(name).ok_or_else(|| {
            DoneError::InvalidParameter(format!(
                "unknown suite '{name}', expected one of: all, {}",
                self.names().join(", ")
            ))
        })?;
        Ok(vec![suite.run(opts)?])
    }
}

/// Gaussian spectrum with a nonzero phase.
pub fn gaussian_instance() -> GaussianBump {
    GaussianBump {
        amplitude: 1.0,
        width: 1.0,
        shift: 1.0,
    }
}

pub fn modulated_instance() -> ModulatedGaussian {
    ModulatedGaussian::new(1.0, 2.0, 0.7).expect("valid constants")
}

fn fmt_mc(s: &MonteCarloSummary, target: f64) -> String {
    format!(
        "mean {:.6} target {:.6} se {:.2e}",
        s.mean, target, s.std_err
    )
}

struct Unbiasedness;

impl TheorySuite for Unbiasedness {
    fn name(&self) -> &str {
        "unbiasedness"
    }

    fn description(&self) -> &str {
        "real and complex estimators average to f(x)"
    }

    fn run(&self, opts: &SuiteOptions) -> Result<SuiteReport> {
        let a = gaussian_instance();
        let b = modulated_instance();
        let mismatched = FreqDistribution::gaussian(2.0)?;
        let mut checks = Vec::new();
        let instances: [&dyn SpectralFunction; 2] = [&a, &b];
        for (i, sf) in instances.into_iter().enumerate() {
            let x = [0.0];
            let target = sf.value(&x);
            let matched = MatchedLaw(sf);
            let laws: [(&str, &dyn FrequencyLaw); 2] =
                [("matched", &matched), ("gaussian(2)", &mismatched)];
            for (j, (label, law)) in laws.into_iter().enumerate() {
                check_support(sf, law)?;
                let s = monte_carlo(opts.draws, opts.seed + (10 * i + j) as u64, |rng| {
                    ideal_real_estimator(sf, law, 10, &x, rng)
                })?;
                let s = MonteCarloSummary::from_samples(&s);
                checks.push(CheckResult::new(
                    format!("real {} {label} x=0 D=10", sf.name()),
                    s.within(target, 3.0),
                    fmt_mc(&s, target),
                ));
            }
        }
        let mut rng = draw_rng(opts.seed, u64::MAX);
        for k in 0..5 {
            let x = [rng.random_range(-2.0..2.0)];
            let target = a.value(&x);
            let s = monte_carlo(opts.draws, opts.seed + 100 + k, |rng| {
                complex_estimator(&a, 10, &x, rng)
            })?;
            let s = MonteCarloSummary::from_samples(&s);
            checks.push(CheckResult::new(
                format!("complex {} x={:.3} D=10", a.name(), x[0]),
                s.within(target, 3.0),
                fmt_mc(&s, target),
            ));
        }
        let mut zero_rng = draw_rng(opts.seed, 0);
        let z = ideal_real_estimator(&ZeroFunction, &mismatched, 10, &[0.3], &mut zero_rng)?
            .abs()
            .max(complex_estimator(&ZeroFunction, 10, &[0.3], &mut zero_rng)?.abs());
        checks.push(CheckResult::new(
            "zero function",
            z == 0.0,
            format!("|G| = {z}"),
        ));
        Ok(SuiteReport {
            suite: self.name().into(),
            checks,
        })
    }
}

struct ComplexVariance;

impl TheorySuite for ComplexVariance {
    fn name(&self) -> &str {
        "complex-variance"
    }

    fn description(&self) -> &str {
        "variance of the complex estimator and 1/D scaling of the real one"
    }

    fn run(&self, opts: &SuiteOptions) -> Result<SuiteReport> {
        let a = gaussian_instance();
        let x = [0.0];
        let f = a.value(&x);
        let mut checks = Vec::new();

        let dev = monte_carlo(opts.draws, opts.seed + 1, |rng| {
            Ok((complex_estimator_sample(&a, 4, &x, rng)? - f).norm_sqr())
        })?;
        let s = MonteCarloSummary::from_samples(&dev);
        let expected = complex_estimator_variance(&a, 4, &x);
        let rel = (s.mean - expected).abs() / expected;
        checks.push(CheckResult::new(
            "complex variance D=4 x=0",
            rel <= 0.05,
            format!(
                "sample {:.6} closed form {:.6} rel {:.3}",
                s.mean, expected, rel
            ),
        ));

        let matched = MatchedLaw(&a);
        let var = |features: usize, seed: u64| -> Result<f64> {
            let s = monte_carlo(opts.draws, seed, |rng| {
                ideal_real_estimator(&a, &matched, features, &x, rng)
            })?;
            Ok(MonteCarloSummary::from_samples(&s).variance)
        };
        let v1 = var(1, opts.seed + 2)?;
        let v100 = var(100, opts.seed + 3)?;
        let ratio = v100 * 100.0 / v1;
        checks.push(CheckResult::new(
            "real variance D=100 vs D=1",
            (ratio - 1.0).abs() <= 0.2,
            format!("100 var(D=100) / var(D=1) = {ratio:.4}"),
        ));
        Ok(SuiteReport {
            suite: self.name().into(),
            checks,
        })
    }
}

struct OptimalDensity;

impl TheorySuite for OptimalDensity {
    fn name(&self) -> &str {
        "optimal-density"
    }

    fn description(&self) -> &str {
        "normalization and variance optimality of the real-estimator density"
    }

    fn run(&self, opts: &SuiteOptions) -> Result<SuiteReport> {
        let mut checks = Vec::new();
        let flat = GaussianBump {
            amplitude: 1.0,
            width: 1.0,
            shift: 0.0,
        };
        let p = optimal_real_pdf(&flat, &[0.0])?;
        let matched = MatchedLaw(&flat);
        let gap = (-40..=40)
            .map(|i| {
                let w = [i as f64 * 0.2];
                (p.density(&w) - matched.density(&w)).abs()
            })
            .fold(0.0, f64::max);
        checks.push(CheckResult::new(
            "zero phase gives p~",
            gap < 1e-6,
            format!("max gap {gap:.2e}"),
        ));

        let a = gaussian_instance();
        let b = modulated_instance();
        let instances: [&dyn SpectralFunction; 2] = [&a, &b];
        for sf in instances {
            let p = optimal_real_pdf(sf, &[0.3])?;
            let (lo, hi) = sf.frequency_range();
            let mass = adaptive_simpson(&|w| p.density(&[w]), lo, hi, QUAD_TOL)?;
            checks.push(CheckResult::new(
                format!("{} density mass", sf.name()),
                (mass - 1.0).abs() < 1e-6,
                format!("mass {mass:.9}"),
            ));
        }

        let x = [0.0];
        let optimal = optimal_real_pdf(&a, &x)?;
        let matched = MatchedLaw(&a);
        let wide = FreqDistribution::gaussian(3.0)?;
        let laws: [(&str, &dyn FrequencyLaw); 3] =
            [("p*", &optimal), ("p~", &matched), ("gaussian(3)", &wide)];
        let mut stats = Vec::new();
        for (i, (label, law)) in laws.into_iter().enumerate() {
            let s = monte_carlo(opts.draws, opts.seed + 20 + i as u64, |rng| {
                ideal_real_estimator(&a, law, 1, &x, rng)
            })?;
            let var = MonteCarloSummary::from_samples(&s).variance;
            // standard error of the sample variance from the fourth central moment
            let mean = s.iter().sum::<f64>() / s.len() as f64;
            let m4 = s.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / s.len() as f64;
            let se = ((m4 - var * var) / s.len() as f64).max(0.0).sqrt();
            stats.push((label, var, se));
        }
        let (_, v_opt, se_opt) = stats[0];
        for &(label, v, se) in &stats[1..] {
            let margin = 2.0 * (se * se + se_opt * se_opt).sqrt();
            checks.push(CheckResult::new(
                format!("var p* < var {label}"),
                v - v_opt > margin,
                format!("{v_opt:.5} vs {v:.5}, 2 se {margin:.2e}"),
            ));
        }
        Ok(SuiteReport {
            suite: self.name().into(),
            checks,
        })
    }
}

struct MomentOrdering;

impl TheorySuite for MomentOrdering {
    fn name(&self) -> &str {
        "moment-ordering"
    }

    fn description(&self) -> &str {
        "second-moment sandwich inequalities between real and complex estimators"
    }

    fn run(&self, opts: &SuiteOptions) -> Result<SuiteReport> {
        let a = gaussian_instance();
        let b = modulated_instance();
        let instances: [&dyn SpectralFunction; 3] = [&a, &b, &ZeroFunction];
        let mut checks = Vec::new();
        for (i, sf) in instances.into_iter().enumerate() {
            let r = second_moment_ordering_check(sf, &[0.3], 10, opts.draws, opts.seed + i as u64)?;
            checks.push(CheckResult::new(
                format!("{} D=10", sf.name()),
                r.holds(),
                format!(
                    "E*[G^2] {:.5} E~[G^2] {:.5} E~[|G~|^2] {:.5} precise {}",
                    r.real_optimal.value,
                    r.real_matched.value,
                    r.complex_matched.value,
                    r.sufficient_precision
                ),
            ));
        }
        let coarse = second_moment_ordering_check(&a, &[0.3], 10, 10, opts.seed)?;
        checks.push(CheckResult::new(
            "10 draws flagged imprecise",
            !coarse.sufficient_precision,
            format!("sufficient_precision = {}", coarse.sufficient_precision),
        ));
        Ok(SuiteReport {
            suite: self.name().into(),
            checks,
        })
    }
}

struct NormIdentitySuite;

impl TheorySuite for NormIdentitySuite {
    fn name(&self) -> &str {
        "norm-identity"
    }

    fn description(&self) -> &str {
        "L2 norm of the ideal weight function against the norm of f"
    }

    fn run(&self, _: &SuiteOptions) -> Result<SuiteReport> {
        let a = gaussian_instance();
        let b = modulated_instance();
        let instances: [&dyn SpectralFunction; 2] = [&a, &b];
        let checks = instances
            .into_iter()
            .map(|sf| {
                let n = norm_identity(sf)?;
                Ok(CheckResult::new(
                    sf.name(),
                    n.relative_gap() < 1e-4,
                    format!(
                        "{:.10} vs {:.10}",
                        n.weight_norm_sq, n.scaled_function_norm_sq
                    ),
                ))
            })
            .collect::<Result<_>>()?;
        Ok(SuiteReport {
            suite: self.name().into(),
            checks,
        })
    }
}

struct KernelSuite;

impl TheorySuite for KernelSuite {
    fn name(&self) -> &str {
        "kernel"
    }

    fn description(&self) -> &str {
        "feature inner products approximate the gaussian kernel"
    }

    fn run(&self, opts: &SuiteOptions) -> Result<SuiteReport> {
        let sigma = 2.0;
        let model = RfeModel::sample(2, 20_000, &FreqDistribution::gaussian(sigma)?, opts.seed)?;
        let pairs = [
            ([0.0, 0.0], [0.0, 0.0]),
            ([0.1, -0.2], [0.3, 0.1]),
            ([0.5, 0.5], [-0.2, 0.4]),
            ([1.0, 0.0], [0.0, 1.0]),
        ];
        let checks = pairs
            .iter()
            .map(|(xi, xj)| {
                let r2: f64 = xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum();
                let exact = (-0.5 * sigma * sigma * r2).exp();
                let est = model.kernel_estimate(xi, xj)?;
                Ok(CheckResult::new(
                    format!("k({xi:?}, {xj:?})"),
                    (est - exact).abs() < 0.05,
                    format!("estimate {est:.4} exact {exact:.4}"),
                ))
            })
            .collect::<Result<_>>()?;
        Ok(SuiteReport {
            suite: self.name().into(),
            checks,
        })
    }
}
