//! Choosing the frequency law from a Fourier magnitude, and the
//! regularization upper-bound estimate.

use std::f64::consts::{PI, TAU};

use nalgebra::{DVector, SymmetricEigen};
use rustfft::{num_complex::Complex64, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{DoneError, Result};
use crate::rfe::{Dataset, FreqDistribution, RfeModel, TabulatedMarginal};

/// `|f^(w)|` tabulated on a rectilinear frequency grid.
///
/// `values` is row-major over `axes` (last axis fastest). `exact` marks a
/// magnitude known analytically rather than estimated.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierMagnitude {
    axes: Vec<Vec<f64>>,
    values: Vec<f64>,
    integral_abs: f64,
    exact: bool,
}

impl FourierMagnitude {
    /// The integral of `|f^|` is computed on the grid by the trapezoid rule.
    pub fn tabulated(axes: Vec<Vec<f64>>, values: Vec<f64>, exact: bool) -> Result<Self> {
        let weights = grid_weights(&axes)?;
        let integral = values.iter().zip(&weights).map(|(v, w)| v * w).sum();
        Self::with_integral(axes, values, integral, exact)
    }

    /// Uses a separately known `integral_abs` instead of the grid sum.
    pub fn with_integral(
        axes: Vec<Vec<f64>>,
        values: Vec<f64>,
        integral_abs: f64,
        exact: bool,
    ) -> Result<Self> {
        let count = grid_weights(&axes)?.len();
        if values.len() != count {
            return Err(DoneError::DimensionMismatch {
                expected: count,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(DoneError::InvalidDistribution(
                "magnitude values must be finite and nonnegative".into(),
            ));
        }
        if values.iter().all(|v| *v == 0.0) {
            return Err(DoneError::InvalidDistribution(
                "magnitude is identically zero".into(),
            ));
        }
        if !(integral_abs > 0.0) || !integral_abs.is_finite() {
            return Err(DoneError::InvalidDistribution(format!(
                "integral of the magnitude must be positive and finite, got {integral_abs}"
            )));
        }
        Ok(Self {
            axes,
            values,
            integral_abs,
            exact,
        })
    }

    /// Tabulates a closed-form magnitude on the product of `axes`.
    pub fn from_fn(
        axes: Vec<Vec<f64>>,
        magnitude: impl Fn(&[f64]) -> f64,
        integral_abs: Option<f64>,
    ) -> Result<Self> {
        let mut values = Vec::new();
        let mut w = vec![0.0; axes.len()];
        for_each_point(&axes, |idx| {
            for (i, &j) in idx.iter().enumerate() {
                w[i] = axes[i][j];
            }
            values.push(magnitude(&w));
        });
        match integral_abs {
            Some(total) => Self::with_integral(axes, values, total, true),
            None => Self::tabulated(axes, values, true),
        }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn integral_abs(&self) -> f64 {
        self.integral_abs
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// Marginal profile of coordinate `axis`, summed over the others with
    /// trapezoid weights.
    fn marginal_profile(&self, axis: usize) -> Vec<f64> {
        let per_axis: Vec<Vec<f64>> = self.axes.iter().map(|a| trapezoid_weights(a)).collect();
        let mut profile = vec![0.0; self.axes[axis].len()];
        let mut k = 0;
        for_each_point(&self.axes, |idx| {
            let w: f64 = idx
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != axis)
                .map(|(i, &j)| per_axis[i][j])
                .product();
            profile[idx[axis]] += self.values[k] * w;
            k += 1;
        });
        profile
    }
}

fn trapezoid_weights(axis: &[f64]) -> Vec<f64> {
    let n = axis.len();
    let mut w = vec![0.0; n];
    for i in 1..n {
        let h = 0.5 * (axis[i] - axis[i - 1]);
        w[i - 1] += h;
        w[i] += h;
    }
    w
}

fn grid_weights(axes: &[Vec<f64>]) -> Result<Vec<f64>> {
    if axes.is_empty() {
        return Err(DoneError::InvalidDistribution(
            "magnitude grid has no axes".into(),
        ));
    }
    for a in axes {
        if a.len() < 2 || a.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(DoneError::InvalidDistribution(
                "each grid axis needs at least two strictly increasing points".into(),
            ));
        }
    }
    let per_axis: Vec<Vec<f64>> = axes.iter().map(|a| trapezoid_weights(a)).collect();
    let mut out = Vec::new();
    for_each_point(axes, |idx| {
        out.push(
            idx.iter()
                .enumerate()
                .map(|(i, &j)| per_axis[i][j])
                .product(),
        );
    });
    Ok(out)
}

/// Visits every multi-index of the grid in row-major order.
fn for_each_point(axes: &[Vec<f64>], mut visit: impl FnMut(&[usize])) {
    let shape: Vec<usize> = axes.iter().map(Vec::len).collect();
    if shape.iter().any(|&n| n == 0) {
        return;
    }
    let mut idx = vec![0usize; shape.len()];
    loop {
        visit(&idx);
        let mut i = shape.len();
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < shape[i] {
                break;
            }
            idx[i] = 0;
        }
    }
}

/// Samples `f` on a uniform `shape` grid over the box (upper edges excluded),
/// takes a discrete Fourier transform and returns `|f^|` on the centred
/// angular-frequency grid `w = 2 pi k / (n dx)`. Values are scaled by the cell
/// volume so they approximate the continuous transform.
pub fn grid_fourier_magnitude(
    f: impl Fn(&[f64]) -> f64,
    lower: &[f64],
    upper: &[f64],
    shape: &[usize],
) -> Result<FourierMagnitude> {
    let d = shape.len();
    if d == 0 || lower.len() != d || upper.len() != d {
        return Err(DoneError::DimensionMismatch {
            expected: d,
            got: lower.len().min(upper.len()),
        });
    }
    if shape.iter().any(|&n| n < 2) || lower.iter().zip(upper).any(|(l, u)| !(u > l)) {
        return Err(DoneError::InvalidParameter(
            "grid needs at least two points per axis and a nonempty box".into(),
        ));
    }
    let steps: Vec<f64> = (0..d)
        .map(|i| (upper[i] - lower[i]) / shape[i] as f64)
        .collect();
    let sample_axes: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            (0..shape[i])
                .map(|j| lower[i] + j as f64 * steps[i])
                .collect()
        })
        .collect();

    let mut data: Vec<Complex64> = Vec::with_capacity(shape.iter().product());
    let mut x = vec![0.0; d];
    for_each_point(&sample_axes, |idx| {
        for (i, &j) in idx.iter().enumerate() {
            x[i] = sample_axes[i][j];
        }
        data.push(Complex64::new(f(&x), 0.0));
    });
    if data.iter().any(|z| !z.re.is_finite()) {
        return Err(DoneError::NonFinite(
            "function value on the sampling grid".into(),
        ));
    }

    let mut planner = FftPlanner::new();
    let mut line = Vec::new();
    for axis in 0..d {
        let n = shape[axis];
        let stride: usize = shape[axis + 1..].iter().product();
        let fft = planner.plan_fft_forward(n);
        let outer = data.len() / n;
        for o in 0..outer {
            let base = (o / stride) * stride * n + o % stride;
            line.clear();
            line.extend((0..n).map(|j| data[base + j * stride]));
            fft.process(&mut line);
            // fftshift while scattering back
            for (j, v) in line.iter().enumerate() {
                data[base + ((j + n / 2) % n) * stride] = *v;
            }
        }
    }

    let cell: f64 = steps.iter().product();
    let values = data.iter().map(|z| z.norm() * cell).collect();
    let axes = (0..d)
        .map(|i| {
            let n = shape[i] as isize;
            (0..n)
                .map(|k| TAU * (k - n / 2) as f64 / (shape[i] as f64 * steps[i]))
                .collect()
        })
        .collect();
    FourierMagnitude::tabulated(axes, values, false)
}

const SIGMA_RANGE: (f64, f64) = (1e-3, 1e3);
const SIGMA_GRID_PER_DECADE: usize = 20;
const SIGMA_REL_TOL: f64 = 1e-3;

/// Exactly known magnitudes become a tabulated law proportional to `|f^|`
/// (as a product of its marginals when `d > 1`); estimated magnitudes are
/// replaced by the isotropic Gaussian closest in L2 on the grid.
pub fn choose_freq_dist(mag: &FourierMagnitude, dim: usize) -> Result<FreqDistribution> {
    if mag.dim() != dim {
        return Err(DoneError::DimensionMismatch {
            expected: dim,
            got: mag.dim(),
        });
    }
    if mag.exact {
        let marginals = (0..dim)
            .map(|i| TabulatedMarginal::normalized(mag.axes[i].clone(), mag.marginal_profile(i)))
            .collect::<Result<Vec<_>>>()?;
        let dist = FreqDistribution::Tabulated { marginals };
        dist.validate()?;
        return Ok(dist);
    }
    FreqDistribution::gaussian(fit_gaussian_sigma(mag)?)
}

/// L2 distance on the grid between `N(0, sigma^2 I)` and `|f^| / int |f^|`.
pub fn gaussian_l2_distance(mag: &FourierMagnitude, sigma: f64) -> f64 {
    let weights = grid_weights(&mag.axes).expect("validated on construction");
    let d = mag.dim() as i32;
    let norm = (TAU.sqrt() * sigma).powi(d);
    let mut sq = 0.0;
    let mut k = 0;
    for_each_point(&mag.axes, |idx| {
        let r2: f64 = idx
            .iter()
            .enumerate()
            .map(|(i, &j)| mag.axes[i][j].powi(2))
            .sum();
        let p = (-0.5 * r2 / (sigma * sigma)).exp() / norm;
        let m = mag.values[k] / mag.integral_abs;
        sq += weights[k] * (p - m) * (p - m);
        k += 1;
    });
    sq.sqrt()
}

fn fit_gaussian_sigma(mag: &FourierMagnitude) -> Result<f64> {
    let (lo, hi) = (SIGMA_RANGE.0.log10(), SIGMA_RANGE.1.log10());
    let count = ((hi - lo) as usize) * SIGMA_GRID_PER_DECADE + 1;
    let grid: Vec<f64> = (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect();
    let cost = |log_s: f64| gaussian_l2_distance(mag, 10f64.powf(log_s));
    let costs: Vec<f64> = grid.iter().map(|&s| cost(s)).collect();
    let best = (0..count)
        .filter(|&i| costs[i].is_finite())
        .min_by(|&a, &b| costs[a].total_cmp(&costs[b]))
        .ok_or_else(|| DoneError::NonFinite("gaussian fit objective".into()))?;

    // golden section on log10 sigma between the neighbours of the best node
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(count - 1)];
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut e = a + ratio * (b - a);
    let (mut fc, mut fe) = (cost(c), cost(e));
    let tol = (1.0 + SIGMA_REL_TOL).log10();
    while b - a > tol {
        if fc < fe {
            b = e;
            e = c;
            fe = fc;
            c = b - ratio * (b - a);
            fc = cost(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + ratio * (b - a);
            fe = cost(e);
        }
    }
    Ok(10f64.powf(0.5 * (a + b)))
}

/// `M_a = sqrt(2) int|f^| / ((2 pi)^d sqrt(D))`.
pub fn compute_ma(integral_abs: f64, dim: usize, num_features: usize) -> Result<f64> {
    if !(integral_abs > 0.0) || !integral_abs.is_finite() || dim == 0 || num_features == 0 {
        return Err(DoneError::InvalidParameter(format!(
            "M_a needs a positive integral ({integral_abs}), dimension ({dim}) and feature count ({num_features})"
        )));
    }
    Ok(2f64.sqrt() * integral_abs / (TAU.powi(dim as i32) * (num_features as f64).sqrt()))
}

/// `lambda -> ||(A^T A + N lambda I)^-1 A^T y||^2`, evaluated through one
/// eigendecomposition of `A^T A`.
#[derive(Debug, Clone)]
pub struct WeightNormCurve {
    eigenvalues: Vec<f64>,
    projections: Vec<f64>,
    count: f64,
}

impl WeightNormCurve {
    pub fn new(model: &RfeModel, data: &Dataset) -> Result<Self> {
        if data.is_empty() {
            return Err(DoneError::EmptyDataset);
        }
        let a = model.design_matrix(data)?;
        let y = DVector::from_column_slice(data.outputs());
        let eig = SymmetricEigen::new(a.transpose() * &a);
        let rhs = a.transpose() * y;
        let z = eig.eigenvectors.transpose() * rhs;
        Ok(Self {
            eigenvalues: eig.eigenvalues.iter().map(|e| e.max(0.0)).collect(),
            projections: z.iter().map(|v| v * v).collect(),
            count: data.len() as f64,
        })
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        let shift = self.count * lambda;
        self.eigenvalues
            .iter()
            .zip(&self.projections)
            .map(|(e, z2)| z2 / ((e + shift) * (e + shift)))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaStatus {
    Converged,
    /// `M_a^2` exceeds the curve at the smallest searched lambda.
    BelowRange,
    /// `M_a^2` is below the curve at the largest searched lambda.
    AboveRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaEstimate {
    pub lambda: f64,
    pub m_a: f64,
    /// Curve value at `lambda` minus `M_a^2`.
    pub residual: f64,
    pub status: LambdaStatus,
}

impl LambdaEstimate {
    pub fn relative_residual(&self) -> f64 {
        (self.residual / (self.m_a * self.m_a)).abs()
    }
}

const LOG_LAMBDA_RANGE: (f64, f64) = (-12.0, 6.0);
const MAX_BISECTIONS: usize = 200;

/// Solves `||(A^T A + N lambda I)^-1 A^T y||^2 = M_a^2` for lambda by bisection
/// on `log10 lambda` over `[-12, 6]`.
pub fn estimate_lambda(model: &RfeModel, data: &Dataset, m_a: f64) -> Result<LambdaEstimate> {
    if !(m_a > 0.0) || !m_a.is_finite() {
        return Err(DoneError::InvalidParameter(format!(
            "M_a must be positive, got {m_a}"
        )));
    }
    let curve = WeightNormCurve::new(model, data)?;
    let target = m_a * m_a;
    let gap = |log_l: f64| curve.eval(10f64.powf(log_l)) - target;
    let (mut lo, mut hi) = LOG_LAMBDA_RANGE;
    let boundary = |log_l: f64, status| {
        let lambda = 10f64.powf(log_l);
        LambdaEstimate {
            lambda,
            m_a,
            residual: curve.eval(lambda) - target,
            status,
        }
    };
    if gap(lo) <= 0.0 {
        return Ok(boundary(lo, LambdaStatus::BelowRange));
    }
    if gap(hi) >= 0.0 {
        return Ok(boundary(hi, LambdaStatus::AboveRange));
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(boundary(0.5 * (lo + hi), LambdaStatus::Converged))
}

/// Normal density, used for closed-form test magnitudes.
pub fn gaussian_pdf(w: f64, sigma: f64) -> f64 {
    (-0.5 * w * w / (sigma * sigma)).exp() / ((2.0 * PI).sqrt() * sigma)
}
