//! Square-root (inverse-QR) recursive least squares.
//!
//! The state carries the weights `c_n` and a lower-triangular factor `L_n` with
//! `L_n L_n^T = P_n = (A_n^T A_n + lambda I)^-1`. Each update rotates the
//! pre-array
//!
//! ```text
//! [ 1  a L ]          [ gamma^-1/2        0   ]
//! [ 0   L  ] Theta =  [ g gamma^-1/2    L_new ]
//! ```
//!
//! with one Givens rotation per column, so a measurement costs `O(D^2)` no
//! matter how many came before.

use nalgebra::DMatrix;

use crate::error::{check_dim, DoneError, Result};

/// Diagonal entries of the factor are never allowed below this value.
pub const DIAGONAL_FLOOR: f64 = 1e-150;

#[derive(Debug, Clone, PartialEq)]
pub struct RlsState {
    weights: Vec<f64>,
    /// Column-major `D x D`; entries above the diagonal are never written.
    factor: Vec<f64>,
    lambda: f64,
    n: u64,
    floor_hit: bool,
    // scratch for the pre-array's first row and first column
    top_row: Vec<f64>,
    gain: Vec<f64>,
}

/// Transient quantities of one update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateInfo {
    /// Conversion factor `gamma_n = 1 / (1 + a P a^T)`, in `(0, 1]`.
    pub gamma: f64,
    /// A-priori residual `y - a c_{n-1}`.
    pub innovation: f64,
}

impl RlsState {
    /// `c_0 = 0`, `P_0^{1/2} = lambda^{-1/2} I`.
    pub fn new(num_features: usize, lambda: f64) -> Result<Self> {
        if num_features == 0 {
            return Err(DoneError::InvalidParameter(
                "feature count must be positive".into(),
            ));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(DoneError::InvalidParameter(format!(
                "regularization must be positive, got {lambda}"
            )));
        }
        let d = num_features;
        let mut factor = vec![0.0; d * d];
        let diag = lambda.powf(-0.5);
        for j in 0..d {
            factor[j * d + j] = diag;
        }
        Ok(Self {
            weights: vec![0.0; d],
            factor,
            lambda,
            n: 0,
            floor_hit: false,
            top_row: vec![0.0; d],
            gain: vec![0.0; d],
        })
    }

    pub fn num_features(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Number of measurements absorbed so far.
    pub fn count(&self) -> u64 {
        self.n
    }

    /// True once any diagonal entry of the factor had to be clamped at
    /// [`DIAGONAL_FLOOR`].
    pub fn floor_hit(&self) -> bool {
        self.floor_hit
    }

    /// Entry `(i, j)` of the square-root covariance factor.
    pub fn factor_entry(&self, i: usize, j: usize) -> f64 {
        if i < j {
            0.0
        } else {
            self.factor[j * self.num_features() + i]
        }
    }

    pub fn sqrt_cov(&self) -> DMatrix<f64> {
        let d = self.num_features();
        DMatrix::from_fn(d, d, |i, j| self.factor_entry(i, j))
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        let l = self.sqrt_cov();
        &l * l.transpose()
    }

    /// `y - a c`.
    pub fn predict_residual(&self, a: &[f64], y: f64) -> Result<f64> {
        check_dim(self.num_features(), a.len())?;
        Ok(y - dot(a, &self.weights))
    }

    /// Absorbs the measurement `y` with regressor row `a`.
    pub fn update(&mut self, a: &[f64], y: f64) -> Result<UpdateInfo> {
        let d = self.num_features();
        check_dim(d, a.len())?;
        let innovation = y - dot(a, &self.weights);

        // top_row = a L; L is lower triangular so column j only sees a[j..]
        for j in 0..d {
            let col = &self.factor[j * d + j..(j + 1) * d];
            self.top_row[j] = dot(&a[j..], col);
        }

        // Annihilate the top row against the (0,0) pivot, last column first, so
        // the accumulated first column only has entries at or below the column
        // being rotated and L stays lower triangular.
        self.gain.fill(0.0);
        let mut pivot = 1.0_f64;
        for j in (0..d).rev() {
            let u = self.top_row[j];
            if u == 0.0 {
                continue;
            }
            let r = pivot.hypot(u);
            let (c, s) = (pivot / r, u / r);
            pivot = r;
            let col = &mut self.factor[j * d..(j + 1) * d];
            for i in j..d {
                let g = self.gain[i];
                let l = col[i];
                self.gain[i] = c * g + s * l;
                col[i] = c * l - s * g;
            }
            if col[j] < DIAGONAL_FLOOR {
                col[j] = DIAGONAL_FLOOR;
                self.floor_hit = true;
            }
        }

        // pivot = gamma^{-1/2}, gain = g gamma^{-1/2}
        let scale = innovation / pivot;
        for (c, g) in self.weights.iter_mut().zip(&self.gain) {
            *c += g * scale;
        }
        self.n += 1;
        Ok(UpdateInfo {
            gamma: 1.0 / (pivot * pivot),
            innovation,
        })
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use proptest::prelude::*;

    fn batch_solution(rows: &[Vec<f64>], ys: &[f64], lambda: f64) -> DVector<f64> {
        let d = rows[0].len();
        let a = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
        let mut gram = a.transpose() * &a;
        for i in 0..d {
            gram[(i, i)] += lambda;
        }
        let rhs = a.transpose() * DVector::from_column_slice(ys);
        gram.lu().solve(&rhs).unwrap()
    }

    #[test]
    fn init_examples() {
        let s = RlsState::new(2, 4.0).unwrap();
        assert_eq!(s.sqrt_cov(), DMatrix::identity(2, 2) * 0.5);
        assert_eq!(s.weights(), &[0.0, 0.0]);
        assert_eq!(s.count(), 0);
        let s = RlsState::new(1, 1.0).unwrap();
        assert_eq!(s.sqrt_cov()[(0, 0)], 1.0);
        assert!(RlsState::new(3, 0.0).is_err());
    }

    #[test]
    fn scalar_update_by_hand() {
        let mut s = RlsState::new(1, 1.0).unwrap();
        let info = s.update(&[1.0], 1.0).unwrap();
        assert!((info.gamma - 0.5).abs() < 1e-15);
        assert!((s.weights()[0] - 0.5).abs() < 1e-15);
        assert!((s.covariance()[(0, 0)] - 0.5).abs() < 1e-15);
        assert_eq!(s.count(), 1);
    }

    #[test]
    fn zero_regressor_changes_nothing() {
        let mut s = RlsState::new(3, 2.0).unwrap();
        s.update(&[0.3, -0.2, 0.9], 1.0).unwrap();
        let before = s.clone();
        let info = s.update(&[0.0; 3], 5.0).unwrap();
        assert_eq!(info.gamma, 1.0);
        assert_eq!(s.weights(), before.weights());
        assert_eq!(s.sqrt_cov(), before.sqrt_cov());
    }

    #[test]
    fn dimension_mismatch() {
        let mut s = RlsState::new(2, 1.0).unwrap();
        assert!(matches!(
            s.update(&[1.0], 0.0),
            Err(DoneError::DimensionMismatch { .. })
        ));
        assert!(s.predict_residual(&[1.0, 2.0, 3.0], 0.0).is_err());
    }

    #[test]
    fn predict_residual_examples() {
        let s = RlsState::new(2, 1.0).unwrap();
        assert_eq!(s.predict_residual(&[0.5, 0.5], 3.0).unwrap(), 3.0);
        assert_eq!(s.predict_residual(&[0.0, 0.0], -1.0).unwrap(), -1.0);

        // exact data: weights converge to the generator, replayed residual vanishes
        let truth = [0.7, -1.2, 0.4];
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| {
                let t = i as f64 * 0.37;
                vec![t.cos(), (1.3 * t).cos(), (0.4 * t + 1.0).cos()]
            })
            .collect();
        let mut s = RlsState::new(3, 1e-12).unwrap();
        for r in &rows {
            s.update(r, dot(r, &truth)).unwrap();
        }
        let r = &rows[4];
        assert!(s.predict_residual(r, dot(r, &truth)).unwrap().abs() < 1e-8);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn matches_batch_and_keeps_factor_structure(
            d in 1usize..=20,
            n in 1usize..=50,
            lambda_idx in 0usize..3,
            seed in proptest::collection::vec(-1.0f64..1.0, 50 * 21),
        ) {
            let lambda = [1e-3, 1.0, 10.0][lambda_idx];
            let rows: Vec<Vec<f64>> = (0..n).map(|i| seed[i * 21..i * 21 + d].to_vec()).collect();
            let ys: Vec<f64> = (0..n).map(|i| 3.0 * seed[i * 21 + 20]).collect();
            let mut s = RlsState::new(d, lambda).unwrap();
            for (r, y) in rows.iter().zip(&ys) {
                let info = s.update(r, *y).unwrap();
                prop_assert!(info.gamma > 0.0 && info.gamma <= 1.0);
                for j in 0..d {
                    prop_assert!(s.factor_entry(j, j) > 0.0);
                    for i in 0..j {
                        prop_assert_eq!(s.factor[j * d + i], 0.0);
                    }
                }
            }
            let batch = batch_solution(&rows, &ys, lambda);
            let err = s.weights().iter().zip(batch.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            prop_assert!(err < 1e-8, "max weight error {}", err);

            let a = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
            let mut gram = a.transpose() * &a;
            for i in 0..d { gram[(i, i)] += lambda; }
            let p = gram.try_inverse().unwrap();
            let frob = (s.covariance() - p).norm();
            prop_assert!(frob < 1e-6, "covariance error {}", frob);
        }
    }
}
