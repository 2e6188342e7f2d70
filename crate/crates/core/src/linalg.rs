use nalgebra::{ComplexField, DMatrix, DVector};

use crate::error::{DoneError, Result};

/// Solves `min ||A c - y||^2 + ridge ||c||^2`.
///
/// Uses Cholesky on the smaller of `A^H A` and `A A^H`; when that factorization
/// fails numerically, falls back to QR on the stacked system `[A; sqrt(ridge) I]`.
pub(crate) fn ridge_solve<T: ComplexField>(
    a: &DMatrix<T>,
    y: &DVector<T>,
    ridge: T::RealField,
) -> Result<DVector<T>> {
    let (n, d) = a.shape();
    let shift = T::from_real(ridge.clone());
    if d <= n {
        let mut gram = a.ad_mul(a);
        for i in 0..d {
            gram[(i, i)] += shift.clone();
        }
        if let Some(chol) = gram.cholesky() {
            return Ok(chol.solve(&a.ad_mul(y)));
        }
    } else {
        // c = A^H (A A^H + ridge I)^-1 y
        let mut gram = a * a.adjoint();
        for i in 0..n {
            gram[(i, i)] += shift.clone();
        }
        if let Some(chol) = gram.cholesky() {
            return Ok(a.ad_mul(&chol.solve(y)));
        }
    }
    stacked_qr(a, y, ridge)
}

fn stacked_qr<T: ComplexField>(
    a: &DMatrix<T>,
    y: &DVector<T>,
    ridge: T::RealField,
) -> Result<DVector<T>> {
    let (n, d) = a.shape();
    let root = T::from_real(ridge.sqrt());
    let mut stacked = DMatrix::zeros(n + d, d);
    stacked.rows_mut(0, n).copy_from(a);
    for i in 0..d {
        stacked[(n + i, i)] = root.clone();
    }
    let mut rhs = DVector::zeros(n + d);
    rhs.rows_mut(0, n).copy_from(y);
    let qr = stacked.qr();
    qr.q_tr_mul(&mut rhs);
    let r = qr.r();
    r.solve_upper_triangular(&rhs.rows(0, d).into_owned())
        .ok_or_else(|| DoneError::Linalg("regularized least-squares system is singular".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn reference(a: &DMatrix<f64>, y: &DVector<f64>, ridge: f64) -> DVector<f64> {
        stacked_qr(a, y, ridge).unwrap()
    }

    #[test]
    fn primal_and_dual_agree_with_qr() {
        let tall = DMatrix::from_fn(7, 3, |i, j| ((i * 3 + j) as f64 * 0.7).sin());
        let wide = DMatrix::from_fn(3, 7, |i, j| ((i * 7 + j) as f64 * 0.3).cos());
        for a in [tall, wide] {
            let y = DVector::from_fn(a.nrows(), |i, _| i as f64 - 1.0);
            let c = ridge_solve(&a, &y, 1e-3).unwrap();
            assert!((c - reference(&a, &y, 1e-3)).amax() < 1e-10);
        }
    }

    #[test]
    fn complex_scalar() {
        // (|a|^2 + r) c = conj(a) y
        let a = DMatrix::from_element(1, 1, Complex64::new(0.6, 0.8));
        let y = DVector::from_element(1, Complex64::new(2.0, 0.0));
        let c = ridge_solve(&a, &y, 1.0).unwrap();
        let expected = Complex64::new(0.6, -0.8) * 2.0 / 2.0;
        assert!((c[0] - expected).norm() < 1e-14);
    }
}
