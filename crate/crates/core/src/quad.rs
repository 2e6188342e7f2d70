//! Adaptive Simpson quadrature.

use crate::error::{DoneError, Result};

const MAX_DEPTH: u32 = 50;

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || !(tol > 0.0) {
        return Err(DoneError::InvalidParameter(format!(
            "quadrature needs finite limits and positive tolerance, got [{a}, {b}], tol {tol}"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    // split first so a narrow peak between the three initial nodes is not missed
    let pieces = 16;
    let h = (b - a) / pieces as f64;
    let mut total = 0.0;
    for i in 0..pieces {
        let lo = a + i as f64 * h;
        let hi = if i + 1 == pieces { b } else { lo + h };
        let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
        let whole = simpson(lo, hi, fa, fm, fb);
        total += recurse(f, lo, hi, fa, fm, fb, whole, tol / pieces as f64, MAX_DEPTH);
    }
    if total.is_finite() {
        Ok(total)
    } else {
        Err(DoneError::NonFinite(format!("integrand on [{a}, {b}]")))
    }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomials_and_trig() {
        let v = adaptive_simpson(&|x| x * x * x, 0.0, 2.0, 1e-10).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
        let v = adaptive_simpson(&|x: f64| x.sin(), 0.0, PI, 1e-10).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
    }

    #[test]
    fn gaussian_mass() {
        let v = adaptive_simpson(&|x: f64| (-0.5 * x * x).exp(), -12.0, 12.0, 1e-10).unwrap();
        assert!((v - (2.0 * PI).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn narrow_peak() {
        let w = 1e-2;
        let v = adaptive_simpson(
            &|x: f64| (-0.5 * (x - 0.3) * (x - 0.3) / (w * w)).exp(),
            -5.0,
            5.0,
            1e-10,
        )
        .unwrap();
        assert!((v - w * (2.0 * PI).sqrt()).abs() < 1e-8);
    }

    #[test]
    fn degenerate_interval() {
        assert_eq!(adaptive_simpson(&|_| 1.0, 1.0, 1.0, 1e-8).unwrap(), 0.0);
        assert!(adaptive_simpson(&|_| 1.0, 0.0, f64::INFINITY, 1e-8).is_err());
    }
}
