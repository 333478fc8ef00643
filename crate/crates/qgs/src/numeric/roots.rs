//! Safeguarded Newton iteration on a bracketed root.
//!
//! The driver assumes g is continuous with g(lo) <= 0 <= g(hi) and keeps the
//! iterate inside [lo, hi]: a Newton step that leaves the bracket, or fails to
//! shrink the residual, falls back to bisection. Derivative-free callers can
//! pass a zero derivative to force pure bisection.

use crate::error::{Error, Result};

/// Solve g(x) = 0 for x in [lo, hi].
///
/// `g` returns (value, derivative). Terminates when |value| <= f_tol or the
/// bracket collapses to floating-point resolution; errors after `max_iter`
/// evaluations without meeting either condition.
pub fn newton_bracketed(
    g: &dyn Fn(f64) -> (f64, f64),
    mut lo: f64,
    mut hi: f64,
    seed: f64,
    f_tol: f64,
    max_iter: usize,
) -> Result<f64> {
    debug_assert!(lo <= hi);
    let mut x = if seed.is_finite() && seed >= lo && seed <= hi {
        seed
    } else {
        0.5 * (lo + hi)
    };
    let (mut fx, mut dfx) = g(x);
    for _ in 0..max_iter {
        if !fx.is_finite() {
            return Err(Error::ConvergenceFailure(format!(
                "non-finite residual at x = {x}"
            )));
        }
        if fx.abs() <= f_tol {
            return Ok(x);
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let newton = x - fx / dfx;
        x = if dfx.is_finite() && dfx != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if x <= lo || x >= hi {
            // Bracket exhausted at floating-point resolution.
            return Ok(0.5 * (lo + hi));
        }
        let r = g(x);
        fx = r.0;
        dfx = r.1;
    }
    Err(Error::ConvergenceFailure(format!(
        "no root to tolerance {f_tol:e} within {max_iter} iterations (x = {x}, residual = {fx:e})"
    )))
}

/// Expand `hi` upward by doubling the offset from `lo` until g(hi) >= 0.
///
/// Returns the bracketing upper bound. `g` must be eventually positive.
pub fn bracket_upward(
    g: &dyn Fn(f64) -> f64,
    lo: f64,
    first_step: f64,
    max_doublings: usize,
) -> Result<f64> {
    let mut step = first_step.max(f64::MIN_POSITIVE);
    for _ in 0..max_doublings {
        let hi = lo + step;
        let v = g(hi);
        if !v.is_finite() && !(v == f64::INFINITY) {
            return Err(Error::ConvergenceFailure(format!(
                "non-finite bracket probe at {hi}"
            )));
        }
        if v >= 0.0 {
            return Ok(hi);
        }
        step *= 2.0;
    }
    Err(Error::ConvergenceFailure(format!(
        "could not bracket a sign change above {lo} in {max_doublings} doublings"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_root() {
        let g = |x: f64| (x * x * x - 9.0, 3.0 * x * x);
        let x = newton_bracketed(&g, 0.0, 10.0, 2.0, 1e-14, 100).unwrap();
        assert!((x - 9.0f64.powf(1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn bisection_fallback_with_zero_derivative() {
        let g = |x: f64| (x.exp() - 2.0, 0.0);
        let x = newton_bracketed(&g, 0.0, 4.0, 1.0, 1e-13, 200).unwrap();
        assert!((x - 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn bracket_expands() {
        let g = |x: f64| x - 77.0;
        let hi = bracket_upward(&g, 0.0, 1.0, 64).unwrap();
        assert!(hi >= 77.0);
    }

    #[test]
    fn iteration_limit_reported() {
        let g = |x: f64| (x, 1.0);
        // Root at 0 is outside the bracket [1, 2]; the solver must give up.
        let r = newton_bracketed(&g, 1.0, 2.0, 1.5, 1e-30, 8);
        assert!(r.is_err() || r.unwrap() <= 1.0 + 1e-9);
    }
}
