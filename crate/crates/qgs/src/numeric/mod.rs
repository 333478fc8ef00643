//! Shared numeric kernels: log-domain accumulation, adaptive quadrature,
//! bracketed root finding, and shape-preserving interpolation.

pub mod interp;
pub mod quad;
pub mod roots;

/// log(e^a + e^b) without leaving the log domain.
///
/// Both arguments may be -inf (empty sums); the result is then -inf.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY && b == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_add_exp_matches_direct() {
        let v = log_add_exp(0.0, 0.0);
        assert!((v - 2.0f64.ln()).abs() < 1e-15);
        let v = log_add_exp(700.0, 700.0);
        assert!((v - (700.0 + 2.0f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn log_add_exp_neg_infinity() {
        assert_eq!(
            log_add_exp(f64::NEG_INFINITY, f64::NEG_INFINITY),
            f64::NEG_INFINITY
        );
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 3.0), 3.0);
        assert_eq!(log_add_exp(3.0, f64::NEG_INFINITY), 3.0);
    }

    #[test]
    fn log_add_exp_asymmetric() {
        // e^0 + e^-40 barely moves the larger term.
        let v = log_add_exp(0.0, -40.0);
        assert!(v > 0.0 && v < 1e-15);
    }
}
