//! Monotone cubic (Fritsch–Carlson) interpolation.
//!
//! Node derivatives are the weighted harmonic means of adjacent secant slopes,
//! zeroed at local extrema, so the interpolant never overshoots its data. On
//! positive data the curve therefore stays positive, which the G-functional
//! integration of 1/f relies on.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl Pchip {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(Error::InvalidParameter(format!(
                "interpolation needs >= 2 matched nodes, got {} x {}",
                n,
                ys.len()
            )));
        }
        for w in xs.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidParameter(
                    "interpolation abscissae must increase".into(),
                ));
            }
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "non-finite interpolation data".into(),
            ));
        }

        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let slopes: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut ds = vec![0.0; n];
        for i in 1..n - 1 {
            let (s0, s1) = (slopes[i - 1], slopes[i]);
            if s0 * s1 > 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                ds[i] = (w1 + w2) / (w1 / s0 + w2 / s1);
            }
        }
        ds[0] = edge_derivative(
            h[0],
            h.get(1).copied().unwrap_or(h[0]),
            slopes[0],
            slopes.get(1).copied().unwrap_or(slopes[0]),
        );
        ds[n - 1] = edge_derivative(
            h[n - 2],
            if n >= 3 { h[n - 3] } else { h[n - 2] },
            slopes[n - 2],
            if n >= 3 { slopes[n - 3] } else { slopes[n - 2] },
        );
        Ok(Pchip { xs, ys, ds })
    }

    fn cell(&self, x: f64) -> usize {
        match self.xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.xs.len() - 2),
        }
    }

    /// Hermite evaluation; clamps outside the node range to the end cells.
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.cell(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1, d0, d1) = (self.ys[i], self.ys[i + 1], self.ds[i], self.ds[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
            + d0 * h * (t3 - 2.0 * t2 + t)
            + y1 * (-2.0 * t3 + 3.0 * t2)
            + d1 * h * (t3 - t2)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }
    pub fn ys(&self) -> &[f64] {
        &self.ys
    }
}

// Three-point one-sided estimate, clamped per Fritsch–Carlson so the edge
// derivative never flips the adjacent secant's direction or triples it.
fn edge_derivative(h0: f64, h1: f64, s0: f64, s1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if d * s0 <= 0.0 {
        0.0
    } else if s0 * s1 <= 0.0 && d.abs() > 3.0 * s0.abs() {
        3.0 * s0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes() {
        let xs = vec![0.0, 1.0, 2.5, 4.0];
        let ys = vec![1.0, 0.5, 0.4, 0.35];
        let p = Pchip::new(xs.clone(), ys.clone()).unwrap();
        for (x, y) in xs.iter().zip(ys.iter()) {
            assert!((p.eval(*x) - y).abs() < 1e-14);
        }
    }

    #[test]
    fn monotone_data_stays_in_range() {
        let xs: Vec<f64> = (0..40).map(|i| i as f64 * 0.25).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 / (1.0 + x)).collect();
        let p = Pchip::new(xs.clone(), ys.clone()).unwrap();
        let mut prev = p.eval(0.0);
        for i in 1..400 {
            let x = i as f64 * 40.0 * 0.25 / 400.0;
            let v = p.eval(x);
            assert!(v <= prev + 1e-12, "not monotone at {x}");
            assert!(v > 0.0);
            prev = v;
        }
    }

    #[test]
    fn smooth_function_accuracy() {
        let xs: Vec<f64> = (0..=200).map(|i| i as f64 / 40.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (x * 0.7).exp()).collect();
        let p = Pchip::new(xs, ys).unwrap();
        for i in 0..500 {
            let x = 0.01 + i as f64 * 4.9 / 500.0;
            let rel = (p.eval(x) - (x * 0.7).exp()).abs() / (x * 0.7).exp();
            assert!(rel < 1e-5, "rel err {rel} at {x}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Pchip::new(vec![0.0], vec![1.0]).is_err());
        assert!(Pchip::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(Pchip::new(vec![0.0, 1.0], vec![1.0, f64::NAN]).is_err());
    }
}
