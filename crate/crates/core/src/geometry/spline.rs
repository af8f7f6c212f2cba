//! Clamped cubic splines in Hermite form.

use crate::error::{Error, Result};

/// C² cubic spline through `(knots[k], values[k])` with prescribed end
/// slopes. Stored as nodal values plus nodal slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct ClampedSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl ClampedSpline {
    pub fn new(knots: Vec<f64>, values: Vec<f64>, start_slope: f64, end_slope: f64) -> Result<Self> {
        let n = knots.len();
        if n < 2 || values.len() != n {
            return Err(Error::InvalidInput("spline needs at least two knots and matching values".into()));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("spline knots must be strictly increasing".into()));
        }
        let mut slopes = vec![0.0; n];
        slopes[0] = start_slope;
        slopes[n - 1] = end_slope;
        if n > 2 {
            // Continuity of the second derivative at interior knots gives a
            // tridiagonal system for the interior slopes.
            let m = n - 2;
            let mut sub = vec![0.0; m];
            let mut diag = vec![0.0; m];
            let mut sup = vec![0.0; m];
            let mut rhs = vec![0.0; m];
            for i in 0..m {
                let k = i + 1;
                let hl = knots[k] - knots[k - 1];
                let hr = knots[k + 1] - knots[k];
                sub[i] = 1.0 / hl;
                diag[i] = 2.0 * (1.0 / hl + 1.0 / hr);
                sup[i] = 1.0 / hr;
                rhs[i] = 3.0 * ((values[k] - values[k - 1]) / (hl * hl) + (values[k + 1] - values[k]) / (hr * hr));
            }
            rhs[0] -= sub[0] * start_slope;
            rhs[m - 1] -= sup[m - 1] * end_slope;
            let interior = thomas(&sub, &diag, &sup, &rhs);
            slopes[1..n - 1].copy_from_slice(&interior);
        }
        Ok(Self { knots, values, slopes })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    fn interval(&self, x: f64) -> usize {
        let n = self.knots.len();
        match self.knots.partition_point(|&k| k <= x) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        }
    }

    /// Value and first derivative at `x` (cubic extrapolation outside the knots).
    pub fn eval_with_slope(&self, x: f64) -> (f64, f64) {
        let k = self.interval(x);
        let h = self.knots[k + 1] - self.knots[k];
        let t = (x - self.knots[k]) / h;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (self.slopes[k] * h, self.slopes[k + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let value = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        let dt = (6.0 * t2 - 6.0 * t) * y0 + (3.0 * t2 - 4.0 * t + 1.0) * m0 + (-6.0 * t2 + 6.0 * t) * y1 + (3.0 * t2 - 2.0 * t) * m1;
        (value, dt / h)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_with_slope(x).0
    }
}

fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i] * c[i - 1];
        c[i] = sup[i] / denom;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_and_respects_end_slopes() {
        let s = ClampedSpline::new(vec![0.0, 0.5, 1.0, 2.0], vec![0.0, 1.0, -0.5, 0.0], 0.0, 0.0).unwrap();
        for (k, v) in s.knots().iter().zip(s.values()) {
            assert!((s.eval(*k) - v).abs() < 1e-14);
        }
        assert!(s.eval_with_slope(0.0).1.abs() < 1e-14);
        assert!(s.eval_with_slope(2.0).1.abs() < 1e-14);
    }

    #[test]
    fn second_derivative_is_continuous() {
        let s = ClampedSpline::new(vec![0.0, 0.3, 1.1, 1.5, 2.0], vec![0.0, 0.7, -0.2, 0.4, 0.0], 0.0, 0.0).unwrap();
        let d2 = |x: f64| {
            let h = 1e-5;
            (s.eval(x + h) - 2.0 * s.eval(x) + s.eval(x - h)) / (h * h)
        };
        for &k in &s.knots()[1..4] {
            let left = d2(k - 2e-5);
            let right = d2(k + 2e-5);
            assert!((left - right).abs() < 1e-2, "jump at {k}: {left} vs {right}");
        }
    }

    #[test]
    fn reproduces_cubic_with_matching_end_slopes() {
        let f = |x: f64| x * x * x - 2.0 * x * x + 0.5 * x + 1.0;
        let df = |x: f64| 3.0 * x * x - 4.0 * x + 0.5;
        let knots: Vec<f64> = (0..6).map(|i| i as f64 * 0.4).collect();
        let values = knots.iter().map(|&x| f(x)).collect();
        let s = ClampedSpline::new(knots, values, df(0.0), df(2.0)).unwrap();
        for i in 0..50 {
            let x = i as f64 * 0.04;
            assert!((s.eval(x) - f(x)).abs() < 1e-12);
        }
    }
}
