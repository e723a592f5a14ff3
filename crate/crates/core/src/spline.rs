//! Cubic spline interpolation with analytic first and second derivatives.
//!
//! Tensor components ingested from tables must be C^2 because the shooting
//! right-hand sides use `T_i''`. A clamped cubic spline (endpoint slopes
//! prescribed) keeps the second derivative accurate at the interval ends,
//! which matters for the `T1''(1) = 2` endpoint check; the slopes are
//! estimated from the table itself with one-sided fourth order stencils
//! when the caller has no better values.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SplineError {
    #[error("spline needs at least {min} knots, got {got}")]
    TooFewKnots { min: usize, got: usize },
    #[error("spline knots must be strictly increasing (violation near index {index})")]
    NotIncreasing { index: usize },
    #[error("non-finite value in spline table at index {index}")]
    NonFinite { index: usize },
}

/// Piecewise cubic interpolant over strictly increasing knots.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    /// Clamped spline: first derivatives at both ends are prescribed.
    pub fn clamped(xs: &[f64], ys: &[f64], d_start: f64, d_end: f64) -> Result<Self, SplineError> {
        let n = xs.len();
        if n < 3 {
            return Err(SplineError::TooFewKnots { min: 3, got: n });
        }
        for (i, w) in xs.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(SplineError::NotIncreasing { index: i });
            }
        }
        for (i, v) in xs.iter().chain(ys.iter()).enumerate() {
            if !v.is_finite() {
                return Err(SplineError::NonFinite { index: i % n });
            }
        }

        // Tridiagonal system for the knot second derivatives m_i.
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];

        let h0 = xs[1] - xs[0];
        diag[0] = 2.0 * h0;
        sup[0] = h0;
        rhs[0] = 6.0 * ((ys[1] - ys[0]) / h0 - d_start);

        for i in 1..n - 1 {
            let hl = xs[i] - xs[i - 1];
            let hr = xs[i + 1] - xs[i];
            sub[i] = hl;
            diag[i] = 2.0 * (hl + hr);
            sup[i] = hr;
            rhs[i] = 6.0 * ((ys[i + 1] - ys[i]) / hr - (ys[i] - ys[i - 1]) / hl);
        }

        let hn = xs[n - 1] - xs[n - 2];
        sub[n - 1] = hn;
        diag[n - 1] = 2.0 * hn;
        rhs[n - 1] = 6.0 * (d_end - (ys[n - 1] - ys[n - 2]) / hn);

        // Thomas algorithm.
        for i in 1..n {
            let w = sub[i] / diag[i - 1];
            diag[i] -= w * sup[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut m = vec![0.0; n];
        m[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            m[i] = (rhs[i] - sup[i] * m[i + 1]) / diag[i];
        }

        Ok(Self { xs: xs.to_vec(), ys: ys.to_vec(), m })
    }

    /// Spline with prescribed endpoint second derivatives. A clamped spline
    /// leaves an O(h^2) error in the endpoint curvature, which matters
    /// here: the endpoint check `T1''(1) = 2` and the collapse asymptotics
    /// both read curvature at the interval end. With the end values pinned
    /// the tridiagonal system keeps its interior rows only.
    pub fn with_end_curvatures(
        xs: &[f64],
        ys: &[f64],
        m_start: f64,
        m_end: f64,
    ) -> Result<Self, SplineError> {
        let n = xs.len();
        if n < 3 {
            return Err(SplineError::TooFewKnots { min: 3, got: n });
        }
        for (i, w) in xs.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(SplineError::NotIncreasing { index: i });
            }
        }
        for (i, v) in xs.iter().chain(ys.iter()).enumerate() {
            if !v.is_finite() {
                return Err(SplineError::NonFinite { index: i % n });
            }
        }

        let mut sub = vec![0.0; n];
        let mut diag = vec![1.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        rhs[0] = m_start;
        rhs[n - 1] = m_end;
        for i in 1..n - 1 {
            let hl = xs[i] - xs[i - 1];
            let hr = xs[i + 1] - xs[i];
            sub[i] = hl;
            diag[i] = 2.0 * (hl + hr);
            sup[i] = hr;
            rhs[i] = 6.0 * ((ys[i + 1] - ys[i]) / hr - (ys[i] - ys[i - 1]) / hl);
        }
        for i in 1..n {
            let w = sub[i] / diag[i - 1];
            diag[i] -= w * sup[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut m = vec![0.0; n];
        m[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            m[i] = (rhs[i] - sup[i] * m[i + 1]) / diag[i];
        }
        Ok(Self { xs: xs.to_vec(), ys: ys.to_vec(), m })
    }

    /// Spline from a bare table: endpoint curvatures estimated by one-sided
    /// fourth order stencils (requires >= 5 knots).
    pub fn from_table(xs: &[f64], ys: &[f64]) -> Result<Self, SplineError> {
        let n = xs.len();
        if n < 5 {
            return Err(SplineError::TooFewKnots { min: 5, got: n });
        }
        let m_start = one_sided_second_derivative(&xs[..5], &ys[..5], xs[0]);
        let m_end = one_sided_second_derivative(&xs[n - 5..], &ys[n - 5..], xs[n - 1]);
        Self::with_end_curvatures(xs, ys, m_start, m_end)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    fn segment(&self, x: f64) -> usize {
        // partition_point returns the first knot strictly greater than x.
        let i = self.xs.partition_point(|&k| k <= x);
        i.clamp(1, self.xs.len() - 1) - 1
    }

    pub fn value(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        (self.ys[i + 1] - self.ys[i]) / h
            + ((3.0 * b * b - 1.0) * self.m[i + 1] - (3.0 * a * a - 1.0) * self.m[i]) * h / 6.0
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        a * self.m[i] + b * self.m[i + 1]
    }
}

/// Second derivative at `at` of the degree-4 interpolating polynomial
/// through five points, via Lagrange basis second derivatives.
fn one_sided_second_derivative(xs: &[f64], ys: &[f64], at: f64) -> f64 {
    debug_assert_eq!(xs.len(), 5);
    let mut d = 0.0;
    for j in 0..5 {
        let mut denom = 1.0;
        for k in 0..5 {
            if k != j {
                denom *= xs[j] - xs[k];
            }
        }
        // second derivative of the Lagrange basis L_j at `at`:
        // sum over unordered pairs {m, p} != j of prod over the rest
        let mut basis_dd = 0.0;
        for m in 0..5 {
            if m == j {
                continue;
            }
            for p in 0..5 {
                if p == j || p <= m {
                    continue;
                }
                let mut prod = 1.0;
                for k in 0..5 {
                    if k != j && k != m && k != p {
                        prod *= at - xs[k];
                    }
                }
                basis_dd += 2.0 * prod;
            }
        }
        d += ys[j] * basis_dd / denom;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubic_exactly() {
        let f = |x: f64| 2.0 * x * x * x - x * x + 3.0 * x - 5.0;
        let df = |x: f64| 6.0 * x * x - 2.0 * x + 3.0;
        let xs: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let sp = CubicSpline::clamped(&xs, &ys, df(0.0), df(1.0)).unwrap();
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert!((sp.value(x) - f(x)).abs() < 1e-12);
            assert!((sp.derivative(x) - df(x)).abs() < 1e-10);
            assert!((sp.second_derivative(x) - (12.0 * x - 2.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn endpoint_second_derivative_accuracy_on_smooth_data() {
        // Second derivative at the right end of a dense sin^2 table; this is
        // what the T1''(1) = 2 validation check and the collapse
        // asymptotics see for spline tensors. The one-sided estimate feeds
        // the end condition directly, so the error is O(h^3), not the
        // clamped spline's O(h^2).
        let n = 2001;
        let xs: Vec<f64> = (0..n).map(|i| 0.5 + 0.5 * i as f64 / (n - 1) as f64).collect();
        let pi = std::f64::consts::PI;
        let ys: Vec<f64> = xs.iter().map(|&t| (pi * (1.0 - t)).sin().powi(2) / (pi * pi)).collect();
        let sp = CubicSpline::from_table(&xs, &ys).unwrap();
        assert!((sp.second_derivative(1.0) - 2.0).abs() < 1e-8);
        assert!(sp.derivative(1.0).abs() < 1e-9);
        // interior fidelity unchanged
        for i in 0..=100 {
            let t = 0.5 + 0.5 * i as f64 / 100.0;
            let exact = (pi * (1.0 - t)).sin().powi(2) / (pi * pi);
            assert!((sp.value(t) - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(matches!(
            CubicSpline::from_table(&[0.0, 1.0], &[0.0, 1.0]),
            Err(SplineError::TooFewKnots { .. })
        ));
        let xs = [0.0, 0.5, 0.5, 0.7, 1.0];
        assert!(matches!(
            CubicSpline::from_table(&xs, &[0.0; 5]),
            Err(SplineError::NotIncreasing { .. })
        ));
    }
}
