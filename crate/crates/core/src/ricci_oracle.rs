//! Independent certification of candidate metrics: recompute the three
//! curvature equations and the Bianchi quantity `sigma` directly from a
//! sampled profile `(t, h, f1, f2)` with fourth order central differences.
//!
//! Residuals are reported in the equation form the solver targets (not
//! multiplied through by `f1^2`):
//!
//! ```text
//! r0 = d1 f1''/f1 + d2 f2''/f2 - (h'/h)(d1 f1'/f1 + d2 f2'/f2) + c1
//! r1 = f1''/(h^2 f1) + (d1-1) f1'^2/(h^2 f1^2) + d2 f1' f2'/(h^2 f1 f2)
//!      - h' f1'/(h^3 f1) - (d1-1)/f1^2 - (d2/d1) beta f1^2/f2^4 + c1 T1/f1^2
//! r2 = f2''/(h^2 f2) + (d2-1) f2'^2/(h^2 f2^2) + d1 f1' f2'/(h^2 f1 f2)
//!      - h' f2'/(h^3 f2) - alpha/f2^2 + 2 beta f1^2/f2^4 + c2 T2/f2^2
//! sigma = -d1 f1''/f1 - d2 f2''/f2 + (h'/h)(d1 f1'/f1 + d2 f2'/f2)
//! ```
//!
//! On a genuine solution `sigma = c1` identically (second contracted Bianchi
//! identity), so `max |sigma - c1|` is a solver-independent certificate.
//!
//! Scaling behaviour of the formulas, used as a property check: replacing
//! `(h, f1, f2)` by `(L h, L f1, L f2)` at fixed `(c1, c2)` and fixed grid
//! leaves `r0` and `sigma` unchanged pointwise and multiplies `r1`, `r2` by
//! `1/L^2`; Ricci is scale-invariant as a (0,2)-tensor, so the same scaling
//! constants certify the whole one-parameter family of metrics.
//!
//! Endpoints are excluded: one-sided stencils are never used because the
//! profile degenerates at `t = 1` and they amplify noise there.

use crate::tensor::PrescribedTensor;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("profile has {n} grid points, need at least 5")]
    GridTooCoarse { n: usize },
    #[error("profile grid is not uniform (relative jitter {jitter} at index {index})")]
    NonuniformGrid { index: usize, jitter: f64 },
    #[error("profile columns have mismatched lengths")]
    MismatchedColumns,
    #[error("fine grid is not the 2-refinement of the coarse grid")]
    GridsNotNested,
    #[error("tensor evaluation failed: {0}")]
    Tensor(#[from] crate::tensor::TensorError),
}

/// Analytic derivative samples; when present the oracle uses them instead
/// of stencils (the residual then measures the supplied data, not the grid).
#[derive(Debug, Clone)]
pub struct ProfileDerivs {
    pub dh: Vec<f64>,
    pub df1: Vec<f64>,
    pub ddf1: Vec<f64>,
    pub df2: Vec<f64>,
    pub ddf2: Vec<f64>,
}

/// Sampled metric on a uniform grid in `[0, 1]` (or `[1/2, 1]` before
/// mirroring): `h > 0`, `f2 > 0`, `f1 > 0` except possibly at the ends.
#[derive(Debug, Clone)]
pub struct MetricProfile {
    pub ts: Vec<f64>,
    pub h: Vec<f64>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub derivs: Option<ProfileDerivs>,
}

impl MetricProfile {
    pub fn new(ts: Vec<f64>, h: Vec<f64>, f1: Vec<f64>, f2: Vec<f64>) -> Self {
        Self { ts, h, f1, f2, derivs: None }
    }

    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ts.is_empty()
    }

    /// Samples closed-form component functions on a uniform grid.
    pub fn sample(
        lo: f64,
        hi: f64,
        n: usize,
        h: impl Fn(f64) -> f64,
        f1: impl Fn(f64) -> f64,
        f2: impl Fn(f64) -> f64,
    ) -> Self {
        let ts: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        let hv = ts.iter().map(|&t| h(t)).collect();
        let f1v = ts.iter().map(|&t| f1(t)).collect();
        let f2v = ts.iter().map(|&t| f2(t)).collect();
        Self::new(ts, hv, f1v, f2v)
    }

    /// Mirrors a profile on `[1/2, 1]` (first point exactly 1/2) onto the
    /// even extension over `[0, 1]`. Paired points carry bitwise-equal
    /// values by construction.
    pub fn mirror_from_half(&self) -> Self {
        let n = self.ts.len();
        let full = 2 * n - 1;
        let mut ts = Vec::with_capacity(full);
        let mut h = Vec::with_capacity(full);
        let mut f1 = Vec::with_capacity(full);
        let mut f2 = Vec::with_capacity(full);
        for i in (1..n).rev() {
            ts.push(1.0 - self.ts[i]);
            h.push(self.h[i]);
            f1.push(self.f1[i]);
            f2.push(self.f2[i]);
        }
        ts.extend_from_slice(&self.ts);
        h.extend_from_slice(&self.h);
        f1.extend_from_slice(&self.f1);
        f2.extend_from_slice(&self.f2);
        Self::new(ts, h, f1, f2)
    }

    fn check_uniform(&self) -> Result<f64, OracleError> {
        let n = self.ts.len();
        if n < 5 {
            return Err(OracleError::GridTooCoarse { n });
        }
        if self.h.len() != n || self.f1.len() != n || self.f2.len() != n {
            return Err(OracleError::MismatchedColumns);
        }
        let dt = (self.ts[n - 1] - self.ts[0]) / (n - 1) as f64;
        for i in 0..n - 1 {
            let step = self.ts[i + 1] - self.ts[i];
            let jitter = (step - dt).abs() / dt;
            if jitter > 1e-10 {
                return Err(OracleError::NonuniformGrid { index: i, jitter });
            }
        }
        Ok(dt)
    }
}

/// Per-gridpoint residuals of the three equations plus the Bianchi samples,
/// restricted to interior points inside the requested window. The sup
/// fields are the maxima of the reported pointwise values.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub ts: Vec<f64>,
    pub r0: Vec<f64>,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    pub sigma: Vec<f64>,
    pub sup_r0: f64,
    pub sup_r1: f64,
    pub sup_r2: f64,
    /// `max |sigma - c1|` over the reported points.
    pub sigma_max_dev: f64,
    pub grid_spacing: f64,
    pub grid_n: usize,
    /// True when the profile supplied analytic derivatives.
    pub analytic: bool,
}

struct DerivSamples {
    d1st: Vec<f64>,
    d2nd: Vec<f64>,
}

/// Fourth order central differences of one column; entries outside
/// `[2, n-3]` are unusable and left as NaN. The stencils are evaluated in
/// symmetric-difference form so cancellation happens between neighbouring
/// values first; this keeps the rounding floor at `eps |f'| / dt` instead
/// of `eps |f| / dt^2`.
fn stencil(dt: f64, v: &[f64]) -> DerivSamples {
    let n = v.len();
    let mut d1st = vec![f64::NAN; n];
    let mut d2nd = vec![f64::NAN; n];
    for j in 2..n - 2 {
        d1st[j] = (8.0 * (v[j + 1] - v[j - 1]) - (v[j + 2] - v[j - 2])) / (12.0 * dt);
        let inner = (v[j + 1] - v[j]) + (v[j - 1] - v[j]);
        let outer = (v[j + 2] - v[j]) + (v[j - 2] - v[j]);
        d2nd[j] = (16.0 * inner - outer) / (12.0 * dt * dt);
    }
    DerivSamples { d1st, d2nd }
}

/// Recomputes the residuals of the three prescribed-curvature equations at
/// interior grid points (optionally restricted to a `window`), together
/// with the Bianchi samples `sigma`.
pub fn ricci_residuals(
    m: &MetricProfile,
    tensor: &PrescribedTensor,
    c1: f64,
    c2: f64,
    window: Option<(f64, f64)>,
) -> Result<ResidualReport, OracleError> {
    let dt = m.check_uniform()?;
    let n = m.len();
    let d1 = tensor.d1 as f64;
    let d2 = tensor.d2 as f64;
    let (lo, hi) = window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));

    let (dh, df1, ddf1, df2, ddf2);
    let analytic = m.derivs.is_some();
    match &m.derivs {
        Some(d) => {
            dh = d.dh.clone();
            df1 = d.df1.clone();
            ddf1 = d.ddf1.clone();
            df2 = d.df2.clone();
            ddf2 = d.ddf2.clone();
        }
        None => {
            let sh = stencil(dt, &m.h);
            let s1 = stencil(dt, &m.f1);
            let s2 = stencil(dt, &m.f2);
            dh = sh.d1st;
            df1 = s1.d1st;
            ddf1 = s1.d2nd;
            df2 = s2.d1st;
            ddf2 = s2.d2nd;
        }
    }

    let mut ts = Vec::new();
    let mut r0v = Vec::new();
    let mut r1v = Vec::new();
    let mut r2v = Vec::new();
    let mut sg = Vec::new();

    for j in 2..n - 2 {
        let t = m.ts[j];
        if t < lo || t > hi {
            continue;
        }
        let (t1, t2) = tensor.evaluate_mirrored(t, 0)?;
        let h = m.h[j];
        let f1 = m.f1[j];
        let f2 = m.f2[j];
        let hp = dh[j];
        let f1p = df1[j];
        let f1pp = ddf1[j];
        let f2p = df2[j];
        let f2pp = ddf2[j];
        let beta_ratio = if tensor.beta != 0.0 {
            tensor.beta * f1 * f1 / (f2 * f2 * f2 * f2)
        } else {
            0.0
        };

        let trace = d1 * f1p / f1 + d2 * f2p / f2;
        let bracket = d1 * f1pp / f1 + d2 * f2pp / f2 - hp / h * trace;
        let r0 = bracket + c1;
        let sigma = -bracket;

        let h2 = h * h;
        let r1 = f1pp / (h2 * f1) + (d1 - 1.0) * f1p * f1p / (h2 * f1 * f1)
            + d2 * f1p * f2p / (h2 * f1 * f2)
            - hp * f1p / (h2 * h * f1)
            - (d1 - 1.0) / (f1 * f1)
            - d2 / d1 * beta_ratio
            + c1 * t1 / (f1 * f1);
        let r2 = f2pp / (h2 * f2) + (d2 - 1.0) * f2p * f2p / (h2 * f2 * f2)
            + d1 * f1p * f2p / (h2 * f1 * f2)
            - hp * f2p / (h2 * h * f2)
            - tensor.alpha / (f2 * f2)
            + 2.0 * beta_ratio
            + c2 * t2 / (f2 * f2);

        ts.push(t);
        r0v.push(r0);
        r1v.push(r1);
        r2v.push(r2);
        sg.push(sigma);
    }

    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let sigma_max_dev = sg.iter().fold(0.0f64, |m, s| m.max((s - c1).abs()));
    Ok(ResidualReport {
        sup_r0: sup(&r0v),
        sup_r1: sup(&r1v),
        sup_r2: sup(&r2v),
        sigma_max_dev,
        ts,
        r0: r0v,
        r1: r1v,
        r2: r2v,
        sigma: sg,
        grid_spacing: dt,
        grid_n: n,
        analytic,
    })
}

/// Bianchi samples `(t, sigma)` at interior grid points.
pub fn bianchi_sigma(
    m: &MetricProfile,
    tensor: &PrescribedTensor,
) -> Result<Vec<(f64, f64)>, OracleError> {
    let rep = ricci_residuals(m, tensor, 0.0, 0.0, None)?;
    Ok(rep.ts.iter().copied().zip(rep.sigma.iter().copied()).collect())
}

/// Estimated stencil order per equation from a nested grid pair.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub order_r0: f64,
    pub order_r1: f64,
    pub order_r2: f64,
    /// True when a residual pair sat at the rounding floor (order is NaN).
    pub at_rounding_floor: bool,
    /// True when the profiles carried analytic derivatives.
    pub analytic: bool,
}

/// `log2(||r||_coarse / ||r||_fine)` per equation; the fine grid must be the
/// 2-refinement of the coarse one.
pub fn convergence_order(
    m_fine: &MetricProfile,
    m_coarse: &MetricProfile,
    tensor: &PrescribedTensor,
    c1: f64,
    c2: f64,
) -> Result<ConvergenceReport, OracleError> {
    if m_fine.len() != 2 * (m_coarse.len() - 1) + 1
        || (m_fine.ts[0] - m_coarse.ts[0]).abs() > 1e-12
        || (m_fine.ts[m_fine.len() - 1] - m_coarse.ts[m_coarse.len() - 1]).abs() > 1e-12
    {
        return Err(OracleError::GridsNotNested);
    }
    // compare over the coarse grid's interior coverage; otherwise the fine
    // grid's extra near-boundary points (where 1/f1 amplification grows)
    // bias the measured order low
    let nc = m_coarse.len();
    let window = Some((m_coarse.ts[2], m_coarse.ts[nc - 3]));
    let fine = ricci_residuals(m_fine, tensor, c1, c2, window)?;
    let coarse = ricci_residuals(m_coarse, tensor, c1, c2, window)?;
    let floor = 1e-13;
    let order = |c: f64, f: f64| {
        if f <= floor || c <= floor {
            f64::NAN
        } else {
            (c / f).log2()
        }
    };
    let order_r0 = order(coarse.sup_r0, fine.sup_r0);
    let order_r1 = order(coarse.sup_r1, fine.sup_r1);
    let order_r2 = order(coarse.sup_r2, fine.sup_r2);
    Ok(ConvergenceReport {
        order_r0,
        order_r1,
        order_r2,
        at_rounding_floor: order_r0.is_nan() || order_r1.is_nan() || order_r2.is_nan(),
        analytic: fine.analytic,
    })
}
