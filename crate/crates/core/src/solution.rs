//! Final solver output shared by the constant-T2 and general pipelines.

use crate::regularity::RegularityReport;
use crate::ricci_oracle::{MetricProfile, ResidualReport};

/// One accepted continuation step (the general solver's log format).
#[derive(Debug, Clone, Copy)]
pub struct ContinuationRecord {
    pub c1: f64,
    pub c2: f64,
    pub gamma: f64,
    pub end_t: f64,
    pub res_bc: f64,
    pub res_sup: f64,
    pub z1_end: f64,
}

/// Path metadata accumulated while driving `c1` down to its critical value.
#[derive(Debug, Clone, Default)]
pub struct ContinuationLog {
    /// Accepted steps (general solver); empty for the constant-T2 path.
    pub steps: Vec<ContinuationRecord>,
    /// Every probed candidate with its feasibility verdict.
    pub c1_probes: Vec<(f64, bool)>,
}

impl ContinuationLog {
    /// CSV dump of the accepted steps, header
    /// `c1,c2,gamma,end_t,res_bc,res_sup,z1_end`.
    pub fn csv(&self) -> String {
        let mut out = String::from("c1,c2,gamma,end_t,res_bc,res_sup,z1_end\n");
        for r in &self.steps {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                r.c1, r.c2, r.gamma, r.end_t, r.res_bc, r.res_sup, r.z1_end
            ));
        }
        out
    }
}

/// A certified solution: the scaling constants, the free shooting data, the
/// mirrored profile on `[0, 1]`, and the verification reports.
#[derive(Debug, Clone)]
pub struct ScalingSolution {
    pub c1: f64,
    pub c2: f64,
    pub gamma: f64,
    pub a: f64,
    pub s: f64,
    /// Estimated critical scaling (bracket midpoint of the final probes).
    pub c1_hat: f64,
    /// Even profile over `[0, 1]` on a uniform grid.
    pub profile: MetricProfile,
    pub residuals: ResidualReport,
    pub regularity: RegularityReport,
    pub continuation: ContinuationLog,
}

/// Value at `t = 1` of an even-in-`(1-t)` profile column, from a
/// least-squares `{1, u^2, u^4}` fit of its last uniform samples. The paste
/// has to agree with the neighbouring samples to stencil precision, which a
/// diagnostic-grade endpoint estimator does not guarantee.
pub fn smooth_even_endpoint(ts: &[f64], vals: &[f64]) -> f64 {
    let n = ts.len().min(vals.len());
    let take = 12.min(n);
    let us: Vec<f64> = ts[n - take..n].iter().map(|&t| 1.0 - t).collect();
    let u_max = us.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);
    let mut ata = [0.0f64; 9];
    let mut atb = [0.0f64; 3];
    for (k, &u) in us.iter().enumerate() {
        let x = (u / u_max) * (u / u_max);
        let row = [1.0, x, x * x];
        for i in 0..3 {
            for j in 0..3 {
                ata[i * 3 + j] += row[i] * row[j];
            }
            atb[i] += row[i] * vals[n - take + k];
        }
    }
    // 3x3 Cramer solve
    let det = |m: &[f64; 9]| {
        m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
            + m[2] * (m[3] * m[7] - m[4] * m[6])
    };
    let d = det(&ata);
    if d == 0.0 {
        return vals[n - 1];
    }
    let mut m0 = ata;
    m0[0] = atb[0];
    m0[3] = atb[1];
    m0[6] = atb[2];
    det(&m0) / d
}

impl ScalingSolution {
    /// CSV dump of the profile, header `t,h,f1,f2`.
    pub fn profile_csv(&self) -> String {
        let p = &self.profile;
        let mut out = String::from("t,h,f1,f2\n");
        for i in 0..p.len() {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                p.ts[i], p.h[i], p.f1[i], p.f2[i]
            ));
        }
        out
    }
}
