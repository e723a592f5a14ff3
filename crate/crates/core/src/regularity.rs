//! Executable regularity diagnostics at the collapsing orbit `t = 1`.
//!
//! Near a genuine collapse the trajectory obeys `y1'(t) = -z1(t)/(1-t)` with
//! `z1 -> 1`; equivalently `f1 = (1-t) K(t)` with `K` differentiable at 1,
//! `f1'(1) = -K(1)` and `f1''(1) = -2 K'(1)`. The module
//!
//! * samples the collapse monitor `z1 = -(1-t) y1'`,
//! * extrapolates the endpoint data `(f1, f1', f1'', h, h', f2, f2')` at
//!   `t = 1` from the trajectory tail, fitting the singular linear model
//!   `z1' = a(t)(z1-1)/(1-t) + b(t)` (`a`, `b` affine in `1-t`, `a(1)` pinned
//!   to its structural value `d1 + 1`) and extending it with the singular
//!   ODE solver,
//! * checks the six smoothness conditions
//!   `f1(1)=0`, `f1'(1)=-h(1)<0`, `h'(1)=0`, `f1''(1)=0`, `f2'(1)=0`,
//!   `f2(1)>0`.
//!
//! `h(1)` is reported as `-f1'(1)` (the stable estimator); the discrepancy
//! against the independently extrapolated `h` value is what condition 2
//! actually measures. The pointwise samples for `f1''` and `h'` come from
//! the right-hand side of the reduced system evaluated on the records,
//! which avoids differencing the tail numerically.

use crate::ode_core::{rhs_reduced, solve_singular_linear, Trajectory};
use crate::tensor::PrescribedTensor;
use thiserror::Error;

/// Pointwise-extrapolation window in `u = 1 - t`. The left edge stays two
/// decades above the deepest trajectory samples: a refined-c1 trajectory
/// hugs the collapse separatrix with a deviation mode growing like
/// (1/u)^{d1+1}, so endpoint values are read off where that mode is still
/// far below the fit tolerances (guard regressors absorb the remainder).
const FIT_U_LO: f64 = 6e-3;
const FIT_U_HI: f64 = 6e-2;
/// z1-model window (see module docs).
const Z1_FIT_U_LO: f64 = 1e-4;
const Z1_FIT_U_HI: f64 = 1e-2;
/// Collapse signature acceptance band for z1 at the last record.
const Z1_SIGNATURE: (f64, f64) = (0.8, 1.2);

#[derive(Debug, Error)]
pub enum RegularityError {
    #[error("trajectory tail too short: last record at t = {t_last}, need samples past t = {needed}")]
    TailTooShort { t_last: f64, needed: f64 },
    #[error("no collapse signature: z1 at the last record is {z1_end}, outside [0.8, 1.2]")]
    NoCollapseSignature { z1_end: f64 },
    #[error("z1 model fit residual {rms} too large (threshold {threshold})")]
    FitResidualTooLarge { rms: f64, threshold: f64 },
    #[error(transparent)]
    Ode(#[from] crate::ode_core::OdeError),
}

/// Extrapolated values of the metric data at `t = 1`.
#[derive(Debug, Clone)]
pub struct EndpointData {
    pub f1_end: f64,
    pub f1p_end: f64,
    pub f1pp_end: f64,
    /// Reported `h(1) = -f1'(1)`.
    pub h_end: f64,
    /// Independently extrapolated `h`; condition 2 measures the gap.
    pub h_extrap: f64,
    pub hp_end: f64,
    pub f2_end: f64,
    pub f2p_end: f64,
    /// Structural coefficient `z1 (1 + d1 z1)` extrapolated to `t = 1`;
    /// equals `d1 + 1` in the collapse limit.
    pub fitted_a_end: f64,
    /// `z1'(1) = b(1)/(1 + a(1))` from the fitted singular model.
    pub z1_prime_end: f64,
    /// Tail samples of z1 from the trajectory followed by the extension of
    /// the fitted model up to `t = 1`.
    pub z1_tail: Vec<(f64, f64)>,
}

impl EndpointData {
    /// Endpoint data given directly (no extension); useful for checking
    /// profiles whose endpoint behaviour is already known.
    pub fn from_values(
        f1: f64,
        f1p: f64,
        f1pp: f64,
        h: f64,
        hp: f64,
        f2: f64,
        f2p: f64,
    ) -> Self {
        Self {
            f1_end: f1,
            f1p_end: f1p,
            f1pp_end: f1pp,
            h_end: h,
            h_extrap: h,
            hp_end: hp,
            f2_end: f2,
            f2p_end: f2p,
            fitted_a_end: f64::NAN,
            z1_prime_end: f64::NAN,
            z1_tail: Vec::new(),
        }
    }
}

/// One smoothness condition with the measured value.
#[derive(Debug, Clone)]
pub struct RegularityCondition {
    pub name: &'static str,
    pub value: f64,
    pub pass: bool,
}

/// The six-condition report; `pass` iff every condition passed.
#[derive(Debug, Clone)]
pub struct RegularityReport {
    pub endpoint: EndpointData,
    pub conditions: Vec<RegularityCondition>,
    pub pass: bool,
}

impl RegularityReport {
    pub fn failing(&self) -> impl Iterator<Item = &RegularityCondition> {
        self.conditions.iter().filter(|c| !c.pass)
    }
}

/// Samples `(t, z1)` at checkpoints past `t = 0.9`, the collapse monitor's
/// informative range.
pub fn z1_diagnostic(traj: &Trajectory) -> Result<Vec<(f64, f64)>, RegularityError> {
    let tail: Vec<(f64, f64)> =
        traj.records.iter().filter(|r| r.t > 0.9).map(|r| (r.t, r.z1())).collect();
    if tail.is_empty() {
        return Err(RegularityError::TailTooShort {
            t_last: traj.end().t,
            needed: 0.9,
        });
    }
    Ok(tail)
}

/// Least-squares fit of `sum_k c_k (u/u_max)^{p_k}` and the value of the
/// regular part at `u = 0`, i.e. the coefficient of the zero power.
///
/// Negative powers act as guards: a trajectory that misses the collapse
/// separatrix by a parameter distance `e` carries contamination shaped like
/// `e^2/u^2` (first derivatives) or `e^2/u^3` (second derivatives) in its
/// tail samples, which a plain polynomial would fold into the constant
/// term. The guard column absorbs it instead; on clean data its
/// coefficient is just ~0.
fn extrapolate_basis(us: &[f64], vals: &[f64], powers: &[i32]) -> f64 {
    let m = powers.len();
    assert!(m <= 8);
    let u_max = us.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);

    // column norms for conditioning
    let mut col_scale = vec![0.0f64; m];
    for &u in us {
        let x = u / u_max;
        for (k, &p) in powers.iter().enumerate() {
            col_scale[k] = col_scale[k].max(x.powi(p).abs());
        }
    }
    for s in col_scale.iter_mut() {
        if *s == 0.0 {
            *s = 1.0;
        }
    }

    let mut ata = vec![0.0; m * m];
    let mut atb = vec![0.0; m];
    for (&u, &v) in us.iter().zip(vals.iter()) {
        let x = u / u_max;
        let mut row = [0.0; 8];
        for (k, &p) in powers.iter().enumerate() {
            row[k] = x.powi(p) / col_scale[k];
        }
        for i in 0..m {
            for j in 0..m {
                ata[i * m + j] += row[i] * row[j];
            }
            atb[i] += row[i] * v;
        }
    }
    solve_dense(&mut ata, &mut atb, m);
    let k0 = powers.iter().position(|&p| p == 0).expect("basis must contain the zero power");
    atb[k0] / col_scale[k0]
}

fn extrapolate_poly(us: &[f64], vals: &[f64], degree: usize) -> f64 {
    let powers: Vec<i32> = (0..=degree as i32).collect();
    extrapolate_basis(us, vals, &powers)
}

/// In-place Gaussian elimination with partial pivoting for small systems.
fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) {
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r * n + col].abs() > a[piv * n + col].abs() {
                piv = r;
            }
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        if d == 0.0 {
            continue;
        }
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[r * n + k] -= f * a[col * n + k];
            }
            b[r] -= f * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in col + 1..n {
            s -= a[col * n + k] * b[k];
        }
        let d = a[col * n + col];
        b[col] = if d != 0.0 { s / d } else { 0.0 };
    }
}

/// Extends a near-collapse trajectory to `t = 1` and reports the endpoint
/// data. `eps` is the span of the singular-model extension (default 1e-2).
pub fn asymptotic_extend(
    traj: &Trajectory,
    tensor: &PrescribedTensor,
    c1: f64,
    c2: f64,
    eps: f64,
) -> Result<EndpointData, RegularityError> {
    let last = traj.end();
    // Gate the collapse signature at the deepest checkpoint that is still a
    // decade above the noise-saturated zone (u >= 1e-3); past that depth a
    // refined-c1 trajectory may already sag off the separatrix without
    // invalidating the collapse.
    let gate = traj
        .records
        .iter()
        .filter(|r| r.t <= 1.0 - 1e-3)
        .next_back()
        .unwrap_or(last);
    let z1_end = gate.z1();
    if !(Z1_SIGNATURE.0..=Z1_SIGNATURE.1).contains(&z1_end) {
        return Err(RegularityError::NoCollapseSignature { z1_end });
    }
    if 1.0 - last.t > FIT_U_LO {
        return Err(RegularityError::TailTooShort { t_last: last.t, needed: 1.0 - FIT_U_LO });
    }

    // pointwise endpoint samples over the extrapolation window
    let mut us = Vec::new();
    let mut f1p = Vec::new();
    let mut f1pp = Vec::new();
    let mut hv = Vec::new();
    let mut hp = Vec::new();
    let mut y2v = Vec::new();
    let mut f2p = Vec::new();
    let mut f1v = Vec::new();
    for r in &traj.records {
        let u = 1.0 - r.t;
        if !(FIT_U_LO..=FIT_U_HI).contains(&u) {
            continue;
        }
        let rhs = rhs_reduced(r, tensor, c1, c2);
        let f1 = r.f1();
        us.push(u);
        f1v.push(f1);
        f1p.push(f1 * r.dy1);
        f1pp.push(f1 * (rhs[1] + r.dy1 * r.dy1));
        hv.push(r.h);
        hp.push(rhs[4]);
        y2v.push(r.y2);
        f2p.push(r.f2() * r.dy2);
    }
    if us.len() < 12 {
        return Err(RegularityError::TailTooShort { t_last: last.t, needed: 1.0 - FIT_U_LO });
    }

    let f1_end = extrapolate_poly(&us, &f1v, 5);
    let f1p_end = extrapolate_basis(&us, &f1p, &[-2, 0, 1, 2, 3, 4, 5]);
    let f1pp_end = extrapolate_basis(&us, &f1pp, &[-4, -3, 0, 1, 2, 3, 4, 5]);
    let h_extrap = extrapolate_basis(&us, &hv, &[-2, 0, 1, 2, 3, 4, 5]);
    let hp_end = extrapolate_basis(&us, &hp, &[-4, -3, 0, 1, 2, 3, 4, 5]);
    let f2_end = extrapolate_poly(&us, &y2v, 4).exp();
    let f2p_end = extrapolate_poly(&us, &f2p, 4);
    let h_end = -f1p_end;

    // z1 model fit over its own window, a(1) pinned at d1 + 1
    let d1 = tensor.d1 as f64;
    let mut zu = Vec::new();
    let mut za = Vec::new(); // regressor (z1 - 1)
    let mut zr = Vec::new(); // target minus the pinned part
    let mut z_data = Vec::new();
    let mut aemp = Vec::new();
    let mut sup_zp: f64 = 0.0;
    for r in &traj.records {
        let u = 1.0 - r.t;
        if !(Z1_FIT_U_LO..=Z1_FIT_U_HI).contains(&u) {
            continue;
        }
        let z1 = r.z1();
        // the affine model linearizes about the collapse value z1 = 1;
        // samples that have sagged off the plateau (noise-saturated deep
        // tail) are outside its regime
        if (z1 - 1.0).abs() > 0.25 {
            continue;
        }
        let rhs = rhs_reduced(r, tensor, c1, c2);
        let z1p = r.dy1 - u * rhs[1];
        sup_zp = sup_zp.max(z1p.abs());
        zu.push(u);
        za.push(z1 - 1.0);
        zr.push(z1p - (d1 + 1.0) * (z1 - 1.0) / u);
        z_data.push((r.t, z1));
        aemp.push(z1 * (1.0 + d1 * z1));
    }
    if zu.len() < 8 {
        return Err(RegularityError::TailTooShort { t_last: last.t, needed: 1.0 - Z1_FIT_U_LO });
    }
    // LSQ for (a1, b0, b1) in  r = a1 (z1-1) + b0 + b1 u
    let mut ata = vec![0.0; 9];
    let mut atb = vec![0.0; 3];
    for k in 0..zu.len() {
        let row = [za[k], 1.0, zu[k]];
        for i in 0..3 {
            for j in 0..3 {
                ata[i * 3 + j] += row[i] * row[j];
            }
            atb[i] += row[i] * zr[k];
        }
    }
    solve_dense(&mut ata, &mut atb, 3);
    let (a1, b0, b1) = (atb[0], atb[1], atb[2]);
    let mut ss = 0.0;
    for k in 0..zu.len() {
        let model = a1 * za[k] + b0 + b1 * zu[k];
        ss += (zr[k] - model) * (zr[k] - model);
    }
    let rms = (ss / zu.len() as f64).sqrt();
    let threshold = 0.05 * (1.0 + sup_zp);
    if rms > threshold {
        return Err(RegularityError::FitResidualTooLarge { rms, threshold });
    }

    let fitted_a_end = extrapolate_poly(&zu, &aemp, 2);

    // extend the fitted model to t = 1 with the singular solver
    let a_fn = move |t: f64| (d1 + 1.0) + a1 * (1.0 - t);
    let b_fn = move |t: f64| b0 + b1 * (1.0 - t);
    let ext = solve_singular_linear(&a_fn, &b_fn, 1.0, eps)?;
    let mut z1_tail = z_data;
    let t_last = traj.end().t;
    for (t, x) in ext.ts.iter().zip(ext.xs.iter()) {
        if *t > t_last {
            z1_tail.push((*t, *x));
        }
    }

    Ok(EndpointData {
        f1_end,
        f1p_end,
        f1pp_end,
        h_end,
        h_extrap,
        hp_end,
        f2_end,
        f2p_end,
        fitted_a_end,
        z1_prime_end: ext.x1_prime,
        z1_tail,
    })
}

/// The collapse solution near the singular orbit, integrated backward from
/// `t = 1` (forward in `u = 1 - t`).
///
/// Every transverse mode of the reduced flow is unstable approaching the
/// collapse and therefore stable in this direction, so the run is launched
/// at `u0 = 1e-8` from the leading expansion (`f1 = h_end u`, `y1' = -1/u`,
/// `f2' = 0`, `h = h_end`) and seed errors die like `(u0/u)^{d1+1}`. The
/// output is equation-true to integration accuracy, which makes it the
/// right data source for profile samples near the degenerate end where the
/// forward trajectory's noise is amplified.
#[derive(Debug, Clone)]
pub struct TailSolution {
    /// Ascending distances `u = 1 - t`.
    pub us: Vec<f64>,
    pub f1: Vec<f64>,
    pub h: Vec<f64>,
    pub f2: Vec<f64>,
}

pub fn collapse_tail(
    tensor: &PrescribedTensor,
    c1: f64,
    c2: f64,
    h_end: f64,
    f2_end: f64,
    us: &[f64],
) -> TailSolution {
    use crate::rk45::{self, StepControl};
    let u0 = 1e-8f64.min(us[0] / 2.0);
    let seed = [(h_end * u0).ln(), -1.0 / u0, f2_end.ln(), 0.0, h_end];
    // state derivatives with respect to v = u - u0 flip the sign of the
    // t-derivatives
    let f = move |v: f64, y: &[f64; 5]| {
        let t = 1.0 - (u0 + v);
        let s = crate::ode_core::ReducedState { t, y1: y[0], dy1: y[1], y2: y[2], dy2: y[3], h: y[4] };
        let d = rhs_reduced(&s, tensor, c1, c2);
        [-d[0], -d[1], -d[2], -d[3], -d[4]]
    };
    let cps: Vec<f64> = us.iter().map(|&u| u - u0).collect();
    let v_end = us[us.len() - 1] - u0;
    let control = StepControl { rel_tol: 1e-12, abs_tol: 1e-14, ..Default::default() };
    let out = rk45::integrate(&f, 0.0, seed, v_end, &cps, &control, &|_, _| Option::<()>::None);

    let mut sol = TailSolution { us: Vec::new(), f1: Vec::new(), h: Vec::new(), f2: Vec::new() };
    for (&v, y) in out.ts.iter().zip(out.ys.iter()).skip(1) {
        sol.us.push(u0 + v);
        sol.f1.push(y[0].exp());
        sol.h.push(y[4]);
        sol.f2.push(y[2].exp());
    }
    sol
}

/// Evaluates the six smoothness conditions against `tol` (equalities) and
/// `f1pp_tol * max(1, h(1)^2)` for the second-derivative condition.
pub fn check_smoothness_conditions(
    endpoint: &EndpointData,
    tol: f64,
    f1pp_tol: f64,
) -> RegularityReport {
    let scale = 1.0f64.max(endpoint.h_end * endpoint.h_end);
    let mut conditions = Vec::new();
    let mut push = |name: &'static str, value: f64, pass: bool| {
        conditions.push(RegularityCondition { name, value, pass });
    };

    push("f1_end_zero", endpoint.f1_end, endpoint.f1_end.abs() <= tol);
    let gap = endpoint.f1p_end + endpoint.h_extrap;
    push("f1p_end_matches_minus_h", gap, gap.abs() <= tol && endpoint.f1p_end < 0.0);
    push("hp_end_zero", endpoint.hp_end, endpoint.hp_end.abs() <= tol * scale);
    push("f1pp_end_zero", endpoint.f1pp_end, endpoint.f1pp_end.abs() <= f1pp_tol * scale);
    push("f2p_end_zero", endpoint.f2p_end, endpoint.f2p_end.abs() <= tol);
    push("f2_end_positive", endpoint.f2_end, endpoint.f2_end > 0.0);

    let pass = conditions.iter().all(|c| c.pass);
    RegularityReport { endpoint: endpoint.clone(), conditions, pass }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode_core::{
        integrate_reduced, IntegrationControls, ReducedState, ShootingParams, TerminationStatus,
    };
    use std::f64::consts::PI;

    fn round(d1: u32) -> PrescribedTensor {
        PrescribedTensor::round_product(d1, 2).unwrap()
    }

    /// Trajectory records computed from the closed-form solution, free of
    /// integration noise.
    fn synthetic_round_trajectory(d1: u32, t_end: f64) -> Trajectory {
        let _ = d1;
        let cps = crate::ode_core::default_checkpoints(t_end, 1024);
        let mut records = vec![ReducedState { t: 0.5, y1: 0.0, dy1: 0.0, y2: 0.0, dy2: 0.0, h: PI }];
        for &t in &cps {
            let u = 1.0 - t;
            let s = (PI * u).sin();
            let c = (PI * u).cos();
            records.push(ReducedState {
                t,
                y1: s.ln(),
                dy1: -PI * c / s,
                y2: 0.0,
                dy2: 0.0,
                h: PI,
            });
        }
        Trajectory { records, status: TerminationStatus::ReachedEnd { t_end } }
    }

    #[test]
    fn z1_diagnostic_tracks_the_collapse_monitor() {
        let traj = synthetic_round_trajectory(2, 1.0 - 1e-4);
        let tail = z1_diagnostic(&traj).unwrap();
        // z1(0.99) = -(0.01) pi cot(0.99 pi) = 0.99967...
        let (t99, z99) = tail
            .iter()
            .cloned()
            .min_by(|a, b| (a.0 - 0.99).abs().partial_cmp(&(b.0 - 0.99).abs()).unwrap())
            .unwrap();
        assert!((t99 - 0.99).abs() < 1e-9);
        assert!((z99 - 0.99967).abs() < 5e-5, "z1(0.99) = {z99}");
        // at the reflection point z1 is zero by evenness
        assert_eq!(traj.records[0].z1(), 0.0);

        let short = Trajectory {
            records: traj.records.iter().filter(|r| r.t < 0.8).cloned().collect(),
            status: traj.status.clone(),
        };
        assert!(matches!(z1_diagnostic(&short), Err(RegularityError::TailTooShort { .. })));
    }

    #[test]
    fn extends_exact_data_to_the_endpoint() {
        let d1 = 2;
        let tensor = round(d1);
        let c = d1 as f64 * PI * PI;
        let traj = synthetic_round_trajectory(d1, 1.0 - 1e-4);
        let e = asymptotic_extend(&traj, &tensor, c, c, 1e-2).unwrap();
        assert!((e.f1_end).abs() < 1e-6, "f1(1) = {}", e.f1_end);
        assert!((e.f1p_end + PI).abs() < 1e-6, "f1'(1) = {}", e.f1p_end);
        assert!(e.f1pp_end.abs() < 1e-6, "f1''(1) = {}", e.f1pp_end);
        assert!((e.h_end - PI).abs() < 1e-6);
        assert!((e.h_extrap - PI).abs() < 1e-6);
        assert!(e.hp_end.abs() < 1e-6);
        assert!((e.f2_end - 1.0).abs() < 1e-9);
        assert!(e.f2p_end.abs() < 1e-9);
        // coefficient anchor from the structural value z1 (1 + d1 z1)
        assert!((e.fitted_a_end - (d1 as f64 + 1.0)).abs() < 0.05, "a(1) = {}", e.fitted_a_end);
        // extension reaches t = 1 with z1 -> 1
        let (t_last, z_last) = *e.z1_tail.last().unwrap();
        assert_eq!(t_last, 1.0);
        assert!((z_last - 1.0).abs() < 1e-12);

        let rep = check_smoothness_conditions(&e, 1e-3, 1e-4);
        assert!(rep.pass, "{:?}", rep.failing().collect::<Vec<_>>());
    }

    /// Last c1 in [lo, hi] whose trajectory still reaches t_end (the
    /// collapse side blows up through the z1 monitor first). The exact
    /// critical value is a separatrix, so diagnostics must run at the
    /// numerical critical point the way the solvers do.
    fn refine_critical_c1(
        tensor: &PrescribedTensor,
        c2: f64,
        mut lo: f64,
        mut hi: f64,
        t_end: f64,
    ) -> f64 {
        let ctl = IntegrationControls::reporting(t_end);
        // below the critical value z1 runs away upward, so classify on the
        // monitor band rather than the hard z1 > 10 stop: the returned
        // trajectory then hugs the collapse plateau instead of ending
        // mid-runaway
        let feasible = |c1: f64| {
            let p = ShootingParams { c1, c2, gamma: 1.0, a: 1.0, s_cap: 1.5 };
            integrate_reduced(&p, tensor, t_end, &ctl)
                .map(|tr| tr.reached_end() && tr.max_z1() <= 1.2)
                .unwrap_or(false)
        };
        assert!(!feasible(lo) && feasible(hi));
        while hi - lo > 1e-12 * hi {
            let mid = 0.5 * (lo + hi);
            if feasible(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// d1 = 4 is excluded here: the reduced flow's separatrix deviation
    /// grows like (u0/u)^{d1+1}, and at that exponent f64 integration noise
    /// saturates above u = 1e-3 no matter how c1 is tuned. The constant-T2
    /// pipeline produces d1 = 4 solutions through the l-equation instead,
    /// whose deviation exponent is 1; its tests cover that case.
    #[test]
    fn integrated_round_trajectories_collapse_for_small_dimensions() {
        for d1 in [2u32, 3] {
            let tensor = round(d1);
            let c = d1 as f64 * PI * PI;
            let t_end = 1.0 - 1e-4;
            let c1 = refine_critical_c1(&tensor, c, c * (1.0 - 1e-3), c * (1.0 + 1e-3), t_end);
            assert!((c1 - c).abs() <= 1e-4 * c, "d1 = {d1}: c1 = {c1} vs {c}");
            let p = ShootingParams { c1, c2: c, gamma: 1.0, a: 1.0, s_cap: 1.5 };
            let traj =
                integrate_reduced(&p, &tensor, t_end, &IntegrationControls::reporting(t_end))
                    .unwrap();
            assert!(traj.reached_end(), "d1 = {d1}");
            // z1(1 - 1e-3) within 5e-3 of 1
            let r = traj
                .records
                .iter()
                .min_by(|a, b| {
                    (a.t - (1.0 - 1e-3)).abs().partial_cmp(&(b.t - (1.0 - 1e-3)).abs()).unwrap()
                })
                .unwrap();
            assert!((r.t - (1.0 - 1e-3)).abs() < 1e-12);
            assert!((r.z1() - 1.0).abs() <= 5e-3, "d1 = {d1}: z1 = {}", r.z1());

            let e = asymptotic_extend(&traj, &tensor, c1, c, 1e-2).unwrap();
            let rep = check_smoothness_conditions(&e, 1e-3, 1e-4);
            assert!(rep.pass, "d1 = {d1}: {:?}", rep.failing().collect::<Vec<_>>());
        }
    }

    #[test]
    fn no_collapse_signature_is_rejected() {
        let tensor = round(2);
        // c1 well above critical: trajectory reaches the end without collapse
        let p = ShootingParams {
            c1: 3.0 * PI * PI,
            c2: 2.0 * PI * PI,
            gamma: 1.0,
            a: 1.0,
            s_cap: 2.0,
        };
        let t_end = 1.0 - 1e-4;
        let traj =
            integrate_reduced(&p, &tensor, t_end, &IntegrationControls::for_t_end(t_end)).unwrap();
        assert!(matches!(
            asymptotic_extend(&traj, &tensor, p.c1, p.c2, 1e-2),
            Err(RegularityError::NoCollapseSignature { .. })
        ));
        // its z1 tail stays near zero: bounded dy1 at the tail
        let tail = z1_diagnostic(&traj).unwrap();
        assert!(tail.last().unwrap().1 < 0.5);
    }

    #[test]
    fn handmade_endpoint_failures_are_named() {
        // f1 = (1-t)^2: f1'(1) = 0, h = 1 -> condition 2 fails
        let e = EndpointData::from_values(0.0, 0.0, 2.0, 1.0, 0.0, 1.0, 0.0);
        let rep = check_smoothness_conditions(&e, 1e-3, 1e-4);
        assert!(!rep.pass);
        assert!(rep.failing().any(|c| c.name == "f1p_end_matches_minus_h"));

        // f2 = 1 + (1-t): f2'(1) = -1 -> condition 5 fails
        let e = EndpointData::from_values(0.0, -1.0, 0.0, 1.0, 0.0, 2.0, -1.0);
        let rep = check_smoothness_conditions(&e, 1e-3, 1e-4);
        assert!(!rep.pass);
        assert!(rep.failing().any(|c| c.name == "f2p_end_zero"));
        // a failing report names at least one condition with its value
        assert!(rep.failing().count() >= 1);
    }
}
