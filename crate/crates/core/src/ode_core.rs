//! The Bianchi-reduced first order system in the log variables
//! `y_i = ln f_i`, integrated from the reflection point `t = 1/2` toward the
//! singular orbit at `t = 1`, plus the singular linear ODE solver used to
//! step off `t = 1`.
//!
//! State is `(y1, y1', y2, y2', h)` with
//!
//! ```text
//! y1'' = h^2 [ (d1-1-c1 T1) e^{-2y1} - y1' D + beta (d2/d1) e^{2y1-4y2} ]
//! y2'' = h^2 [ (alpha-c2 T2) e^{-2y2} - y2' D - 2 beta e^{2y1-4y2} ]
//! h'   = -h^3 D + h (d1 y1' + d2 y2')
//! D    = (d1/2) T1' e^{-2y1} + (d2 c2 / 2 c1) T2' e^{-2y2}
//! ```
//!
//! and the auxiliary algebraic identity
//! `h^2 = (tr(y')^2 - tr(y'^2) - c1) / (d1 (d1-1-c1 T1) e^{-2y1} + d2 (alpha-c2 T2) e^{-2y2} - d2 beta e^{2y1-4y2})`
//! which degenerates (0/0) on Einstein-like solutions, so `h` is carried as
//! a state variable and the identity only serves as a cross-check.
//!
//! Blow-up is watched through the scaled monitor `|y1'| (1-t)`: collapse at
//! the singular orbit drives it to 1, so a threshold of 10 separates the
//! runaway branch from genuine solutions without tripping on them.

use crate::rk45::{self, StepControl, StopReason};
use crate::tensor::{PrescribedTensor, HALF};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("initial h: denominator {denominator} is not negative (parameters outside the feasible shooting set)")]
    NonNegativeDenominator { denominator: f64 },
    #[error("algebraic h^2 denominator {denominator} is degenerate; fall back to the integrated h")]
    DegenerateDenominator { denominator: f64 },
    #[error("blow-up event already active at t = 1/2: {what}")]
    ImmediateEventAtStart { what: String },
    #[error("singular ODE coefficient a(1) = {a_end} must be positive")]
    NonPositiveA { a_end: f64 },
    #[error("invalid shooting parameter: {0}")]
    BadParams(String),
}

/// Shooting parameters: the scaling constants and the free initial data
/// `a = e^{-2 y1(1/2)}`, `gamma = e^{-2 y2(1/2)}`, with `S` the prescribed
/// level of `sup (e^{-2 y2} + (y2')^2)`.
#[derive(Debug, Clone, Copy)]
pub struct ShootingParams {
    pub c1: f64,
    pub c2: f64,
    pub gamma: f64,
    pub a: f64,
    pub s_cap: f64,
}

/// Snapshot of the reduced state at one time.
#[derive(Debug, Clone, Copy)]
pub struct ReducedState {
    pub t: f64,
    pub y1: f64,
    pub dy1: f64,
    pub y2: f64,
    pub dy2: f64,
    pub h: f64,
}

impl ReducedState {
    pub fn v1(&self) -> f64 {
        self.h.ln() - self.y1
    }
    pub fn v2(&self) -> f64 {
        self.h.ln() - self.y2
    }
    pub fn f1(&self) -> f64 {
        self.y1.exp()
    }
    pub fn f2(&self) -> f64 {
        self.y2.exp()
    }
    /// Collapse monitor `z1 = -(1-t) y1'`.
    pub fn z1(&self) -> f64 {
        -(1.0 - self.t) * self.dy1
    }
    /// The constrained quantity `e^{-2 y2} + (y2')^2`.
    pub fn sup_quantity(&self) -> f64 {
        (-2.0 * self.y2).exp() + self.dy2 * self.dy2
    }
}

/// Which monitor stopped an integration early.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlowUpTag {
    /// `|y1'| (1-t)` exceeded the threshold.
    Dy1Scaled,
    /// `h` exceeded `h_max`.
    HExceeded,
    /// A state component stopped being finite.
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TerminationStatus {
    ReachedEnd { t_end: f64 },
    BlowUp { t_stop: f64, tag: BlowUpTag },
    DomainError { t_stop: f64, reason: String },
}

/// Dense-output record of one integration run, strictly increasing in `t`
/// and starting at `t = 1/2`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<ReducedState>,
    pub status: TerminationStatus,
}

impl Trajectory {
    pub fn end(&self) -> &ReducedState {
        self.records.last().unwrap()
    }

    pub fn reached_end(&self) -> bool {
        matches!(self.status, TerminationStatus::ReachedEnd { .. })
    }

    /// Largest `y1'` and `y2'` over the records (monotone solutions keep
    /// both at or below zero).
    pub fn max_dy(&self) -> (f64, f64) {
        let mut m1 = f64::NEG_INFINITY;
        let mut m2 = f64::NEG_INFINITY;
        for r in &self.records {
            m1 = m1.max(r.dy1);
            m2 = m2.max(r.dy2);
        }
        (m1, m2)
    }

    pub fn max_z1(&self) -> f64 {
        self.records.iter().map(|r| r.z1()).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Realized `sup (e^{-2 y2} + (y2')^2)` over the records.
    pub fn sup_constraint(&self) -> f64 {
        self.records.iter().map(|r| r.sup_quantity()).fold(f64::NEG_INFINITY, f64::max)
    }

    /// CSV dump at the checkpoints, header `t,y1,dy1,y2,dy2,h`.
    pub fn csv(&self) -> String {
        let mut out = String::from("t,y1,dy1,y2,dy2,h\n");
        for r in &self.records {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                r.t, r.y1, r.dy1, r.y2, r.dy2, r.h
            ));
        }
        out
    }
}

/// Integration knobs; `checkpoints` must be strictly increasing in
/// `(1/2, t_end]`.
#[derive(Debug, Clone)]
pub struct IntegrationControls {
    pub step: StepControl,
    pub checkpoints: Vec<f64>,
    /// Threshold on `|y1'| (1-t)`.
    pub blowup_z: f64,
    pub h_max: f64,
}

impl IntegrationControls {
    pub fn for_t_end(t_end: f64) -> Self {
        Self {
            step: StepControl::default(),
            checkpoints: default_checkpoints(t_end, 1024),
            blowup_z: 10.0,
            h_max: 1e8,
        }
    }

    /// Tight-tolerance variant for final reporting runs. Near-critical
    /// trajectories ride a separatrix where injected noise grows like
    /// (u0/u)^{d1+1}; the extra two digits keep the tail diagnostics clean.
    pub fn reporting(t_end: f64) -> Self {
        let mut c = Self::for_t_end(t_end);
        c.step.rel_tol = 1e-12;
        c.step.abs_tol = 1e-14;
        c
    }
}

/// Uniform checkpoints on `[1/2, t_end]` plus a geometric tail refinement
/// toward `t = 1` (the regularity fits need resolved samples there).
pub fn default_checkpoints(t_end: f64, n_uniform: usize) -> Vec<f64> {
    let mut cps: Vec<f64> = (1..=n_uniform)
        .map(|i| HALF + (t_end - HALF) * i as f64 / n_uniform as f64)
        .collect();
    // log-spaced points 1 - 10^{-e} on a fixed ladder e = 2, 2+1/16, ...,
    // from 1e-2 down to 1-t_end; the ladder hits the round exponents
    // (1e-3, 1e-4, ...) exactly, which the diagnostics sample
    let u_end = 1.0 - t_end;
    let mut k = 0u32;
    loop {
        let e = 2.0 + k as f64 / 16.0;
        if e > 15.5 {
            break;
        }
        let u = 10f64.powf(-e);
        if u <= u_end * (1.0 + 1e-9) {
            break;
        }
        let t = 1.0 - u;
        if t < t_end {
            cps.push(t);
        }
        k += 1;
    }
    cps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cps.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    cps
}

/// Initial `h(1/2) = sqrt(-c1 / (d1 a (d1-1-c1 T1(1/2)) + d2 gamma (alpha - c2 T2(1/2))))`.
pub fn initial_h(p: &ShootingParams, tensor: &PrescribedTensor) -> Result<f64, OdeError> {
    if !(p.a > 0.0 && p.gamma > 0.0) {
        return Err(OdeError::BadParams(format!("a = {}, gamma = {} must be positive", p.a, p.gamma)));
    }
    let d1 = tensor.d1 as f64;
    let d2 = tensor.d2 as f64;
    let denom = d1 * p.a * (d1 - 1.0 - p.c1 * tensor.t1_value(HALF))
        + d2 * p.gamma * (tensor.alpha - p.c2 * tensor.t2_value(HALF));
    if !(denom < 0.0) {
        return Err(OdeError::NonNegativeDenominator { denominator: denom });
    }
    Ok((-p.c1 / denom).sqrt())
}

/// Right-hand side of the reduced system: derivatives of
/// `(y1, y1', y2, y2', h)`. Accepts `beta >= 0` (the solvers require 0).
pub fn rhs_reduced(s: &ReducedState, tensor: &PrescribedTensor, c1: f64, c2: f64) -> [f64; 5] {
    let d1 = tensor.d1 as f64;
    let d2 = tensor.d2 as f64;
    let t1 = tensor.t1_value(s.t);
    let t2 = tensor.t2_value(s.t);
    let t1p = tensor.t1_d1(s.t);
    let t2p = tensor.t2_d1(s.t);
    let e1 = (-2.0 * s.y1).exp();
    let e2 = (-2.0 * s.y2).exp();
    let bterm = if tensor.beta != 0.0 { tensor.beta * (2.0 * s.y1 - 4.0 * s.y2).exp() } else { 0.0 };

    let dcoef = 0.5 * d1 * t1p * e1 + 0.5 * d2 * c2 / c1 * t2p * e2;
    let h2 = s.h * s.h;
    let ddy1 = h2 * ((d1 - 1.0 - c1 * t1) * e1 - s.dy1 * dcoef + d2 / d1 * bterm);
    let ddy2 = h2 * ((tensor.alpha - c2 * t2) * e2 - s.dy2 * dcoef - 2.0 * bterm);
    let dh = -h2 * s.h * dcoef + s.h * (d1 * s.dy1 + d2 * s.dy2);
    [s.dy1, ddy1, s.dy2, ddy2, dh]
}

/// The algebraic `h^2` from the conserved Bianchi quantity. Errors with
/// [`OdeError::DegenerateDenominator`] when the denominator loses all
/// significance against its constituent terms.
pub fn h_algebraic(s: &ReducedState, tensor: &PrescribedTensor, c1: f64, c2: f64) -> Result<f64, OdeError> {
    let d1 = tensor.d1 as f64;
    let d2 = tensor.d2 as f64;
    let e1 = (-2.0 * s.y1).exp();
    let e2 = (-2.0 * s.y2).exp();
    let t1 = tensor.t1_value(s.t);
    let t2 = tensor.t2_value(s.t);
    let term1 = d1 * (d1 - 1.0 - c1 * t1) * e1;
    let term2 = d2 * (tensor.alpha - c2 * t2) * e2;
    let term3 = if tensor.beta != 0.0 { d2 * tensor.beta * (2.0 * s.y1 - 4.0 * s.y2).exp() } else { 0.0 };
    let den = term1 + term2 - term3;
    // degeneracy is judged against the magnitudes entering the terms, since
    // the cancellation can happen inside a single term (d1-1 - c1 T1 -> 0)
    let scale = d1 * (d1 - 1.0 + (c1 * t1).abs()) * e1
        + d2 * (tensor.alpha + (c2 * t2).abs()) * e2
        + term3.abs();
    if den.abs() <= 1e-7 * scale || scale == 0.0 {
        return Err(OdeError::DegenerateDenominator { denominator: den });
    }
    let tr_dy = d1 * s.dy1 + d2 * s.dy2;
    let tr_dy2 = d1 * s.dy1 * s.dy1 + d2 * s.dy2 * s.dy2;
    Ok((tr_dy * tr_dy - tr_dy2 - c1) / den)
}

/// Integrates the reduced system from `t = 1/2` with the even initial data
/// `y1 = -ln(a)/2`, `y2 = -ln(gamma)/2`, `y1' = y2' = 0`, `h = I(a, gamma, c1, c2)`.
pub fn integrate_reduced(
    p: &ShootingParams,
    tensor: &PrescribedTensor,
    t_end: f64,
    controls: &IntegrationControls,
) -> Result<Trajectory, OdeError> {
    let h0 = initial_h(p, tensor)?;
    let y0 = [-0.5 * p.a.ln(), 0.0, -0.5 * p.gamma.ln(), 0.0, h0];

    let blowup_z = controls.blowup_z;
    let h_max = controls.h_max;
    let event = move |t: f64, y: &[f64; 5]| -> Option<BlowUpTag> {
        if y.iter().any(|v| !v.is_finite()) {
            return Some(BlowUpTag::NonFinite);
        }
        if y[1].abs() * (1.0 - t) > blowup_z {
            return Some(BlowUpTag::Dy1Scaled);
        }
        if y[4] > h_max {
            return Some(BlowUpTag::HExceeded);
        }
        None
    };
    if let Some(tag) = event(HALF, &y0) {
        return Err(OdeError::ImmediateEventAtStart { what: format!("{tag:?}") });
    }

    let c1 = p.c1;
    let c2 = p.c2;
    let f = move |t: f64, y: &[f64; 5]| {
        let s = ReducedState { t, y1: y[0], dy1: y[1], y2: y[2], dy2: y[3], h: y[4] };
        rhs_reduced(&s, tensor, c1, c2)
    };

    let out = rk45::integrate(&f, HALF, y0, t_end, &controls.checkpoints, &controls.step, &event);
    let records: Vec<ReducedState> = out
        .ts
        .iter()
        .zip(out.ys.iter())
        .map(|(&t, y)| ReducedState { t, y1: y[0], dy1: y[1], y2: y[2], dy2: y[3], h: y[4] })
        .collect();
    let (t_last, _) = out.last();
    let status = match out.reason {
        StopReason::Completed => TerminationStatus::ReachedEnd { t_end: t_last },
        StopReason::Event(tag) => TerminationStatus::BlowUp { t_stop: t_last, tag },
        StopReason::StepUnderflow { t } => {
            TerminationStatus::DomainError { t_stop: t, reason: "step size underflow".into() }
        }
        StopReason::StepBudgetExhausted { t } => {
            TerminationStatus::DomainError { t_stop: t, reason: "step budget exhausted".into() }
        }
    };
    Ok(Trajectory { records, status })
}

/// Solution of the singular linear problem on `[1 - eps, 1]`.
#[derive(Debug, Clone)]
pub struct SingularSolution {
    /// Ascending grid ending exactly at `t = 1`.
    pub ts: Vec<f64>,
    pub xs: Vec<f64>,
    /// Endpoint derivative `x'(1) = b(1) / (1 + a(1))`.
    pub x1_prime: f64,
}

/// Solves `x'(t) = a(t) (x - c)/(1 - t) + b(t)` for the unique solution
/// continuous at `t = 1` with `x(1) = c`, given `a(1) > 0`.
///
/// The endpoint derivative is `b(1)/(1 + a(1))`; one explicit Taylor step of
/// size `eps/100` moves off the singular point, after which the adaptive
/// integrator runs backward (in `u = 1 - t` the error contracts, so the
/// stepping direction is stable).
pub fn solve_singular_linear(
    a_fn: &dyn Fn(f64) -> f64,
    b_fn: &dyn Fn(f64) -> f64,
    c: f64,
    eps: f64,
) -> Result<SingularSolution, OdeError> {
    let a_end = a_fn(1.0);
    if !(a_end > 0.0) {
        return Err(OdeError::NonPositiveA { a_end });
    }
    let x1_prime = b_fn(1.0) / (1.0 + a_end);

    let u0 = eps / 100.0;
    let x_at_u0 = c - x1_prime * u0;

    // dx/du = -x'(t) with t = 1 - u
    let f = move |u: f64, y: &[f64; 1]| {
        let t = 1.0 - u;
        [-(a_fn(t) * (y[0] - c) / u + b_fn(t))]
    };
    let n_cp = 48;
    let cps: Vec<f64> = (1..=n_cp).map(|k| u0 * (eps / u0).powf(k as f64 / n_cp as f64)).collect();
    let control = StepControl { max_step: eps / 10.0, ..Default::default() };
    let out = rk45::integrate(&f, u0, [x_at_u0], eps, &cps, &control, &|_, _| Option::<()>::None);

    let mut ts: Vec<f64> = out.ts.iter().map(|&u| 1.0 - u).collect();
    let mut xs: Vec<f64> = out.ys.iter().map(|y| y[0]).collect();
    ts.reverse();
    xs.reverse();
    ts.push(1.0);
    xs.push(c);
    Ok(SingularSolution { ts, xs, x1_prime })
}
