//! The non-constant-T2 pipeline: two-parameter shooting in `(c2, gamma)`
//! at fixed `c1`, then numerical continuation decreasing `c1` toward the
//! critical value where the trajectory develops the collapse signature.
//!
//! At fixed `c1` the boundary problem asks for `(c2, gamma)` such that the
//! trajectory launched with the even initial data satisfies
//!
//! * `y2'(t_end) = 0` (smoothness of `f2` at the singular orbit), and
//! * `sup_t (e^{-2 y2} + (y2')^2) = S` (the prescribed constraint level),
//!
//! solved by a damped Newton iteration with a central-difference Jacobian,
//! the iterates projected onto the box
//! `(alpha/sup T2, alpha/inf T2) x (0, S]`. The canonical initial guess is
//! `c2 = alpha / (2 INT T2)`, `gamma = S` (the unique zero of the
//! undeformed problem), which is already exact when `T2` is constant.
//!
//! Continuation lowers `c1` with adaptive steps and warm starts; once the
//! steps are small the warm start is inside Newton tolerance anyway, so the
//! final bracketing runs with frozen `(c2, gamma)` and classifies each
//! probe purely by whether the trajectory still reaches the far end inside
//! the collapse monitor band `z1 <= 1.2`. The returned estimate is the
//! bracket midpoint, and the terminal solution is assembled by mirroring,
//! blending the near-end samples against the backward-integrated collapse
//! tail, and running the oracle and the smoothness report.

use crate::ode_core::{
    integrate_reduced, IntegrationControls, OdeError, ShootingParams, Trajectory,
};
use crate::regularity::{
    asymptotic_extend, check_smoothness_conditions, collapse_tail, RegularityError,
};
use crate::ricci_oracle::{ricci_residuals, MetricProfile, OracleError};
use crate::rk45::StepControl;
use crate::solution::{smooth_even_endpoint, ContinuationLog, ContinuationRecord, ScalingSolution};
use crate::tensor::{PrescribedTensor, HALF};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeneralError {
    #[error("tensor fails validation: {failing:?}")]
    ValidationFailed { failing: Vec<String> },
    #[error("the shooting solver requires beta = 0, got {0}")]
    BetaNonzero(f64),
    #[error("c1 = {c1} is not above the feasibility bound {bound}")]
    PreconditionC1 { c1: f64, bound: f64 },
    #[error("infeasible initial h: {0}")]
    InfeasibleInitialH(#[from] OdeError),
    #[error("inner solve did not converge after {iters} iterations (best residuals {res_bc:.3e}, {res_sup:.3e})")]
    NoConvergence { iters: usize, res_bc: f64, res_sup: f64 },
    #[error("no starting c1 found: inner solve failed up to c1 = {c1_last}")]
    StartFailed { c1_last: f64 },
    #[error("c1 bracket collapsed without a degeneration signature (z1 at the gate = {z1_end})")]
    StallWithoutBlowup { z1_end: f64 },
    #[error(transparent)]
    Regularity(#[from] RegularityError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Boundary residuals of one shot: `res_bc = y2'` at the trajectory end and
/// `res_sup = sup (e^{-2 y2} + (y2')^2) - S` over the checkpoints.
#[derive(Debug, Clone)]
pub struct ShootingResiduals {
    pub res_bc: f64,
    pub res_sup: f64,
    pub end_t: f64,
    pub status: crate::ode_core::TerminationStatus,
}

/// Solver knobs with the defaults the CLI exposes.
#[derive(Debug, Clone)]
pub struct GeneralOptions {
    /// End of the shooting interval for inner solves.
    pub t_end: f64,
    /// End of the interval for frozen-parameter endgame probes.
    pub endgame_t_end: f64,
    /// Residual tolerance of the inner Newton iteration.
    pub newton_tol: f64,
    pub newton_max_iters: usize,
    /// Relative step of the central-difference Jacobian.
    pub fd_step_rel: f64,
    /// Below this step width the continuation freezes `(c2, gamma)`.
    pub freeze_step: f64,
    /// Continuation terminates when the c1 step falls below this (relative
    /// to the starting value).
    pub c1_step_tol: f64,
    /// Integration controls for inner solves.
    pub step: StepControl,
    pub checkpoints_n: usize,
    pub grid_n_half: usize,
    pub oracle_window: (f64, f64),
    pub regularity_tol: f64,
    pub f1pp_tol: f64,
}

impl Default for GeneralOptions {
    fn default() -> Self {
        Self {
            t_end: 1.0 - 1e-4,
            endgame_t_end: 1.0 - 1e-6,
            newton_tol: 1e-7,
            newton_max_iters: 50,
            fd_step_rel: 1e-6,
            freeze_step: 1e-5,
            c1_step_tol: 1e-12,
            step: StepControl::default(),
            checkpoints_n: 1024,
            grid_n_half: 1025,
            oracle_window: (1e-3, 1.0 - 1e-3),
            regularity_tol: 1e-3,
            f1pp_tol: 1e-4,
        }
    }
}

fn controls(t_end: f64, n: usize, step: &StepControl) -> IntegrationControls {
    let mut c = IntegrationControls::for_t_end(t_end);
    c.checkpoints = crate::ode_core::default_checkpoints(t_end, n);
    c.step = step.clone();
    c
}

/// One shot of the reduced system with its boundary residuals. Blow-ups are
/// not errors: the residuals are evaluated at the last recorded checkpoint
/// so the root finder can still steer.
pub fn shoot(
    p: &ShootingParams,
    tensor: &PrescribedTensor,
    t_end: f64,
    ctl: &IntegrationControls,
) -> Result<(Trajectory, ShootingResiduals), GeneralError> {
    let traj = integrate_reduced(p, tensor, t_end, ctl)?;
    let end = traj.end();
    let res = ShootingResiduals {
        res_bc: end.dy2,
        res_sup: traj.sup_constraint() - p.s_cap,
        end_t: end.t,
        status: traj.status.clone(),
    };
    Ok((traj, res))
}

/// Converged inner solution at one `c1`.
#[derive(Debug, Clone)]
pub struct InnerSolution {
    pub c1: f64,
    pub c2: f64,
    pub gamma: f64,
    pub trajectory: Trajectory,
    pub res_bc: f64,
    pub res_sup: f64,
    pub iterations: usize,
}

/// The `(c2, gamma)` box; a degenerate window (constant T2) is widened for
/// projection purposes only.
fn c2_box(tensor: &PrescribedTensor) -> (f64, f64) {
    let (sup, inf) = tensor.t2_range(256);
    let lo = tensor.alpha / sup;
    let hi = tensor.alpha / inf;
    if hi - lo < 1e-9 * hi {
        (0.5 * lo, 1.5 * hi)
    } else {
        (lo, hi)
    }
}

/// Damped Newton on `(c2, gamma)` driving `(res_bc, res_sup)` to zero at
/// fixed `c1`, warm-startable.
pub fn solve_inner(
    c1: f64,
    a: f64,
    s_cap: f64,
    tensor: &PrescribedTensor,
    warm: Option<(f64, f64)>,
    opts: &GeneralOptions,
) -> Result<InnerSolution, GeneralError> {
    let bound = tensor.c1_lower_bound();
    if !(c1 > bound) {
        return Err(GeneralError::PreconditionC1 { c1, bound });
    }
    let (c2_lo, c2_hi) = c2_box(tensor);
    let (mut c2, mut gamma) =
        warm.unwrap_or_else(|| (tensor.alpha / (2.0 * tensor.t2_integral()), s_cap));
    c2 = c2.clamp(c2_lo, c2_hi);
    gamma = gamma.clamp(1e-12 * s_cap, s_cap);

    let ctl = controls(opts.t_end, opts.checkpoints_n, &opts.step);
    let eval = |c2: f64, gamma: f64| -> Result<(Trajectory, [f64; 2]), GeneralError> {
        let p = ShootingParams { c1, c2, gamma, a, s_cap };
        let (traj, res) = shoot(&p, tensor, opts.t_end, &ctl)?;
        Ok((traj, [res.res_bc, res.res_sup]))
    };

    let norm = |r: &[f64; 2]| r[0].abs().max(r[1].abs());
    let tol = opts.newton_tol * (1.0 + s_cap);

    let (mut traj, mut res) = eval(c2, gamma)?;
    let mut iters = 0;
    while norm(&res) > tol {
        if iters >= opts.newton_max_iters {
            return Err(GeneralError::NoConvergence { iters, res_bc: res[0], res_sup: res[1] });
        }
        iters += 1;

        // central-difference Jacobian, one-sided when a probe fails
        let dc2 = opts.fd_step_rel * c2.abs().max(1e-3 * (c2_hi - c2_lo));
        let dg = opts.fd_step_rel * gamma.abs().max(1e-6 * s_cap);
        let col =
            |lo_v: [f64; 2], hi_v: [f64; 2], h: f64| [(hi_v[0] - lo_v[0]) / h, (hi_v[1] - lo_v[1]) / h];
        let j_c2 = match (eval(c2 + dc2, gamma), eval(c2 - dc2, gamma)) {
            (Ok((_, rh)), Ok((_, rl))) => col(rl, rh, 2.0 * dc2),
            (Ok((_, rh)), Err(_)) => col(res, rh, dc2),
            (Err(_), Ok((_, rl))) => col(rl, res, dc2),
            (Err(e), Err(_)) => return Err(e),
        };
        let j_g = match (eval(c2, gamma + dg), eval(c2, gamma - dg)) {
            (Ok((_, rh)), Ok((_, rl))) => col(rl, rh, 2.0 * dg),
            (Ok((_, rh)), Err(_)) => col(res, rh, dg),
            (Err(_), Ok((_, rl))) => col(rl, res, dg),
            (Err(e), Err(_)) => return Err(e),
        };

        let det = j_c2[0] * j_g[1] - j_c2[1] * j_g[0];
        let scale = j_c2[0].abs().max(j_g[1].abs()).max(j_c2[1].abs()).max(j_g[0].abs());
        if det.abs() <= 1e-14 * scale * scale {
            return Err(GeneralError::NoConvergence { iters, res_bc: res[0], res_sup: res[1] });
        }
        let step_c2 = -(res[0] * j_g[1] - res[1] * j_g[0]) / det;
        let step_g = -(j_c2[0] * res[1] - j_c2[1] * res[0]) / det;

        // backtracking with projection onto the box
        let mut advanced = false;
        let mut lambda = 1.0;
        for _ in 0..8 {
            let c2_new = (c2 + lambda * step_c2).clamp(c2_lo, c2_hi);
            let g_new = (gamma + lambda * step_g).clamp(1e-12 * s_cap, s_cap);
            if let Ok((t_new, r_new)) = eval(c2_new, g_new) {
                if norm(&r_new) < norm(&res) {
                    c2 = c2_new;
                    gamma = g_new;
                    traj = t_new;
                    res = r_new;
                    advanced = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !advanced {
            return Err(GeneralError::NoConvergence { iters, res_bc: res[0], res_sup: res[1] });
        }
    }

    Ok(InnerSolution {
        c1,
        c2,
        gamma,
        trajectory: traj,
        res_bc: res[0],
        res_sup: res[1],
        iterations: iters,
    })
}

/// Monotonicity and growth monitors every accepted trajectory must satisfy
/// on `t <= 1 - 1e-3`: `y1' <= 0`, `y2' <= 0`, the trace combination
/// negative past the start, and the scaled growth bound
/// `-(1-t) y1' <= 1.5`. The last millimeter is excluded: there `y2'` equals
/// the boundary residual by construction (it is what the shooting drives to
/// zero), so checking it against 1e-10 would only re-measure the Newton
/// tolerance.
pub fn monitor_violation(traj: &Trajectory, tensor: &PrescribedTensor) -> Option<String> {
    let d1 = tensor.d1 as f64;
    let d2 = tensor.d2 as f64;
    for r in &traj.records {
        if r.t > 1.0 - 1e-3 {
            continue;
        }
        if r.dy1 > 1e-10 {
            return Some(format!("y1' reached {:.3e} > 0 at t = {}", r.dy1, r.t));
        }
        if r.dy2 > 1e-10 {
            return Some(format!("y2' reached {:.3e} > 0 at t = {}", r.dy2, r.t));
        }
        if r.t > HALF + 1e-3 && d1 * r.dy1 + d2 * r.dy2 >= 0.0 {
            return Some(format!("trace of y' non-negative at t = {}", r.t));
        }
    }
    let z = traj.max_z1();
    if z > 1.5 {
        return Some(format!("growth monitor (1-t)|y1'| reached {z:.3}"));
    }
    None
}

/// Result of driving `c1` down to its critical value.
#[derive(Debug, Clone)]
pub struct Continuation {
    pub last: InnerSolution,
    pub c1_hat: f64,
    pub log: ContinuationLog,
}

impl Continuation {
    /// Collapse signature of the terminal trajectory: `z1` at the deepest
    /// checkpoint a decade above the noise-saturated zone.
    pub fn collapse_signature(&self) -> f64 {
        z1_gate(&self.last.trajectory)
    }
}

fn z1_gate(traj: &Trajectory) -> f64 {
    traj.records.iter().filter(|r| r.t <= 1.0 - 1e-3).next_back().unwrap_or(traj.end()).z1()
}

/// Critical `c1` for fixed `(c2, gamma)` by bisection on "the trajectory
/// reaches the deep end inside the collapse band `z1 <= 1.2`", together
/// with the trajectory at the feasible endpoint. The bracket starts from
/// the hint and widens as needed.
fn critical_c1(
    c2: f64,
    gamma: f64,
    a: f64,
    s_cap: f64,
    tensor: &PrescribedTensor,
    hint: (f64, f64),
    opts: &GeneralOptions,
    log: &mut ContinuationLog,
) -> Option<(f64, Trajectory)> {
    let ctl = controls(opts.endgame_t_end, opts.checkpoints_n, &opts.step);
    let bound = tensor.c1_lower_bound();
    let probe = |c1: f64, log: &mut ContinuationLog| -> Option<Trajectory> {
        let p = ShootingParams { c1, c2, gamma, a, s_cap };
        let out = match shoot(&p, tensor, opts.endgame_t_end, &ctl) {
            Ok((traj, _)) => {
                if traj.reached_end() && traj.max_z1() <= 1.2 {
                    Some(traj)
                } else {
                    None
                }
            }
            Err(_) => None,
        };
        log.c1_probes.push((c1, out.is_some()));
        out
    };

    let (mut lo, mut hi) = hint;
    lo = lo.max(bound * (1.0 + 1e-9));
    let mut hi_traj = probe(hi, log)?;
    // ensure the lower end is genuinely infeasible
    let mut expand = 0;
    while probe(lo, log).is_some() {
        let width = hi - lo;
        hi = lo;
        lo = (lo - 2.0 * width).max(bound * (1.0 + 1e-9));
        expand += 1;
        if expand > 8 || hi - lo < opts.c1_step_tol {
            break;
        }
    }
    while hi - lo > opts.c1_step_tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match probe(mid, log) {
            Some(traj) => {
                hi = mid;
                hi_traj = traj;
            }
            None => lo = mid,
        }
    }
    Some((hi, hi_traj))
}

/// Boundary residuals read off a deep trajectory at the reporting depth:
/// `y2'` at the `t = 1 - 1e-4` checkpoint, and the sup constraint over
/// checkpoints up to that depth (deeper samples ride the forward-unstable
/// `y2'` mode and carry no boundary information).
fn residuals_at_depth(traj: &Trajectory, s_cap: f64) -> [f64; 2] {
    let cut = 1.0 - 1e-4 + 1e-12;
    let mut bc = 0.0;
    let mut sup = f64::NEG_INFINITY;
    for r in &traj.records {
        if r.t > cut {
            break;
        }
        bc = r.dy2;
        sup = sup.max(r.sup_quantity());
    }
    [bc, sup - s_cap]
}

/// Newton on `(c2, gamma)` where each residual is evaluated along the
/// critical trajectory at the re-bisected critical `c1` for those
/// parameters. Unlike a fixed-`c1` iteration arbitrarily close to the
/// critical value, every evaluation here stays on the feasible side, so
/// the map is smooth.
fn polish_at_criticality(
    start: &InnerSolution,
    a: f64,
    s_cap: f64,
    tensor: &PrescribedTensor,
    opts: &GeneralOptions,
    log: &mut ContinuationLog,
) -> Option<(InnerSolution, f64)> {
    let mut c2 = start.c2;
    let mut gamma = start.gamma;
    let width = (start.c1 - tensor.c1_lower_bound()) * 0.5;
    let hint = (start.c1 - width, start.c1);
    let (mut c1f, mut traj) = critical_c1(c2, gamma, a, s_cap, tensor, hint, opts, log)?;
    let mut res = residuals_at_depth(&traj, s_cap);
    let tol = opts.newton_tol * (1.0 + s_cap);
    let norm = |r: &[f64; 2]| r[0].abs().max(r[1].abs());

    for _ in 0..opts.newton_max_iters.min(12) {
        if norm(&res) <= tol {
            break;
        }
        let dc2 = opts.fd_step_rel * c2.abs();
        let dg = opts.fd_step_rel * gamma.abs();
        let hint = (c1f - 1e-4 * (1.0 + c1f), c1f + 1e-4 * (1.0 + c1f));
        let eval = |c2p: f64, gp: f64, log: &mut ContinuationLog| -> Option<[f64; 2]> {
            critical_c1(c2p, gp, a, s_cap, tensor, hint, opts, log)
                .map(|(_, t)| residuals_at_depth(&t, s_cap))
        };
        let rh_c2 = eval(c2 + dc2, gamma, log)?;
        let rh_g = eval(c2, (gamma + dg).min(s_cap), log)?;
        let dg_eff = (gamma + dg).min(s_cap) - gamma;
        if dg_eff == 0.0 {
            return None;
        }
        let j = [
            (rh_c2[0] - res[0]) / dc2,
            (rh_g[0] - res[0]) / dg_eff,
            (rh_c2[1] - res[1]) / dc2,
            (rh_g[1] - res[1]) / dg_eff,
        ];
        let det = j[0] * j[3] - j[1] * j[2];
        if det.abs() <= 1e-14 * (j[0].abs() + j[1].abs()) * (j[2].abs() + j[3].abs()) {
            break;
        }
        let step_c2 = -(res[0] * j[3] - res[1] * j[1]) / det;
        let step_g = -(j[0] * res[1] - j[2] * res[0]) / det;

        let mut advanced = false;
        let mut lambda = 1.0;
        for _ in 0..6 {
            let c2n = c2 + lambda * step_c2;
            let gn = (gamma + lambda * step_g).clamp(1e-12 * s_cap, s_cap);
            if let Some((c1n, tn)) = critical_c1(c2n, gn, a, s_cap, tensor, hint, opts, log) {
                let rn = residuals_at_depth(&tn, s_cap);
                if norm(&rn) < norm(&res) {
                    c2 = c2n;
                    gamma = gn;
                    c1f = c1n;
                    traj = tn;
                    res = rn;
                    advanced = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !advanced {
            break;
        }
    }

    let sol = InnerSolution {
        c1: c1f,
        c2,
        gamma,
        trajectory: traj,
        res_bc: res[0],
        res_sup: res[1],
        iterations: 0,
    };
    Some((sol, c1f))
}

/// Adaptive continuation decreasing `c1` from `c1_start`, warm-starting the
/// inner solves; when the step is below `freeze_step` the last converged
/// `(c2, gamma)` are frozen and candidates are classified by integration
/// alone. Terminates when the step is below `c1_step_tol` and returns the
/// bracket midpoint as the critical estimate.
pub fn continue_in_c1(
    c1_start: f64,
    a: f64,
    s_cap: f64,
    tensor: &PrescribedTensor,
    opts: &GeneralOptions,
) -> Result<Continuation, GeneralError> {
    let bound = tensor.c1_lower_bound();
    let mut log = ContinuationLog::default();
    let mut current = solve_inner(c1_start, a, s_cap, tensor, None, opts)
        .map_err(|_| GeneralError::StartFailed { c1_last: c1_start })?;
    if monitor_violation(&current.trajectory, tensor).is_some() {
        return Err(GeneralError::StartFailed { c1_last: c1_start });
    }
    push_record(&mut log, &current);
    log.c1_probes.push((c1_start, true));

    let initial_step = (c1_start - bound) / 8.0;
    let mut step = initial_step;
    let mut last_failed: Option<f64> = None;

    // phase 1: warm-started Newton steps down in c1, halving on failure
    while step > opts.c1_step_tol && step >= opts.freeze_step * (1.0 + c1_start) {
        let cand = (current.c1 - step).max(bound * (1.0 + 1e-9));
        if cand >= current.c1 {
            break;
        }
        let accepted =
            match solve_inner(cand, a, s_cap, tensor, Some((current.c2, current.gamma)), opts) {
                Ok(sol) => {
                    if sol.trajectory.reached_end()
                        && monitor_violation(&sol.trajectory, tensor).is_none()
                    {
                        current = sol;
                        push_record(&mut log, &current);
                        true
                    } else {
                        false
                    }
                }
                Err(_) => false,
            };
        log.c1_probes.push((cand, accepted));
        if accepted {
            step = (step * 1.4).min(initial_step);
        } else {
            last_failed = Some(cand);
            step *= 0.5;
        }
    }

    if step <= opts.c1_step_tol && last_failed.is_none() {
        // the step tolerance exceeded the whole feasible span: report the
        // bracket from the single starting solve
        return Ok(Continuation { c1_hat: current.c1 - 0.5 * step, last: current, log });
    }

    // endgame: co-refine (c2, gamma) with the critical c1 adapting to them
    match polish_at_criticality(&current, a, s_cap, tensor, opts, &mut log) {
        Some((sol, c1_hat)) => {
            let gate = z1_gate(&sol.trajectory);
            if gate < 0.5 {
                return Err(GeneralError::StallWithoutBlowup { z1_end: gate });
            }
            push_record(&mut log, &sol);
            Ok(Continuation { last: sol, c1_hat, log })
        }
        None => {
            let gate = z1_gate(&current.trajectory);
            if gate < 0.5 {
                return Err(GeneralError::StallWithoutBlowup { z1_end: gate });
            }
            let c1_hat = match last_failed {
                Some(f) if f < current.c1 => 0.5 * (f + current.c1),
                _ => current.c1 - 0.5 * step,
            };
            Ok(Continuation { last: current, c1_hat, log })
        }
    }
}

fn push_record(log: &mut ContinuationLog, sol: &InnerSolution) {
    log.steps.push(ContinuationRecord {
        c1: sol.c1,
        c2: sol.c2,
        gamma: sol.gamma,
        end_t: sol.trajectory.end().t,
        res_bc: sol.res_bc,
        res_sup: sol.res_sup,
        z1_end: sol.trajectory.end().z1(),
    });
}

/// Final assembly: re-integrates the terminal solution on the emission
/// grid at reporting tolerance, extends it to `t = 1`, mirrors, and runs
/// the oracle and the smoothness report.
pub fn assemble_full_solution(
    cont: &Continuation,
    a: f64,
    s_cap: f64,
    tensor: &PrescribedTensor,
    opts: &GeneralOptions,
) -> Result<ScalingSolution, GeneralError> {
    let (c1, c2, gamma) = (cont.last.c1, cont.last.c2, cont.last.gamma);
    let n_half = opts.grid_n_half.max(65);
    let grid_step = 0.5 / (n_half - 1) as f64;
    let t_end = opts.t_end;
    let mut cps: Vec<f64> = (1..n_half)
        .map(|j| HALF + 0.5 * j as f64 / (n_half - 1) as f64)
        .filter(|&t| t < t_end)
        .collect();
    for k in 0..=32 {
        let t = 1.0 - 10f64.powf(-2.0 - k as f64 / 8.0);
        if t < t_end {
            cps.push(t);
        }
    }
    cps.push(t_end);
    cps.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cps.dedup_by(|x, y| (*x - *y).abs() < 1e-15);

    let mut ctl = IntegrationControls::reporting(t_end);
    ctl.checkpoints = cps;
    let p = ShootingParams { c1, c2, gamma, a, s_cap };
    let traj = integrate_reduced(&p, tensor, t_end, &ctl)?;

    let gate = z1_gate(&traj);
    if !(0.8..=1.2).contains(&gate) {
        return Err(GeneralError::Regularity(RegularityError::NoCollapseSignature {
            z1_end: gate,
        }));
    }

    let endpoint = asymptotic_extend(&traj, tensor, c1, c2, 1e-2)?;
    let regularity = check_smoothness_conditions(&endpoint, opts.regularity_tol, opts.f1pp_tol);

    // uniform half columns from the trajectory
    let mut ts = Vec::with_capacity(n_half + 1);
    let mut hv = Vec::new();
    let mut f1v = Vec::new();
    let mut f2v = Vec::new();
    for r in &traj.records {
        let j = ((r.t - HALF) / grid_step).round();
        if (r.t - (HALF + j * grid_step)).abs() < 1e-12 {
            ts.push(r.t);
            hv.push(r.h);
            f1v.push(r.f1());
            f2v.push(r.f2());
        }
    }

    // near-end samples come from the backward collapse solution, matched
    // on (h_end, f2_end) and crossfaded against the forward run
    const BLEND_LO: f64 = 2e-2;
    const BLEND_HI: f64 = 8e-2;
    let mut tail_us: Vec<f64> =
        ts.iter().map(|&t| 1.0 - t).filter(|&u| u > 0.0 && u <= BLEND_HI).collect();
    tail_us.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let i_match = tail_us
        .iter()
        .position(|&u| u >= 0.5 * (BLEND_LO + BLEND_HI))
        .unwrap_or(tail_us.len() - 1);
    let u_match = tail_us[i_match];
    let k_match = ts.iter().position(|&t| ((1.0 - t) - u_match).abs() < 1e-12).unwrap();
    let raw_f1 = f1v[k_match];
    let raw_f2 = f2v[k_match];

    // two-parameter secant matching of the free endpoint data
    let mut he = endpoint.h_end;
    let mut fe = endpoint.f2_end;
    let mut tail = collapse_tail(tensor, c1, c2, he, fe, &tail_us);
    for _ in 0..6 {
        let g1 = tail.f1[i_match] - raw_f1;
        let g2 = tail.f2[i_match] - raw_f2;
        if g1.abs() <= 1e-13 * raw_f1 && g2.abs() <= 1e-13 * raw_f2 {
            break;
        }
        let dh = 1e-6 * he;
        let df = 1e-6 * fe;
        let th = collapse_tail(tensor, c1, c2, he + dh, fe, &tail_us);
        let tf = collapse_tail(tensor, c1, c2, he, fe + df, &tail_us);
        let j11 = (th.f1[i_match] - tail.f1[i_match]) / dh;
        let j12 = (tf.f1[i_match] - tail.f1[i_match]) / df;
        let j21 = (th.f2[i_match] - tail.f2[i_match]) / dh;
        let j22 = (tf.f2[i_match] - tail.f2[i_match]) / df;
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 {
            break;
        }
        he -= (g1 * j22 - g2 * j12) / det;
        fe -= (j11 * g2 - j21 * g1) / det;
        tail = collapse_tail(tensor, c1, c2, he, fe, &tail_us);
    }

    for k in 0..ts.len() {
        let u = 1.0 - ts[k];
        if u > 0.0 && u < BLEND_HI {
            let i = tail.us.iter().position(|&x| (x - u).abs() < 1e-12).unwrap();
            let x = ((u - BLEND_LO) / (BLEND_HI - BLEND_LO)).clamp(0.0, 1.0);
            let w = x * x * (3.0 - 2.0 * x); // forward-run weight
            f1v[k] = w * f1v[k] + (1.0 - w) * tail.f1[i];
            hv[k] = w * hv[k] + (1.0 - w) * tail.h[i];
            f2v[k] = w * f2v[k] + (1.0 - w) * tail.f2[i];
        }
    }
    let h_paste = smooth_even_endpoint(&ts, &hv);
    let f2_paste = smooth_even_endpoint(&ts, &f2v);
    ts.push(1.0);
    hv.push(h_paste);
    f1v.push(0.0);
    f2v.push(f2_paste);
    let profile = MetricProfile::new(ts, hv, f1v, f2v).mirror_from_half();

    let residuals = ricci_residuals(&profile, tensor, c1, c2, Some(opts.oracle_window))?;

    let mut log = cont.log.clone();
    log.steps.push(ContinuationRecord {
        c1,
        c2,
        gamma,
        end_t: traj.end().t,
        res_bc: traj.end().dy2,
        res_sup: traj.sup_constraint() - s_cap,
        z1_end: traj.end().z1(),
    });
    Ok(ScalingSolution {
        c1,
        c2,
        gamma,
        a,
        s: s_cap,
        c1_hat: cont.c1_hat,
        profile,
        residuals,
        regularity,
        continuation: log,
    })
}

/// The full non-constant-T2 solve: pick the starting `c1`, realize the
/// default `S` from a probe run when not prescribed, run the continuation,
/// and assemble the terminal solution.
pub fn solve_general(
    tensor: &PrescribedTensor,
    a: f64,
    s_cap: Option<f64>,
    opts: &GeneralOptions,
) -> Result<ScalingSolution, GeneralError> {
    if tensor.beta != 0.0 {
        return Err(GeneralError::BetaNonzero(tensor.beta));
    }
    let report = tensor.validate(256);
    if !report.pass {
        return Err(GeneralError::ValidationFailed {
            failing: report.failing().map(|c| c.name.to_string()).collect(),
        });
    }
    let bound = tensor.c1_lower_bound();
    let mut c1_start = 4.0 * bound;

    let s_cap = match s_cap {
        Some(s) => s,
        None => {
            // probe run: canonical c2, gamma = a; the realized constraint
            // level scaled up a little is an admissible S
            let ctl = controls(opts.t_end, opts.checkpoints_n, &opts.step);
            let p = ShootingParams {
                c1: c1_start,
                c2: tensor.alpha / (2.0 * tensor.t2_integral()),
                gamma: a,
                a,
                s_cap: f64::INFINITY,
            };
            let (traj, _) = shoot(&p, tensor, opts.t_end, &ctl)?;
            1.1 * traj.sup_constraint()
        }
    };

    let mut start = solve_inner(c1_start, a, s_cap, tensor, None, opts);
    let mut doublings = 0;
    while start.is_err() && doublings < 8 {
        c1_start *= 2.0;
        doublings += 1;
        start = solve_inner(c1_start, a, s_cap, tensor, None, opts);
    }
    if start.is_err() {
        return Err(GeneralError::StartFailed { c1_last: c1_start });
    }

    let cont = continue_in_c1(c1_start, a, s_cap, tensor, opts)?;
    assemble_full_solution(&cont, a, s_cap, tensor, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn round_as_perturbed() -> PrescribedTensor {
        PrescribedTensor::perturbed_family(2, 2, 0.0).unwrap()
    }

    fn kappa02() -> PrescribedTensor {
        PrescribedTensor::perturbed_family(2, 2, 0.2).unwrap()
    }

    #[test]
    fn exact_round_parameters_have_zero_residuals() {
        let tensor = round_as_perturbed();
        let c = 2.0 * PI * PI;
        let opts = GeneralOptions::default();
        let ctl = controls(opts.t_end, 1024, &opts.step);
        // gamma = 1 makes e^{-2 y2} constant = 1, so S = 1 is the realized sup
        let p = ShootingParams { c1: c, c2: c, gamma: 1.0, a: 1.0, s_cap: 1.0 };
        let (_, res) = shoot(&p, &tensor, opts.t_end, &ctl).unwrap();
        assert!(res.res_bc.abs() < 1e-9, "res_bc = {:.3e}", res.res_bc);
        assert!(res.res_sup.abs() < 1e-9, "res_sup = {:.3e}", res.res_sup);

        // perturbing c2 leaves a visible boundary residual (sign recorded,
        // not asserted)
        let t2_mid = 0.5 * (tensor.t2_value(HALF) + tensor.t2_value(1.0));
        let c2_off = 1.05 * tensor.alpha / t2_mid;
        let p = ShootingParams { c1: c, c2: c2_off, gamma: 1.0, a: 1.0, s_cap: 1.0 };
        let (_, res) = shoot(&p, &tensor, opts.t_end, &ctl).unwrap();
        assert!(res.res_bc.abs() > 1e-6);
        assert!(res.res_bc.is_finite());

        // gamma above S violates the sup constraint already at t = 1/2
        let p = ShootingParams { c1: c, c2: c, gamma: 1.3, a: 1.0, s_cap: 1.0 };
        let (_, res) = shoot(&p, &tensor, opts.t_end, &ctl).unwrap();
        assert!(res.res_sup >= 0.3 - 1e-9);
    }

    #[test]
    fn inner_solver_recovers_the_round_scaling() {
        let tensor = round_as_perturbed();
        let c = 2.0 * PI * PI;
        let opts = GeneralOptions::default();
        // the canonical initial guess is already the zero here
        let sol = solve_inner(c, 1.0, 1.0, &tensor, None, &opts).unwrap();
        assert!((sol.c2 - c).abs() < 1e-6, "c2 = {}", sol.c2);
        assert!((sol.gamma - 1.0).abs() < 1e-6);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn inner_solver_converges_for_kappa_02() {
        let tensor = kappa02();
        let opts = GeneralOptions::default();
        let sol = solve_inner(40.0, 1.0, 1.5, &tensor, None, &opts).unwrap();
        let (sup, inf) = tensor.t2_range(256);
        assert!(sol.c2 > tensor.alpha / sup && sol.c2 < tensor.alpha / inf, "c2 = {}", sol.c2);
        assert!(sol.gamma > 0.0 && sol.gamma <= 1.5);
        // warm restart from the converged point stays put
        let again = solve_inner(40.0, 1.0, 1.5, &tensor, Some((sol.c2, sol.gamma)), &opts).unwrap();
        assert!((again.c2 - sol.c2).abs() < 1e-8 * sol.c2);
        assert!((again.gamma - sol.gamma).abs() < 1e-8);

        // below the feasibility bound the preconditions reject
        assert!(matches!(
            solve_inner(tensor.c1_lower_bound(), 1.0, 1.5, &tensor, None, &opts),
            Err(GeneralError::PreconditionC1 { .. })
        ));
    }

    #[test]
    fn continuation_finds_the_round_critical_value() {
        let tensor = round_as_perturbed();
        let opts = GeneralOptions::default();
        let cont =
            continue_in_c1(4.0 * tensor.c1_lower_bound(), 1.0, 1.0, &tensor, &opts).unwrap();
        let exact = 2.0 * PI * PI;
        assert!((cont.c1_hat - exact).abs() <= 1e-4, "c1_hat = {} vs {}", cont.c1_hat, exact);
        assert!((cont.last.c2 - exact).abs() <= 1e-3);
        // monotone decreasing accepted path
        for w in cont.log.steps.windows(2) {
            assert!(w[1].c1 <= w[0].c1 + 1e-12);
        }
        // terminal trajectory carries the collapse signature
        let z = z1_gate(&cont.last.trajectory);
        assert!((0.9..=1.1).contains(&z), "z1 gate = {z}");

        // the assembled profile is the sin(pi t) family on [0, 1] with
        // collapse at both ends
        let sol = assemble_full_solution(&cont, 1.0, 1.0, &tensor, &opts).unwrap();
        let n = sol.profile.len();
        assert_eq!(sol.profile.f1[0], 0.0);
        assert_eq!(sol.profile.f1[n - 1], 0.0);
        for i in 0..n {
            let t = sol.profile.ts[i];
            let expect = (PI * t.min(1.0 - t)).sin();
            assert!(
                (sol.profile.f1[i] - expect).abs() < 1e-4,
                "t={t}: f1 = {} vs {expect}",
                sol.profile.f1[i]
            );
            // mirror symmetry exact at paired gridpoints
            let j = n - 1 - i;
            assert_eq!(sol.profile.f1[i].to_bits(), sol.profile.f1[j].to_bits());
        }
    }

    #[test]
    fn kappa02_path_has_monotone_monitors_and_growing_collapse() {
        let tensor = kappa02();
        let opts = GeneralOptions::default();
        let cont =
            continue_in_c1(4.0 * tensor.c1_lower_bound(), 1.0, 1.5, &tensor, &opts).unwrap();
        // all accepted trajectories carried monotone y_i'; spot-check the
        // terminal one and the z1 growth along the path end
        assert!(monitor_violation(&cont.last.trajectory, &tensor).is_none());
        let first_z = cont.log.steps.first().unwrap().z1_end;
        let last_z = cont.log.steps.last().unwrap().z1_end;
        assert!(last_z > first_z, "z1 did not grow: {first_z} -> {last_z}");
        let (sup, inf) = tensor.t2_range(256);
        assert!(cont.last.c2 > tensor.alpha / sup && cont.last.c2 < tensor.alpha / inf);
    }

    #[test]
    fn large_step_tolerance_returns_after_a_single_bracket() {
        let tensor = round_as_perturbed();
        let opts = GeneralOptions { c1_step_tol: 10.0, ..Default::default() };
        let c1_start = 4.0 * tensor.c1_lower_bound();
        let cont = continue_in_c1(c1_start, 1.0, 1.0, &tensor, &opts).unwrap();
        assert!(cont.log.c1_probes.len() <= 3);
        assert!(cont.c1_hat < c1_start);
    }
}
