//! Explicit embedded Runge-Kutta 5(4) integration (Dormand-Prince pair) with
//! PI step-size control, hard stepping onto requested checkpoints, and event
//! interruption on accepted states.
//!
//! Steps are clipped so every checkpoint is hit exactly; checkpoint values
//! therefore carry full integration accuracy and no interpolant is needed.
//! The right-hand sides here are cheap, so the extra steps cost nothing
//! compared to the stencil-accuracy they buy downstream.

/// Step-size selection and termination limits.
#[derive(Debug, Clone)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-12, max_step: 0.05, min_step: 1e-14, max_steps: 2_000_000 }
    }
}

/// Why the integration returned.
#[derive(Debug, Clone, PartialEq)]
pub enum StopReason<E> {
    /// Hit the end of the requested interval.
    Completed,
    /// An event fired at the reported time (state at that time is last()).
    Event(E),
    /// Step size underflowed; usually a genuine singularity.
    StepUnderflow { t: f64 },
    /// Exceeded the step budget.
    StepBudgetExhausted { t: f64 },
}

/// Integration output: states recorded at `t0`, every checkpoint reached,
/// and the final accepted point, all strictly increasing in `t`.
#[derive(Debug, Clone)]
pub struct RkOutput<const N: usize, E> {
    pub ts: Vec<f64>,
    pub ys: Vec<[f64; N]>,
    pub reason: StopReason<E>,
}

impl<const N: usize, E> RkOutput<N, E> {
    pub fn last(&self) -> (f64, &[f64; N]) {
        (*self.ts.last().unwrap(), self.ys.last().unwrap())
    }
}

// Dormand-Prince 5(4) coefficients.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
// 5th order solution weights (same as last A row), and the embedded 4th order.
const B5: [f64; 7] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `dy/dt = f(t, y)` from `(t0, y0)` to `t_end > t0`, recording
/// the state at every checkpoint in `(t0, t_end]` (must be sorted strictly
/// increasing). `event` is evaluated on each accepted state; returning
/// `Some` stops the run after recording that state.
pub fn integrate<const N: usize, E>(
    f: &dyn Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    checkpoints: &[f64],
    control: &StepControl,
    event: &dyn Fn(f64, &[f64; N]) -> Option<E>,
) -> RkOutput<N, E> {
    let mut ts = vec![t0];
    let mut ys = vec![y0];
    let mut t = t0;
    let mut y = y0;
    let mut next_cp = checkpoints.partition_point(|&c| c <= t0);

    if let Some(e) = event(t, &y) {
        return RkOutput { ts, ys, reason: StopReason::Event(e) };
    }

    let mut k0 = f(t, &y);
    // guard against NaN right-hand sides at the initial point
    if k0.iter().any(|v| !v.is_finite()) {
        return RkOutput { ts, ys, reason: StopReason::StepUnderflow { t } };
    }

    let mut h = initial_step(control, t_end - t0);
    let mut err_prev: f64 = 1.0;
    let mut steps = 0usize;

    while t < t_end {
        if steps >= control.max_steps {
            return RkOutput { ts, ys, reason: StopReason::StepBudgetExhausted { t } };
        }
        steps += 1;

        // clip onto the next checkpoint / the end
        let mut target_is_record = false;
        let mut target = t + h;
        if next_cp < checkpoints.len() && checkpoints[next_cp] <= target + 1e-15 {
            target = checkpoints[next_cp];
            target_is_record = true;
        }
        if target >= t_end {
            target = t_end;
            target_is_record = target_is_record
                || next_cp < checkpoints.len() && (checkpoints[next_cp] - t_end).abs() < 1e-15;
        }
        let hs = target - t;
        if hs < control.min_step * (1.0 + t.abs()) {
            return RkOutput { ts, ys, reason: StopReason::StepUnderflow { t } };
        }

        // stages
        let mut k = [[0.0; N]; 7];
        k[0] = k0;
        for s in 0..6 {
            let mut ya = y;
            for (j, kj) in k.iter().enumerate().take(s + 1) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..N {
                        ya[i] += hs * a * kj[i];
                    }
                }
            }
            k[s + 1] = f(t + C[s] * hs, &ya);
        }

        let mut y5 = y;
        let mut y4 = y;
        for (j, kj) in k.iter().enumerate() {
            for i in 0..N {
                y5[i] += hs * B5[j] * kj[i];
                y4[i] += hs * B4[j] * kj[i];
            }
        }

        // scaled error norm
        let mut err: f64 = 0.0;
        let mut finite = true;
        for i in 0..N {
            if !y5[i].is_finite() {
                finite = false;
                break;
            }
            let sc = control.abs_tol + control.rel_tol * y[i].abs().max(y5[i].abs());
            let e = (y5[i] - y4[i]) / sc;
            err += e * e;
        }
        err = (err / N as f64).sqrt();

        if finite && err <= 1.0 {
            // accept
            t = target;
            y = y5;
            k0 = k[6]; // FSAL
            if k0.iter().any(|v| !v.is_finite()) {
                ts.push(t);
                ys.push(y);
                return RkOutput { ts, ys, reason: StopReason::StepUnderflow { t } };
            }
            if target_is_record || t >= t_end {
                ts.push(t);
                ys.push(y);
                while next_cp < checkpoints.len() && checkpoints[next_cp] <= t + 1e-15 {
                    next_cp += 1;
                }
            }
            if let Some(e) = event(t, &y) {
                if *ts.last().unwrap() < t {
                    ts.push(t);
                    ys.push(y);
                }
                return RkOutput { ts, ys, reason: StopReason::Event(e) };
            }
            // PI controller (Gustafsson): gentle on smooth stretches
            let fac = 0.9 * err.max(1e-16).powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
            err_prev = err.max(1e-16);
            h = (hs * fac.clamp(0.2, 5.0)).min(control.max_step);
        } else {
            // reject
            let fac = if finite { 0.9 * err.powf(-0.2) } else { 0.25 };
            h = hs * fac.clamp(0.1, 0.5);
            if h < control.min_step * (1.0 + t.abs()) {
                return RkOutput { ts, ys, reason: StopReason::StepUnderflow { t } };
            }
        }
    }

    RkOutput { ts, ys, reason: StopReason::Completed }
}

fn initial_step(control: &StepControl, span: f64) -> f64 {
    (span / 100.0).min(control.max_step).max(control.min_step * 10.0)
}
