//! The prescribed tensor `T = T0 dt^2 + T1 Ω1^2 + T2 Ω2^2` on the half orbit
//! space `[1/2, 1]`, normalized so `T0 ≡ 1`.
//!
//! A tensor bundles the orbit dimensions `d1, d2 >= 2`, the curvature
//! constant `alpha > 0` of the second factor, the bracket constant
//! `beta >= 0`, and C^2 evaluators for `T1` and `T2`. The existence solver
//! requires `beta = 0`; the curvature oracle accepts `beta >= 0`.
//!
//! Validation checks the hypotheses under which the solver is known to work:
//! `T1' <= 0` and `T2' <= 0` on `[1/2,1]` with `T1' < 0` strictly inside,
//! `T1''(1/2) < 0`, evenness at `t = 1/2`, and the endpoint smoothness list
//! `T1(1) = 0`, `T1'(1) = 0`, `T1''(1) = 2`, `T2'(1) = 0`, `T2(1) > 0`.

use crate::spline::{CubicSpline, SplineError};
use std::f64::consts::PI;
use std::sync::Arc;
use thiserror::Error;

pub const HALF: f64 = 0.5;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("evaluation point t = {t} outside the domain [1/2, 1]")]
    OutOfDomain { t: f64 },
    #[error("dimension d{which} = {value} must be >= 2")]
    BadDimension { which: u8, value: u32 },
    #[error("alpha = {0} must be > 0")]
    BadAlpha(f64),
    #[error("beta = {0} must be >= 0")]
    BadBeta(f64),
    #[error("kappa = {0} must be >= 0")]
    BadKappa(f64),
    #[error("T0 sample at t = {t} is {value}, not positive")]
    NonPositiveT0 { t: f64, value: f64 },
    #[error("tensor table: {0}")]
    BadTable(String),
    #[error(transparent)]
    Spline(#[from] SplineError),
}

/// A C^2 scalar component of the tensor, with deterministic evaluators for
/// the value and its first two derivatives.
#[derive(Clone)]
pub enum Component {
    /// `sin^2(pi t) / pi^2`, written in terms of `1 - t` so it stays accurate
    /// where it vanishes.
    RoundT1,
    Const(f64),
    /// `base * (1 + kappa sin^2(pi t))`.
    PerturbedT2 { base: f64, kappa: f64 },
    Spline(Arc<CubicSpline>),
    /// Closed-form component supplied as plain function pointers.
    Analytic { value: fn(f64) -> f64, d1: fn(f64) -> f64, d2: fn(f64) -> f64 },
    /// `scale * inner(map(t))` where `map` is the rescaled arclength
    /// reparametrization; derivatives use the chain rule with the analytic
    /// map derivatives.
    Composed { inner: Box<Component>, map: Arc<ParamMap>, scale: f64 },
}

impl std::fmt::Debug for Component {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Component::RoundT1 => write!(f, "RoundT1"),
            Component::Const(c) => write!(f, "Const({c})"),
            Component::PerturbedT2 { base, kappa } => {
                write!(f, "PerturbedT2 {{ base: {base}, kappa: {kappa} }}")
            }
            Component::Spline(_) => write!(f, "Spline(..)"),
            Component::Analytic { .. } => write!(f, "Analytic(..)"),
            Component::Composed { scale, .. } => write!(f, "Composed {{ scale: {scale}, .. }}"),
        }
    }
}

impl Component {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Component::RoundT1 => {
                let s = (PI * (1.0 - t)).sin();
                s * s / (PI * PI)
            }
            Component::Const(c) => *c,
            Component::PerturbedT2 { base, kappa } => {
                let s = (PI * (1.0 - t)).sin();
                base * (1.0 + kappa * s * s)
            }
            Component::Spline(sp) => sp.value(t),
            Component::Analytic { value, .. } => value(t),
            Component::Composed { inner, map, scale } => scale * inner.value(map.t_of_s(t)),
        }
    }

    pub fn d1(&self, t: f64) -> f64 {
        match self {
            // d/dt sin^2(pi t)/pi^2 = sin(2 pi t)/pi = -sin(2 pi (1-t))/pi
            Component::RoundT1 => -(2.0 * PI * (1.0 - t)).sin() / PI,
            Component::Const(_) => 0.0,
            Component::PerturbedT2 { base, kappa } => -base * kappa * (2.0 * PI * (1.0 - t)).sin() * PI,
            Component::Spline(sp) => sp.derivative(t),
            Component::Analytic { d1, .. } => d1(t),
            Component::Composed { inner, map, scale } => {
                let u = map.t_of_s(t);
                scale * inner.d1(u) * map.dt_ds(u)
            }
        }
    }

    pub fn d2(&self, t: f64) -> f64 {
        match self {
            Component::RoundT1 => 2.0 * (2.0 * PI * (1.0 - t)).cos(),
            Component::Const(_) => 0.0,
            Component::PerturbedT2 { base, kappa } => {
                2.0 * PI * PI * base * kappa * (2.0 * PI * (1.0 - t)).cos()
            }
            Component::Spline(sp) => sp.second_derivative(t),
            Component::Analytic { d2, .. } => d2(t),
            Component::Composed { inner, map, scale } => {
                let u = map.t_of_s(t);
                let dt = map.dt_ds(u);
                scale * (inner.d2(u) * dt * dt + inner.d1(u) * map.d2t_ds2(u))
            }
        }
    }
}

/// The monotone map `t(s)` from the rescaled-arclength parameter `s` on
/// `[1/2, 1]` back to the original parameter, together with its analytic
/// derivatives `dt/ds = 2L / sqrt(T0(t))`.
pub struct ParamMap {
    /// Spline of t as a function of s.
    t_of_s: CubicSpline,
    /// Half arclength `L = ∫_{1/2}^1 sqrt(T0)`.
    pub half_length: f64,
    t0_value: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    t0_d1: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for ParamMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ParamMap {{ half_length: {} }}", self.half_length)
    }
}

impl ParamMap {
    fn t_of_s(&self, s: f64) -> f64 {
        // clamp guards rounding at the interval ends
        self.t_of_s.value(s).clamp(HALF, 1.0)
    }

    fn dt_ds(&self, t: f64) -> f64 {
        2.0 * self.half_length / (self.t0_value)(t).sqrt()
    }

    fn d2t_ds2(&self, t: f64) -> f64 {
        // d/ds [2L T0^{-1/2}] = 2L * (-1/2) T0^{-3/2} T0'(t) * dt/ds
        let t0 = (self.t0_value)(t);
        let dtds = self.dt_ds(t);
        -self.half_length * (self.t0_d1)(t) * t0.powf(-1.5) * dtds
    }
}

/// One validation condition with its measured value(s).
#[derive(Debug, Clone)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub value: f64,
    pub pass: bool,
}

/// Report of the Theorem-hypothesis checks; `pass` iff every condition passed.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<ConditionCheck>,
    pub pass: bool,
}

impl ValidationReport {
    pub fn failing(&self) -> impl Iterator<Item = &ConditionCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn has_failure(&self, name: &str) -> bool {
        self.checks.iter().any(|c| c.name == name && !c.pass)
    }
}

/// The prescribed data `(d1, d2, alpha, beta, T1, T2)` with `T0 ≡ 1`.
/// Immutable after construction; all evaluators are pure.
#[derive(Debug, Clone)]
pub struct PrescribedTensor {
    pub d1: u32,
    pub d2: u32,
    pub alpha: f64,
    pub beta: f64,
    t1: Component,
    t2: Component,
}

impl PrescribedTensor {
    pub fn new(
        d1: u32,
        d2: u32,
        alpha: f64,
        beta: f64,
        t1: Component,
        t2: Component,
    ) -> Result<Self, TensorError> {
        if d1 < 2 {
            return Err(TensorError::BadDimension { which: 1, value: d1 });
        }
        if d2 < 2 {
            return Err(TensorError::BadDimension { which: 2, value: d2 });
        }
        if !(alpha > 0.0) {
            return Err(TensorError::BadAlpha(alpha));
        }
        if !(beta >= 0.0) {
            return Err(TensorError::BadBeta(beta));
        }
        Ok(Self { d1, d2, alpha, beta, t1, t2 })
    }

    /// Ricci tensor of the product of round spheres, normalized to `T0 = 1`:
    /// `alpha = d2 - 1`, `beta = 0`, `T1 = sin^2(pi t)/pi^2`,
    /// `T2 = (d2 - 1)/(d1 pi^2)`. The exact solution is
    /// `h = pi`, `f1 = sin(pi t)`, `f2 = const` with `c1 = c2 = d1 pi^2`.
    pub fn round_product(d1: u32, d2: u32) -> Result<Self, TensorError> {
        let alpha = (d2 - 1) as f64;
        let t2 = alpha / (d1 as f64 * PI * PI);
        Self::new(d1, d2, alpha, 0.0, Component::RoundT1, Component::Const(t2))
    }

    /// Round-product `T1` with `T2 = T2_round (1 + kappa sin^2(pi t))`: a
    /// non-constant `T2` family with `T2' <= 0` on `[1/2, 1]`, equality only
    /// at the endpoints. `kappa = 0` reproduces the round product.
    pub fn perturbed_family(d1: u32, d2: u32, kappa: f64) -> Result<Self, TensorError> {
        if !(kappa >= 0.0) {
            return Err(TensorError::BadKappa(kappa));
        }
        let alpha = (d2 - 1) as f64;
        let base = alpha / (d1 as f64 * PI * PI);
        Self::new(d1, d2, alpha, 0.0, Component::RoundT1, Component::PerturbedT2 { base, kappa })
    }

    /// Builds the tensor from strictly increasing samples of `(t, T1, T2)`
    /// covering `[1/2, 1]`, fitted with clamped cubic splines.
    pub fn from_table(
        d1: u32,
        d2: u32,
        alpha: f64,
        beta: f64,
        ts: &[f64],
        t1s: &[f64],
        t2s: &[f64],
    ) -> Result<Self, TensorError> {
        if ts.len() != t1s.len() || ts.len() != t2s.len() {
            return Err(TensorError::BadTable("column lengths differ".into()));
        }
        if ts.is_empty() || ts[0] > HALF + 1e-9 || ts[ts.len() - 1] < 1.0 - 1e-9 {
            return Err(TensorError::BadTable("t column must cover [0.5, 1.0]".into()));
        }
        let t1 = Component::Spline(Arc::new(CubicSpline::from_table(ts, t1s)?));
        let t2 = Component::Spline(Arc::new(CubicSpline::from_table(ts, t2s)?));
        Self::new(d1, d2, alpha, beta, t1, t2)
    }

    /// Order-`order` derivatives of `(T1, T2)` at `t in [1/2, 1]`.
    pub fn evaluate(&self, t: f64, order: u8) -> Result<(f64, f64), TensorError> {
        if !(HALF..=1.0).contains(&t) {
            return Err(TensorError::OutOfDomain { t });
        }
        Ok(match order {
            0 => (self.t1.value(t), self.t2.value(t)),
            1 => (self.t1.d1(t), self.t2.d1(t)),
            _ => (self.t1.d2(t), self.t2.d2(t)),
        })
    }

    /// Evaluation on the mirrored domain `[0, 1]`: values are even about
    /// `t = 1/2`, odd-order derivatives flip sign on the reflected half.
    pub fn evaluate_mirrored(&self, t: f64, order: u8) -> Result<(f64, f64), TensorError> {
        if !(0.0..=1.0).contains(&t) {
            return Err(TensorError::OutOfDomain { t });
        }
        if t >= HALF {
            self.evaluate(t, order)
        } else {
            let (a, b) = self.evaluate(1.0 - t, order)?;
            if order == 1 {
                Ok((-a, -b))
            } else {
                Ok((a, b))
            }
        }
    }

    pub fn t1_value(&self, t: f64) -> f64 {
        self.t1.value(t)
    }
    pub fn t1_d1(&self, t: f64) -> f64 {
        self.t1.d1(t)
    }
    pub fn t1_d2(&self, t: f64) -> f64 {
        self.t1.d2(t)
    }
    pub fn t2_value(&self, t: f64) -> f64 {
        self.t2.value(t)
    }
    pub fn t2_d1(&self, t: f64) -> f64 {
        self.t2.d1(t)
    }
    pub fn t2_d2(&self, t: f64) -> f64 {
        self.t2.d2(t)
    }

    /// `c1` must exceed this for the shooting set to be non-empty.
    pub fn c1_lower_bound(&self) -> f64 {
        (self.d1 as f64 - 1.0) / self.t1.value(HALF)
    }

    /// `(sup T2, inf T2)` over a sampling grid plus endpoints. With
    /// `T2' <= 0` the sup is at `t = 1/2` and the inf at `t = 1`.
    pub fn t2_range(&self, grid_n: usize) -> (f64, f64) {
        let n = grid_n.max(16);
        let mut sup = f64::NEG_INFINITY;
        let mut inf = f64::INFINITY;
        for i in 0..=n {
            let t = HALF + 0.5 * i as f64 / n as f64;
            let v = self.t2.value(t);
            sup = sup.max(v);
            inf = inf.min(v);
        }
        (sup, inf)
    }

    /// Whether `T2` is constant up to relative variation `1e-12`.
    pub fn t2_is_constant(&self, grid_n: usize) -> bool {
        let (sup, inf) = self.t2_range(grid_n);
        sup - inf <= 1e-12 * sup.abs().max(inf.abs()).max(f64::MIN_POSITIVE)
    }

    /// Simpson quadrature of `T2` over `[1/2, 1]`; used for the canonical
    /// shooting initial guess `c2 = alpha / (2 ∫ T2)`.
    pub fn t2_integral(&self) -> f64 {
        let n = 512; // even
        let h = 0.5 / n as f64;
        let mut acc = self.t2.value(HALF) + self.t2.value(1.0);
        for i in 1..n {
            let t = HALF + h * i as f64;
            acc += self.t2.value(t) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    /// Grid-plus-endpoint check of the solvability hypotheses. Equality
    /// conditions are tested to absolute tolerance `1e-6` (exact closed forms
    /// land well inside); strict sign conditions are tested literally at
    /// interior grid points.
    pub fn validate(&self, grid_n: usize) -> ValidationReport {
        let n = grid_n.max(16);
        let grid: Vec<f64> = (0..=n).map(|i| HALF + 0.5 * i as f64 / n as f64).collect();
        let tol = 1e-6;
        let mut checks = Vec::new();

        let mut push = |name: &'static str, value: f64, pass: bool| {
            checks.push(ConditionCheck { name, value, pass });
        };

        let mut min_t1_interior = f64::INFINITY;
        let mut min_t2 = f64::INFINITY;
        let mut max_t1_d1 = f64::NEG_INFINITY;
        let mut max_t2_d1 = f64::NEG_INFINITY;
        let mut max_t1_d1_interior = f64::NEG_INFINITY;
        for (i, &t) in grid.iter().enumerate() {
            let interior = i > 0 && i < n;
            if i < n {
                min_t1_interior = min_t1_interior.min(self.t1.value(t));
            }
            min_t2 = min_t2.min(self.t2.value(t));
            let d1 = self.t1.d1(t);
            let d2 = self.t2.d1(t);
            max_t1_d1 = max_t1_d1.max(d1);
            max_t2_d1 = max_t2_d1.max(d2);
            if interior {
                max_t1_d1_interior = max_t1_d1_interior.max(d1);
            }
        }

        push("T1_positive_on_half_open", min_t1_interior, min_t1_interior > 0.0);
        push("T2_positive", min_t2, min_t2 > 0.0);
        push("T1_prime_nonpositive", max_t1_d1, max_t1_d1 <= tol);
        push("T2_prime_nonpositive", max_t2_d1, max_t2_d1 <= tol);
        push("T1_prime_negative_interior", max_t1_d1_interior, max_t1_d1_interior < 0.0);
        let t1_pp_half = self.t1.d2(HALF);
        push("T1_pp_half_negative", t1_pp_half, t1_pp_half < 0.0);
        let t1_end = self.t1.value(1.0);
        push("T1_end_zero", t1_end, t1_end.abs() <= tol);
        let t1_d1_end = self.t1.d1(1.0);
        push("T1_prime_end_zero", t1_d1_end, t1_d1_end.abs() <= tol);
        let t1_pp_end = self.t1.d2(1.0);
        push("T1_pp_end_two", t1_pp_end, (t1_pp_end - 2.0).abs() <= tol);
        let t2_d1_end = self.t2.d1(1.0);
        push("T2_prime_end_zero", t2_d1_end, t2_d1_end.abs() <= tol);
        let t2_end = self.t2.value(1.0);
        push("T2_end_positive", t2_end, t2_end > 0.0);
        let t1_d1_half = self.t1.d1(HALF);
        push("T1_prime_half_zero", t1_d1_half, t1_d1_half.abs() <= tol);
        let t2_d1_half = self.t2.d1(HALF);
        push("T2_prime_half_zero", t2_d1_half, t2_d1_half.abs() <= tol);

        let pass = checks.iter().all(|c| c.pass);
        ValidationReport { checks, pass }
    }
}

/// Reparametrizes `T0 dt^2 + T1 Ω1^2 + T2 Ω2^2` so the output has `T0 ≡ 1`
/// on `[1/2, 1]` again: pass to the arclength parameter `ds = sqrt(T0) dt`,
/// map it affinely back onto `[1/2, 1]`, and scale the whole tensor by
/// `1/(2L)^2` where `L` is the half arclength. Scaling the tensor is
/// admissible because the scaling constants `c1, c2` absorb it.
pub fn reparametrize_to_unit_t0(
    t0: &Component,
    t1: &Component,
    t2: &Component,
    d1: u32,
    d2: u32,
    alpha: f64,
    beta: f64,
    grid_n: usize,
) -> Result<PrescribedTensor, TensorError> {
    let n = grid_n.max(64) * 4; // quadrature refinement
    let h = 0.5 / n as f64;

    // cumulative arclength s(t) by the trapezoid rule on the refined grid,
    // then corrected to Simpson accuracy pairwise
    let mut sqrt_t0 = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let t = HALF + h * i as f64;
        let v = t0.value(t);
        if !(v > 0.0) {
            return Err(TensorError::NonPositiveT0 { t, value: v });
        }
        sqrt_t0.push(v.sqrt());
    }
    let mut s = vec![0.0; n + 1];
    for i in 1..=n {
        // Simpson on each pair of half-intervals via the midpoint value
        let tm = HALF + h * (i as f64 - 0.5);
        let vm = t0.value(tm);
        if !(vm > 0.0) {
            return Err(TensorError::NonPositiveT0 { t: tm, value: vm });
        }
        s[i] = s[i - 1] + h / 6.0 * (sqrt_t0[i - 1] + 4.0 * vm.sqrt() + sqrt_t0[i]);
    }
    let half_length = s[n];

    // rescaled parameter on [1/2, 1]
    let s_grid: Vec<f64> = s.iter().map(|&si| HALF + si / (2.0 * half_length)).collect();
    let t_grid: Vec<f64> = (0..=n).map(|i| HALF + h * i as f64).collect();
    let t_of_s = CubicSpline::clamped(
        &s_grid,
        &t_grid,
        2.0 * half_length / sqrt_t0[0],
        2.0 * half_length / sqrt_t0[n],
    )?;

    let t0v = t0.clone();
    let t0d = t0.clone();
    let map = Arc::new(ParamMap {
        t_of_s,
        half_length,
        t0_value: Box::new(move |t| t0v.value(t)),
        t0_d1: Box::new(move |t| t0d.d1(t)),
    });
    let scale = 1.0 / (4.0 * half_length * half_length);

    PrescribedTensor::new(
        d1,
        d2,
        alpha * scale,
        beta * scale,
        Component::Composed { inner: Box::new(t1.clone()), map: map.clone(), scale },
        Component::Composed { inner: Box::new(t2.clone()), map, scale },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd1(c: impl Fn(f64) -> f64, t: f64, eta: f64) -> f64 {
        (c(t + eta) - c(t - eta)) / (2.0 * eta)
    }

    #[test]
    fn round_product_values() {
        let t = PrescribedTensor::round_product(2, 2).unwrap();
        // T1(3/4) = sin^2(3 pi/4)/pi^2 = 1/(2 pi^2)
        let (t1, t2) = t.evaluate(0.75, 0).unwrap();
        assert!((t1 - 0.5 / (PI * PI)).abs() < 1e-15);
        assert!((t2 - 0.5 / (PI * PI)).abs() < 1e-15);
        // T1(1/2) = 1/pi^2
        assert!((t.t1_value(HALF) - 1.0 / (PI * PI)).abs() < 1e-15);
        // evenness at 1/2 and the endpoint second derivative
        let (d1a, d2a) = t.evaluate(HALF, 1).unwrap();
        assert!(d1a.abs() < 1e-15);
        assert!(d2a.abs() < 1e-15);
        assert!((t.t1_d2(1.0) - 2.0).abs() < 1e-12);
        assert!(t.evaluate(0.3, 0).is_err());
    }

    #[test]
    fn validate_passes_for_builtin_families() {
        for d1 in 2..=6 {
            for d2 in 2..=6 {
                let t = PrescribedTensor::round_product(d1, d2).unwrap();
                let rep = t.validate(64);
                assert!(rep.pass, "round({d1},{d2}): {:?}", rep.failing().collect::<Vec<_>>());
            }
        }
        let t = PrescribedTensor::perturbed_family(2, 2, 0.2).unwrap();
        assert!(t.validate(128).pass);
        // sup at 1/2 is 1.2 * base, inf at 1 is base
        let (sup, inf) = t.t2_range(256);
        let base = 0.5 / (PI * PI);
        assert!((sup - 1.2 * base).abs() < 1e-12);
        assert!((inf - base).abs() < 1e-12);
    }

    #[test]
    fn perturbed_family_reduces_to_round_at_kappa_zero() {
        let a = PrescribedTensor::round_product(3, 4).unwrap();
        let b = PrescribedTensor::perturbed_family(3, 4, 0.0).unwrap();
        for i in 0..=32 {
            let t = HALF + 0.5 * i as f64 / 32.0;
            for order in 0..=2 {
                let (x1, x2) = a.evaluate(t, order).unwrap();
                let (y1, y2) = b.evaluate(t, order).unwrap();
                assert_eq!(x1, y1);
                assert_eq!(x2, y2);
            }
        }
        // kappa = 0.2 at t = 3/4: T2 = 1.1 * base
        let p = PrescribedTensor::perturbed_family(2, 2, 0.2).unwrap();
        assert!((p.t2_value(0.75) - 1.1 * 0.5 / (PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn validate_rejects_bad_tensors() {
        // constant T1 violates strict interior monotonicity and T1(1) = 0
        let t = PrescribedTensor::new(
            2,
            2,
            1.0,
            0.0,
            Component::Const(1.0),
            Component::Const(0.05),
        )
        .unwrap();
        let rep = t.validate(64);
        assert!(!rep.pass);
        assert!(rep.has_failure("T1_prime_negative_interior"));
        assert!(rep.has_failure("T1_end_zero"));

        // T1 = (1-t)^3 has T1''(1) = 0 != 2
        let t = PrescribedTensor::new(
            2,
            2,
            1.0,
            0.0,
            Component::Analytic {
                value: |t| (1.0 - t).powi(3),
                d1: |t| -3.0 * (1.0 - t).powi(2),
                d2: |t| 6.0 * (1.0 - t),
            },
            Component::Const(0.05),
        )
        .unwrap();
        let rep = t.validate(64);
        assert!(rep.has_failure("T1_pp_end_two"));

        // increasing T2 violates T2' <= 0
        let t = PrescribedTensor::new(
            2,
            2,
            1.0,
            0.0,
            Component::RoundT1,
            Component::Analytic {
                value: |t| 0.05 + 0.01 * (PI * (1.0 - t)).cos(),
                d1: |t| 0.01 * PI * (PI * (1.0 - t)).sin(),
                d2: |t| -0.01 * PI * PI * (PI * (1.0 - t)).cos(),
            },
        )
        .unwrap();
        let rep = t.validate(64);
        assert!(rep.has_failure("T2_prime_nonpositive"));
    }

    #[test]
    fn finite_differences_match_first_derivative_at_second_order() {
        let tens = PrescribedTensor::perturbed_family(2, 3, 0.2).unwrap();
        for k in 1..8 {
            let t = HALF + 0.5 * k as f64 / 8.0;
            let exact = tens.t1_d1(t);
            let e1 = (fd1(|x| tens.t1_value(x), t, 1e-3) - exact).abs();
            let e2 = (fd1(|x| tens.t1_value(x), t, 5e-4) - exact).abs();
            // halving eta shrinks the error ~4x; allow slack and a floor
            assert!(e2 <= e1 / 3.0 + 1e-11, "t={t}: e1={e1:.3e} e2={e2:.3e}");
            let exact2 = tens.t2_d1(t);
            let f1 = (fd1(|x| tens.t2_value(x), t, 1e-3) - exact2).abs();
            let f2 = (fd1(|x| tens.t2_value(x), t, 5e-4) - exact2).abs();
            assert!(f2 <= f1 / 3.0 + 1e-11);
        }
    }

    #[test]
    fn reparametrize_identity_for_unit_t0() {
        let round = PrescribedTensor::round_product(2, 2).unwrap();
        let re = reparametrize_to_unit_t0(
            &Component::Const(1.0),
            &Component::RoundT1,
            &Component::Const(round.t2_value(HALF)),
            2,
            2,
            1.0,
            0.0,
            128,
        )
        .unwrap();
        for i in 0..=64 {
            let t = HALF + 0.5 * i as f64 / 64.0;
            assert!((re.t1_value(t) - round.t1_value(t)).abs() < 1e-10);
            assert!((re.t1_d1(t) - round.t1_d1(t)).abs() < 1e-8);
        }
        assert!((re.alpha - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reparametrize_constant_t0_scales_and_halves_slope() {
        // T0 = 4: raw arclength doubles the parameter speed, the affine
        // rescale lands back on t, and the tensor is scaled by 1/4.
        let re = reparametrize_to_unit_t0(
            &Component::Const(4.0),
            &Component::RoundT1,
            &Component::Const(0.05),
            2,
            2,
            1.0,
            0.0,
            128,
        )
        .unwrap();
        let tau = Component::RoundT1;
        for i in 1..16 {
            let s = HALF + 0.5 * i as f64 / 16.0;
            assert!((re.t1_value(s) - tau.value(s) / 4.0).abs() < 1e-9);
            // chain rule oracle: finite differences of the composed value
            let exact = re.t1_d1(s);
            let fd = fd1(|x| re.t1_value(x), s, 1e-4);
            assert!((fd - exact).abs() < 1e-6, "s={s}: fd={fd} exact={exact}");
        }
        // chain rule at the endpoint: T1''(1) = tau''(1) (dt/ds)^2 / 4 = 2/4
        assert!((re.t1_d2(1.0) - 0.5).abs() < 1e-8);
        assert!((re.alpha - 0.25).abs() < 1e-12);
    }

    #[test]
    fn reparametrize_nonconstant_t0_chain_rule() {
        // T0 = 1 + 0.3 cos^2(pi t): positive, even at both endpoints.
        let t0 = Component::Analytic {
            value: |t| 1.0 + 0.3 * (PI * t).cos().powi(2),
            d1: |t| -0.3 * PI * (2.0 * PI * t).sin(),
            d2: |t| -0.6 * PI * PI * (2.0 * PI * t).cos(),
        };
        // A tensor that is smooth for this T0 needs T1''(1) = 2 T0(1) = 2.6,
        // so take 1.3x the round T1.
        let re = reparametrize_to_unit_t0(
            &t0,
            &Component::Analytic {
                value: |t| 1.3 * (PI * (1.0 - t)).sin().powi(2) / (PI * PI),
                d1: |t| -1.3 * (2.0 * PI * (1.0 - t)).sin() / PI,
                d2: |t| 2.6 * (2.0 * PI * (1.0 - t)).cos(),
            },
            &Component::Const(0.05),
            2,
            2,
            1.0,
            0.0,
            256,
        )
        .unwrap();
        // composed evaluators stay consistent with finite differences
        for i in 2..15 {
            let s = HALF + 0.5 * i as f64 / 16.0;
            let fd = fd1(|x| re.t1_value(x), s, 1e-4);
            assert!((fd - re.t1_d1(s)).abs() < 1e-6);
            let fdd = fd1(|x| re.t1_d1(x), s, 1e-4);
            assert!((fdd - re.t1_d2(s)).abs() < 1e-4);
        }
        // the result is a valid tensor again (validate re-run on the output)
        let rep = re.validate(64);
        assert!(rep.pass, "{:?}", rep.failing().collect::<Vec<_>>());
    }

    proptest::proptest! {
        // the mirrored evaluators satisfy the evenness the reflection
        // symmetry demands: values and second derivatives even about 1/2,
        // first derivatives odd
        #[test]
        fn mirrored_evaluation_is_even(t in 0.0f64..=1.0, kappa in 0.0f64..0.5) {
            let tensor = PrescribedTensor::perturbed_family(2, 3, kappa).unwrap();
            let (v1, v2) = tensor.evaluate_mirrored(t, 0).unwrap();
            let (w1, w2) = tensor.evaluate_mirrored(1.0 - t, 0).unwrap();
            proptest::prop_assert_eq!(v1.to_bits(), w1.to_bits());
            proptest::prop_assert_eq!(v2.to_bits(), w2.to_bits());
            let (d1a, d1b) = tensor.evaluate_mirrored(t, 1).unwrap();
            let (e1a, e1b) = tensor.evaluate_mirrored(1.0 - t, 1).unwrap();
            proptest::prop_assert!((d1a + e1a).abs() <= 1e-15 * (1.0 + d1a.abs()));
            proptest::prop_assert!((d1b + e1b).abs() <= 1e-15 * (1.0 + d1b.abs()));
            let (s1, s2) = tensor.evaluate_mirrored(t, 2).unwrap();
            let (r1, r2) = tensor.evaluate_mirrored(1.0 - t, 2).unwrap();
            proptest::prop_assert_eq!(s1.to_bits(), r1.to_bits());
            proptest::prop_assert_eq!(s2.to_bits(), r2.to_bits());
        }
    }

    #[test]
    fn evaluators_are_deterministic() {
        let t = PrescribedTensor::perturbed_family(2, 2, 0.2).unwrap();
        for i in 0..=100 {
            let x = HALF + 0.5 * i as f64 / 100.0;
            assert_eq!(t.t1_value(x).to_bits(), t.t1_value(x).to_bits());
            assert_eq!(t.t2_d2(x).to_bits(), t.t2_d2(x).to_bits());
        }
    }
}
