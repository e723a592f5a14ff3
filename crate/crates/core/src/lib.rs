//! Numerical solver for the prescribed Ricci curvature equation with scaling,
//! `Ric(g) = c1 (dt^2 + T1 Ω1^2) + c2 T2 Ω2^2`, for doubly warped product
//! metrics `g = h^2 dt^2 + f1^2 Ω1^2 + f2^2 Ω2^2` over the orbit space `[0,1]`
//! with reflection symmetry about `t = 1/2` and a collapsing sphere factor at
//! the endpoints.
//!
//! The pipeline:
//! * [`tensor`] models the prescribed data `(d1, d2, alpha, beta, T1, T2)`
//!   and checks the monotonicity/endpoint hypotheses it must satisfy.
//! * [`ode_core`] integrates the Bianchi-reduced first order system in the
//!   log variables `y_i = ln f_i`, carries `h`, and provides the singular
//!   linear ODE endgame used near the degenerate orbit.
//! * [`hamilton`] solves the constant-`T2` case by bisection on the critical
//!   scaling `c1` for the first-derivative equation of `l = -f1'/h`.
//! * [`general`] solves the non-constant-`T2` case by two-parameter shooting
//!   in `(c2, gamma)` and numerical continuation decreasing `c1`.
//! * [`regularity`] extends near-collapse trajectories to `t = 1` and checks
//!   the smoothness conditions there.
//! * [`ricci_oracle`] independently recomputes the three curvature equations
//!   from a sampled profile by finite differences and certifies solutions.

pub mod general;
pub mod hamilton;
pub mod ode_core;
pub mod regularity;
pub mod ricci_oracle;
pub mod rk45;
pub mod solution;
pub mod spline;
pub mod tensor;

pub use general::solve_general;
pub use hamilton::solve_constant_t2;
pub use ricci_oracle::{bianchi_sigma, ricci_residuals, MetricProfile, ResidualReport};
pub use solution::ScalingSolution;
pub use tensor::{PrescribedTensor, ValidationReport};
