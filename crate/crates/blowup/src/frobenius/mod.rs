//! Regular-singular ODE machinery: indicial roots, Frobenius fundamental systems, the
//! log-power particular-solution recursion, and a high-order adaptive integrator used both as
//! an oracle for the series and to continue them away from the singular point.
//!
//! Series solutions are written `z^β Σ_n c_n(L) zⁿ` with `c_n` a polynomial in `L = log z`.
//! Substituting into `z²u'' + zPu' + Qu` turns each order into `I(μ + D) c_n = r_n` with
//! `D = d/dL` and `I` the indicial polynomial, solved by back substitution on the
//! `L`-coefficients; resonances raise the log degree by one per coinciding root.

mod ode;
mod series;
mod tableau;
mod vop;

pub use ode::{integrate, integrate_ode_numeric, LinearCoeffs, OdeOptions, Trajectory};
pub use series::{
    apply_operator, fundamental_system, indicial_roots, solve_inhomogeneous, FrobeniusSystem, ODESpec, DENOMINATOR_FLOOR, ROOT_TOL,
};
pub use vop::variation_of_parameters;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrobeniusError {
    #[error("Frobenius recursion broke down at order {order} (denominator {denominator:e})")]
    RecursionBreakdown { order: usize, denominator: f64 },
    #[error("resonant denominator {denominator:e} at order {order} is below the floor")]
    ResonanceOverflow { order: usize, denominator: f64 },
    #[error("integrator step size underflow at x = {x} (h = {h:e})")]
    StepFailure { x: f64, h: f64 },
    #[error("quadrature failed at x = {x}: {reason}")]
    QuadratureFailure { x: f64, reason: String },
}
