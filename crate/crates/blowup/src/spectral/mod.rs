//! Spectral data of the linearized operator `𝓛 = −∂_RR + (d−1)(d−3)/(4R²) − pW^{p−1}` on the
//! half-line: the zero-energy pair `(φ, θ)`, the generalized eigenfunctions `φ(R, ξ)` fixed by
//! their behaviour at `R = 0`, the outgoing Jost solution `ψ⁺`, the coefficient `a(ξ)` and
//! density `ρ(ξ)`, the negative eigenvalue, the commutator potential `W₀`, the kernel `F(ξ, η)`
//! and the transference kernel.

mod closed;
mod eigen;
mod kernel;
mod table;

pub use closed::{operator_potential, operator_potential_jet, phi0, theta0, theta0_at_zero, w0_potential, THETA_GUARD};
pub use eigen::RHO_FACTOR;
pub use eigen::{eigenfunction, ground_eigenvalue, jost, jost_samples, phi_xi, spectral_density, Eigenvalue, MatchInfo, SpectralDensity};
pub use kernel::{f_kernel, f_kernel_with, transference_kernel, transference_kernel_with, FValue, KernelOptions, DIAGONAL_GAP};
pub use table::{parseval_check, zero_mode_norm_sq, ParsevalReport, SpectralTable};

use crate::frobenius::FrobeniusError;
use crate::series_core::Jet2;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("R = {r} lies in the guard band around the zero of φ; limit value attached")]
    NearZeroCrossing { r: f64, limit: Jet2 },
    #[error("Wronskian varies by {variation:e} across the matching window at ξ = {xi}")]
    MatchingFailure { xi: f64, variation: f64 },
    #[error("asymptotic expansion of the Jost solution did not reach {tol:e} at ξ = {xi}, R = {r}")]
    IterationDivergence { xi: f64, r: f64, tol: f64 },
    #[error("quadrature error estimate {estimate:e} exceeds {tol:e} for (ξ, η) = ({xi}, {eta}); {nodes} nodes, R_max = {r_max}")]
    QuadratureFailure { xi: f64, eta: f64, estimate: f64, tol: f64, nodes: usize, r_max: f64 },
    #[error("no sign change of the matching Wronskian on ξ ∈ [{lo}, {hi}]")]
    NoEigenvalue { lo: f64, hi: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Ode(#[from] FrobeniusError),
}

fn check_dimension(d: usize) -> Result<(), SpectralError> {
    if d == 4 || d == 5 {
        Ok(())
    } else {
        Err(SpectralError::InvalidArgument(format!("dimension must be 4 or 5, got {d}")))
    }
}
