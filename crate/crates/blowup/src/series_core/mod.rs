//! Truncated log-power series, Wiener-algebra norms, Pochhammer symbols, the Gauss
//! hypergeometric function, and the derivative jets every profile is carried in.
//!
//! A [`LogPowerSeries`] represents `x^β Σ_k Σ_n c[k][n] xⁿ log(x)^k` in the local variable
//! `x = z − center`. Everything here is a pure function of its inputs.

mod hyp;
mod jet;
mod logseries;

pub use hyp::{hyp2f1, hyp2f1_jet, pochhammer, Checked, HypParams};
pub use jet::{Bijet, Jet2};
pub use logseries::{logpow_combine, wiener_norm, Coeff, Combined, LogPowerSeries, SeriesOp};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("hypergeometric series diverges at z = 1 (γ − α − β = {excess} ≤ 0)")]
    NonConvergent { excess: f64 },
    #[error("γ = {0} is a non-positive integer")]
    InvalidGamma(f64),
    #[error("argument z = {0} lies outside [0, 1]")]
    ArgumentRange(f64),
    #[error("series did not reach tolerance after {terms} terms")]
    Stalled { terms: usize },
    #[error("log-power index {k} exceeds the series degree {k_max}")]
    IndexOutOfRange { k: usize, k_max: usize },
    #[error("series are expanded around different centers")]
    CenterMismatch,
    #[error("offset exponents {0} and {1} do not differ by an integer")]
    ExponentMismatch(f64, f64),
    #[error("radius {r} exceeds the convergence radius {radius}")]
    RadiusExceeded { r: f64, radius: f64 },
}
