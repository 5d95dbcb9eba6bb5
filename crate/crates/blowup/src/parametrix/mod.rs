//! Fourier-side machinery for the correction `ε`: the variables `τ = ν⁻¹t^{−ν}`,
//! `λ(τ) = (ντ)^{(1+ν)/ν}`, `β = λ̇/λ`; the kernels `H`, `H₀`, `H_d`; the inversion of
//! `𝒟_τ² + β𝒟_τ + ξ` with `𝒟_τ = ∂_τ − 2βξ∂_ξ`; the transference operator `𝒦` on a log-`ξ`
//! grid; and the contraction factor of the linear part of the fixed-point map.
//!
//! Fields live on `ξ ∈ {ξ_d} ∪ {0 (d = 5)} ∪ (0, ∞)`; the discrete components are carried as
//! extra coordinates `(x_d, x_0)`.

mod contraction;
mod field;
mod filon;
mod inversion;
mod transference;

pub use contraction::{beta_dot_coefficient, linear_contraction_factor, linear_part, ContractionOptions, ContractionReport};
pub use field::{bracket, FourierField, FourierGrid, FourierSource, SeparableSource};
pub use inversion::{discrete_defect, inversion_defect, norm_ratio, Defect, InversionOptions, Inverted, PointValue};
pub use transference::{log_derivative_matrix, negative_mode_coupling, TransferenceMatrix};

use crate::profiles::BlowupConstants;
use crate::spectral::{ground_eigenvalue, SpectralError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParametrixError {
    #[error("rescaled ξ = {xi} lies above the grid maximum {max}")]
    InterpolationRange { xi: f64, max: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// The time variables at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeMap {
    pub t: f64,
    pub tau: f64,
    /// `λ(τ) = (ντ)^{(1+ν)/ν} = t^{−1−ν}`.
    pub lambda: f64,
    /// `β = λ̇/λ = (1+ν)/(ντ)`.
    pub beta: f64,
    /// `β̇ = −(1+ν)/(ντ²)`.
    pub beta_dot: f64,
}

impl TimeMap {
    pub fn at_tau(nu: f64, tau: f64) -> Result<Self, ParametrixError> {
        if !(nu > 0.0 && tau > 0.0 && tau.is_finite()) {
            return Err(ParametrixError::InvalidArgument(format!("need ν > 0 and τ > 0, got ν = {nu}, τ = {tau}")));
        }
        let p = (1.0 + nu) / nu;
        Ok(Self { t: (nu * tau).powf(-1.0 / nu), tau, lambda: (nu * tau).powf(p), beta: p / tau, beta_dot: -p / (tau * tau) })
    }

    pub fn at_t(nu: f64, t: f64) -> Result<Self, ParametrixError> {
        if !(nu > 0.0 && t > 0.0 && t.is_finite()) {
            return Err(ParametrixError::InvalidArgument(format!("need ν > 0 and t > 0, got ν = {nu}, t = {t}")));
        }
        let mut m = Self::at_tau(nu, t.powf(-nu) / nu)?;
        m.t = t;
        Ok(m)
    }
}

/// Kernel values at `(σ, τ, ξ)`, `σ ≥ τ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernels {
    /// `H(σ, τ, ξ) = ξ^{−1/2} sin(ξ^{1/2} ∫_τ^σ λ⁻¹)` (the `ξ → 0` limit is the integral).
    pub h: f64,
    /// `∂_τH = −cos(ξ^{1/2} ∫_τ^σ λ⁻¹)/λ(τ)`.
    pub h_tau: f64,
    /// `H₀(τ, σ) = νσ^{(1+ν)/ν}(τ^{−1/ν} − σ^{−1/ν})`.
    pub h0: f64,
    /// `∂_τH₀ = −(σ/τ)^{(1+ν)/ν}`.
    pub h0_tau: f64,
    /// `H_d(τ, σ) = −e^{−κ|τ−σ|}/(2κ)`, `κ = |ξ_d|^{1/2}`.
    pub hd: f64,
}

/// Dimension, rate and negative eigenvalue: everything the inversion needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Parametrix {
    pub d: usize,
    pub nu: f64,
    pub xi_d: f64,
}

impl Parametrix {
    /// Locates `ξ_d` for the dimension of `c`.
    pub fn new(c: &BlowupConstants) -> Result<Self, ParametrixError> {
        let ev = ground_eigenvalue(c.d())?;
        Ok(Self { d: c.d(), nu: c.nu(), xi_d: ev.xi })
    }

    pub fn with_eigenvalue(d: usize, nu: f64, xi_d: f64) -> Result<Self, ParametrixError> {
        if !(d == 4 || d == 5) || !(nu > 0.0) || !(xi_d < 0.0) {
            return Err(ParametrixError::InvalidArgument(format!("need d ∈ {{4, 5}}, ν > 0, ξ_d < 0; got {d}, {nu}, {xi_d}")));
        }
        Ok(Self { d, nu, xi_d })
    }

    /// `(1+ν)/ν`, the exponent of `λ(τ)`.
    pub fn p(&self) -> f64 {
        (1.0 + self.nu) / self.nu
    }

    pub fn time(&self, tau: f64) -> Result<TimeMap, ParametrixError> {
        TimeMap::at_tau(self.nu, tau)
    }

    /// `∫_τ^σ λ(u)⁻¹du = ν^{−1/ν}(τ^{−1/ν} − σ^{−1/ν})`, without cancellation for `σ ≈ τ`.
    pub fn lambda_integral(&self, tau: f64, sigma: f64) -> f64 {
        let nu = self.nu;
        -(nu * tau).powf(-1.0 / nu) * (-(sigma / tau).ln() / nu).exp_m1()
    }

    pub fn kernels(&self, sigma: f64, tau: f64, xi: f64) -> Result<Kernels, ParametrixError> {
        if !(tau > 0.0 && sigma >= tau && xi >= 0.0 && sigma.is_finite() && xi.is_finite()) {
            return Err(ParametrixError::InvalidArgument(format!("kernels need σ ≥ τ > 0, ξ ≥ 0; got ({sigma}, {tau}, {xi})")));
        }
        let i = self.lambda_integral(tau, sigma);
        let k = xi.sqrt();
        let lam = self.time(tau)?.lambda;
        let h = if k * i < 1e-8 { i } else { (k * i).sin() / k };
        let p = self.p();
        let u = (sigma / tau).ln();
        let kd = (-self.xi_d).sqrt();
        Ok(Kernels {
            h,
            h_tau: -(k * i).cos() / lam,
            h0: -self.nu * sigma.powf(p) * tau.powf(-1.0 / self.nu) * (-u / self.nu).exp_m1(),
            h0_tau: -(p * u).exp(),
            hd: -(-kd * (sigma - tau).abs()).exp() / (2.0 * kd),
        })
    }
}
