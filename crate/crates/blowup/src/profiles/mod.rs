//! Closed-form building blocks of the blow-up ansatz: the ground state `W`, the leading
//! profile `u₀ = λ^{(d−2)/2} W(R)` with its error `t²e₀`, the first correction `V₁`, the
//! hypergeometric profile `H`, transition functions and the outside-cone extension.
//!
//! Scaling conventions: `λ(t) = t^{−1−ν}`, `R = λ r`, `a = r/t`, `q = (d−2)/2`. Every profile
//! of the form `t^σ f(R)` has its time derivatives at fixed `r` generated by
//! `t∂_t ↦ σ + κ R∂_R` with `κ = −(1+ν)`, which is how the jets below are filled.

mod extend;
mod v1;

pub use extend::{extend_outside_cone, ExtensionKernel};
pub use v1::{FarExpansion, V1Profile};

use crate::frobenius::FrobeniusError;
use crate::series_core::{hyp2f1, hyp2f1_jet, Bijet, HypParams, Jet2, SeriesError};
use std::sync::{Arc, OnceLock};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("dimension {0} is not supported (expected 4 or 5)")]
    Dimension(usize),
    #[error("rate ν = {nu} violates ν > {min}")]
    Rate { nu: f64, min: f64 },
    #[error("region exponent ε = {0} outside (0, 1/3)")]
    Epsilon(f64),
    #[error("cone height t₀ = {0} must lie in (0, 1)")]
    ConeHeight(f64),
    #[error("R = 0 needs an even jet (vanishing first derivative)")]
    OriginSingular,
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Frobenius(#[from] FrobeniusError),
}

/// Parameters of the construction plus the derived constants.
#[derive(Debug, Clone)]
pub struct BlowupConstants {
    d: usize,
    nu: f64,
    t0: f64,
    n0: usize,
    eps: f64,
    hyp: HypParams,
    v1: OnceLock<Arc<V1Profile>>,
}

impl BlowupConstants {
    /// Constants for dimension `d ∈ {4, 5}` and rate `ν` (`ν > 3` for d = 5, `ν > 1` for d = 4),
    /// with default cone height, target order `N₀ = 10` and `ε = 0.05`.
    pub fn new(d: usize, nu: f64) -> Result<Self, ProfileError> {
        let min = match d {
            5 => 3.0,
            4 => 1.0,
            _ => return Err(ProfileError::Dimension(d)),
        };
        if !(nu > min) || !nu.is_finite() {
            return Err(ProfileError::Rate { nu, min });
        }
        // t₀ such that t₀λ(t₀) = 10³ (d = 5) or 10 (d = 4)
        let t0 = if d == 5 { 1e3f64.powf(-1.0 / nu) } else { 10f64.powf(-1.0 / nu) };
        let s = scaling_exponent(d, nu, 1);
        let hyp = HypParams::new(-s / 2.0, -s / 2.0 + 0.5, d as f64 / 2.0)?;
        Ok(Self { d, nu, t0, n0: 10, eps: 0.05, hyp, v1: OnceLock::new() })
    }

    pub fn with_t0(mut self, t0: f64) -> Result<Self, ProfileError> {
        if !(t0 > 0.0 && t0 < 1.0) {
            return Err(ProfileError::ConeHeight(t0));
        }
        self.t0 = t0;
        Ok(self)
    }

    pub fn with_eps(mut self, eps: f64) -> Result<Self, ProfileError> {
        if !(eps > 0.0 && eps < 1.0 / 3.0) {
            return Err(ProfileError::Epsilon(eps));
        }
        self.eps = eps;
        Ok(self)
    }

    pub fn with_n0(mut self, n0: usize) -> Self {
        self.n0 = n0;
        self
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn hyp(&self) -> HypParams {
        self.hyp
    }

    /// `p = (d+2)/(d−2)`.
    pub fn p(&self) -> f64 {
        (self.d as f64 + 2.0) / (self.d as f64 - 2.0)
    }

    /// `q = (d−2)/2`, the scaling weight of `u₀`.
    pub fn q(&self) -> f64 {
        (self.d as f64 - 2.0) / 2.0
    }

    /// `κ = −(1+ν)`, so that `λ = t^κ`.
    pub fn kappa(&self) -> f64 {
        -(1.0 + self.nu)
    }

    /// `d(d−2)`, the length scale squared of `W`.
    pub fn w_scale(&self) -> f64 {
        (self.d * (self.d - 2)) as f64
    }

    /// `λ(t) = t^{−1−ν}`.
    pub fn lambda(&self, t: f64) -> f64 {
        t.powf(self.kappa())
    }

    /// `tλ(t) = t^{−ν}`.
    pub fn t_lambda(&self, t: f64) -> f64 {
        t.powf(-self.nu)
    }

    /// `C₁`: for d = 5 the limit of `V₁` at infinity, `(105/128)πν(1+ν)`; for d = 4 the
    /// coefficient of the logarithmic growth `V₁ ~ C₁ log R`, equal to `4ν(1+ν)`.
    pub fn c1(&self) -> f64 {
        if self.d == 5 {
            105.0 / 128.0 * std::f64::consts::PI * self.nu * (1.0 + self.nu)
        } else {
            4.0 * self.nu * (1.0 + self.nu)
        }
    }

    /// `C₂ = C₁ s(s−1)`.
    pub fn c2(&self) -> f64 {
        let s = self.s();
        self.c1() * s * (s - 1.0)
    }

    /// Time exponent of `λ^q (tλ)^{−2}`: `s = −q(1+ν) + 2ν`.
    pub fn s(&self) -> f64 {
        scaling_exponent(self.d, self.nu, 1)
    }

    /// Time exponent of `λ^q (tλ)^{−2k}`.
    pub fn sigma(&self, k: usize) -> f64 {
        scaling_exponent(self.d, self.nu, k)
    }

    /// The cached `V₁` profile (built on first use).
    pub fn v1_profile(&self) -> Result<Arc<V1Profile>, ProfileError> {
        if let Some(p) = self.v1.get() {
            return Ok(p.clone());
        }
        let built = Arc::new(V1Profile::build(self)?);
        Ok(self.v1.get_or_init(|| built).clone())
    }
}

fn scaling_exponent(d: usize, nu: f64, k: usize) -> f64 {
    -(1.0 + nu) * (d as f64 - 2.0) / 2.0 + 2.0 * k as f64 * nu
}

/// `W(r) = (1 + r²/(d(d−2)))^{−(d−2)/2}` with exact radial derivatives.
pub fn ground_state(d: usize, r: f64) -> Jet2 {
    let b = w_bijet(d, &Bijet::univariate(r, 1.0, 0.0));
    Jet2::radial(b.v, b.dx, b.dxx)
}

/// `W` composed with an arbitrary jet argument.
pub fn w_bijet(d: usize, r: &Bijet) -> Bijet {
    let c = (d * (d - 2)) as f64;
    let q = (d as f64 - 2.0) / 2.0;
    let x = (*r * *r) / c + 1.0;
    x.powf(-q)
}

/// `(W, DW, D²W)` with `D = R∂_R`, each as a jet in `R`.
fn w_dilations(d: usize, r: f64) -> [Bijet; 3] {
    let c = (d * (d - 2)) as f64;
    let q = (d as f64 - 2.0) / 2.0;
    let rr = Bijet::univariate(r, 1.0, 0.0);
    let x = rr * rr / c;
    let one_x = x + 1.0;
    let w = one_x.powf(-q);
    let dw = x * one_x.powf(-q - 1.0) * (-2.0 * q);
    let d2w = x * one_x.powf(-q - 2.0) * (x * (-q) + 1.0) * (-4.0 * q);
    [w, dw, d2w]
}

/// Jet of `t^σ f(R)` at fixed `r` given the jet of `f` in `R`:
/// `t∂_t ↦ σ + κD`, so `t²∂_tt ↦ (σ+κD)² − (σ+κD)`.
pub fn scaling_jet(sigma: f64, kappa: f64, t: f64, r: f64, f: &Bijet) -> Jet2 {
    let amp = t.powf(sigma);
    let df = r * f.dx;
    let d2f = r * f.dx + r * r * f.dxx;
    let op1 = sigma * f.v + kappa * df;
    let op2 = sigma * sigma * f.v + 2.0 * sigma * kappa * df + kappa * kappa * d2f;
    Jet2 { u: amp * f.v, u_r: amp * f.dx, u_rr: amp * f.dxx, u_t: amp * op1 / t, u_tt: amp * (op2 - op1) / (t * t) }
}

/// `E₀(R) = −[κ²(q+D)² − κ(q+D)]W`, the `λ^q`-coefficient of `t²e₀`, in either dimension.
pub fn e0_profile(c: &BlowupConstants, r: f64) -> Bijet {
    let [w, dw, d2w] = w_dilations(c.d, r);
    let (k, q) = (c.kappa(), c.q());
    let qd = w * q + dw;
    let qd2 = w * (q * q) + dw * (2.0 * q) + d2w;
    (qd2 * (k * k) - qd * k).scale(-1.0)
}

/// The printed five-dimensional closed form of `E₀`.
pub fn e0_closed_form_d5(nu: f64, r: f64) -> Bijet {
    let rr = Bijet::univariate(r, 1.0, 0.0);
    let r2 = rr * rr;
    let num = (r2 * r2) * (3.0 * nu + 1.0) - r2 * (210.0 * (nu + 1.0)) + 225.0 * (3.0 * nu + 5.0);
    let den = (r2 + 15.0).powf(3.5) * 4.0;
    num / den * (-45.0 * 15f64.sqrt() * (nu + 1.0))
}

/// `u₀ = λ^q W(R)` and `t²e₀` as jets at `(R, t)`.
///
/// For d = 5 the error comes from the printed closed form; for d = 4 its value is assembled
/// as `t²(F(u₀) − □u₀)` from the jet of `u₀`. Derivative channels of `t²e₀` always come from
/// the exact dilation form of `E₀`.
pub fn u0_e0(c: &BlowupConstants, r: f64, t: f64) -> (Jet2, Jet2) {
    let (k, q) = (c.kappa(), c.q());
    let w = w_bijet(c.d, &Bijet::univariate(r, 1.0, 0.0));
    let u0 = scaling_jet(k * q, k, t, r, &w);
    let e = if c.d == 5 { e0_closed_form_d5(c.nu, r) } else { e0_profile(c, r) };
    let mut t2e0 = scaling_jet(k * q, k, t, r, &e);
    if c.d == 4 {
        let lam = c.lambda(t);
        let f = u0.u.abs().powf(c.p() - 1.0) * u0.u;
        t2e0.u = t * t * (f - u0.dalembertian(c.d, lam, r));
    }
    (u0, t2e0)
}

/// `V₁(R)` with radial derivatives; `v₁ = λ^q (tλ)^{−2} V₁(R)`.
pub fn v1(c: &BlowupConstants, r: f64) -> Result<Jet2, ProfileError> {
    let b = c.v1_profile()?.eval(r);
    Ok(Jet2::radial(b.v, b.dx, b.dxx))
}

/// `H(z) = 4C₁(F(α̃, β̃; γ̃; z) − 1)`.
pub fn capital_h(c: &BlowupConstants, z: f64) -> Result<f64, ProfileError> {
    if z == 0.0 {
        return Ok(0.0);
    }
    Ok(4.0 * c.c1() * (hyp2f1(c.hyp, z, 1e-15)? - 1.0))
}

/// `(H, H', H'')` at `z`.
pub fn capital_h_jet(c: &BlowupConstants, z: f64) -> Result<[f64; 3], ProfileError> {
    let [f, f1, f2] = hyp2f1_jet(c.hyp, z, 1e-15)?;
    let k = 4.0 * c.c1();
    Ok([if z == 0.0 { 0.0 } else { k * (f - 1.0) }, k * f1, k * f2])
}

/// Standard transition `χ(y) = f(y)/(f(y)+f(1−y))`, `f(y) = e^{−1/y}` for `y > 0`, with its
/// first two derivatives. Evaluated in the logistic form `1/(1+e^{E})`,
/// `E = 1/y − 1/(1−y)`, which is monotone in floating point.
pub fn chi_unit(y: f64) -> [f64; 3] {
    if y <= 0.0 {
        return [0.0, 0.0, 0.0];
    }
    if y >= 1.0 {
        return [1.0, 0.0, 0.0];
    }
    let z = 1.0 - y;
    let e = 1.0 / y - 1.0 / z;
    let e1 = -1.0 / (y * y) - 1.0 / (z * z);
    let e2 = 2.0 / y.powi(3) - 2.0 / z.powi(3);
    let chi = 1.0 / (1.0 + e.exp());
    let g = chi * (1.0 - chi);
    [chi, -g * e1, g * (1.0 - 2.0 * chi) * e1 * e1 - g * e2]
}

/// `χ_{[a,∞)}(x)`: vanishes near `a`, equals one from `2a` on.
pub fn chi_transition(a: f64, x: f64) -> f64 {
    chi_unit((x - a) / a.abs())[0]
}

/// `𝓛u = −u'' − (d−1)/R u' − pW^{p−1}u` from jet channels; at `R = 0` the jet must be even.
pub fn apply_linearized(c: &BlowupConstants, jet: &Jet2, r: f64) -> Result<f64, ProfileError> {
    let pot = c.p() * ground_state(c.d, r).u.powf(c.p() - 1.0);
    if r == 0.0 {
        if jet.u_r != 0.0 {
            return Err(ProfileError::OriginSingular);
        }
        return Ok(-(c.d as f64) * jet.u_rr - pot * jet.u);
    }
    Ok(-jet.u_rr - (c.d as f64 - 1.0) / r * jet.u_r - pot * jet.u)
}

/// `pW^{p−1}` at `R`.
pub fn potential(c: &BlowupConstants, r: f64) -> f64 {
    c.p() * (1.0 + r * r / c.w_scale()).powi(-2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c5(nu: f64) -> BlowupConstants {
        BlowupConstants::new(5, nu).unwrap()
    }

    #[test]
    fn constants_and_validation() {
        let c = c5(6.0);
        assert_relative_eq!(c.c1(), 4410.0 * std::f64::consts::PI / 128.0, max_relative = 1e-15);
        assert_relative_eq!(c.c2(), 0.25 * 3.0 * 1.0 * c.c1(), max_relative = 1e-14);
        assert_relative_eq!(c.s(), 1.5, epsilon = 1e-15);
        assert_relative_eq!(c.lambda(0.1), 1e7, max_relative = 1e-12);
        assert!(BlowupConstants::new(5, 3.0).is_err());
        assert!(BlowupConstants::new(4, 1.0).is_err());
        assert!(BlowupConstants::new(3, 4.0).is_err());
        assert!(c5(6.0).with_eps(0.4).is_err());
        assert_relative_eq!(BlowupConstants::new(4, 3.0).unwrap().s(), 2.0, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn hypergeometric_excess_identity(nu in 3.01f64..40.0) {
            let h = c5(nu).hyp();
            prop_assert!((h.excess() - (0.5 + nu / 2.0)).abs() < 1e-13 * nu.max(1.0));
        }

        #[test]
        fn linearized_operator_is_linear(a in -3.0f64..3.0, r in 0.01f64..20.0,
                                         u in -1.0f64..1.0, v in -1.0f64..1.0) {
            let c = c5(6.0);
            let j1 = Jet2::radial(u, v, u * v);
            let j2 = Jet2::radial(v, -u, 2.0);
            let lhs = apply_linearized(&c, &(j1.scale(a) + j2), r).unwrap();
            let rhs = a * apply_linearized(&c, &j1, r).unwrap() + apply_linearized(&c, &j2, r).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn ground_state_values() {
        assert_eq!(ground_state(5, 0.0).u, 1.0);
        assert_relative_eq!(ground_state(5, 15f64.sqrt()).u, 2f64.powf(-1.5), max_relative = 1e-15);
        for d in [4, 5] {
            let (r1, r2) = (1e4, 1e5);
            let slope = (ground_state(d, r2).u / ground_state(d, r1).u).ln() / 10f64.ln();
            assert!((slope + (d as f64 - 2.0)).abs() < 1e-6);
            // −ΔW = W^p
            for r in [0.3, 2.0, 9.0] {
                let w = ground_state(d, r);
                let lap = w.radial_laplacian(d, r);
                let p = (d as f64 + 2.0) / (d as f64 - 2.0);
                assert_relative_eq!(-lap, w.u.powf(p), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn e0_closed_form_matches_dilation_form_and_jets() {
        let c = c5(6.0);
        assert_relative_eq!(e0_closed_form_d5(6.0, 0.0).v, -120.75, max_relative = 1e-14);
        let t = 0.3;
        let lam = c.lambda(t);
        for i in 0..=200 {
            let r = 0.5 * i as f64;
            let a = e0_closed_form_d5(6.0, r);
            let b = e0_profile(&c, r);
            assert_relative_eq!(a.v, b.v, max_relative = 1e-12, epsilon = 1e-14);
            assert_relative_eq!(a.dxx, b.dxx, max_relative = 1e-10, epsilon = 1e-13);
            let (u0, t2e0) = u0_e0(&c, r, t);
            let direct = t * t * (u0.u.powf(c.p()) - u0.dalembertian(5, lam, r));
            assert!((direct - t2e0.u).abs() <= 1e-8 * t2e0.u.abs().max(lam.powf(1.5) * 1e-6));
        }
    }

    #[test]
    fn d4_error_from_jets_matches_dilation_form() {
        let c = BlowupConstants::new(4, 3.0).unwrap();
        let t = 0.5;
        for r in [0.0, 0.4, 3.0, 40.0] {
            let (_, e) = u0_e0(&c, r, t);
            let expect = c.lambda(t) * e0_profile(&c, r).v;
            assert_relative_eq!(e.u, expect, max_relative = 1e-9);
        }
    }

    #[test]
    fn scaling_jet_time_derivatives_match_finite_differences() {
        let c = c5(6.0);
        let r_phys = 3e-7;
        let f = |t: f64| u0_e0(&c, r_phys * c.lambda(t), t).1.u;
        let t = 0.2;
        let h = 1e-3;
        let (_, j) = u0_e0(&c, r_phys * c.lambda(t), t);
        // fourth-order stencils
        let d1 = (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h);
        let d2 = (-f(t - 2.0 * h) + 16.0 * f(t - h) - 30.0 * f(t) + 16.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h * h);
        assert_relative_eq!(j.u_t, d1, max_relative = 1e-6);
        assert_relative_eq!(j.u_tt, d2, max_relative = 1e-5);
    }

    #[test]
    fn capital_h_values() {
        let c = c5(6.0);
        assert_eq!(capital_h(&c, 0.0).unwrap(), 0.0);
        let h1 = capital_h_jet(&c, 0.0).unwrap()[1];
        assert_relative_eq!(h1, 0.3 * c.c1(), max_relative = 1e-12);
        assert_relative_eq!(h1, 32.47, max_relative = 1e-3);
    }

    #[test]
    fn capital_h_sign() {
        for nu in [6.0, 9.0] {
            let c = c5(nu);
            for i in 1..2000 {
                let z = i as f64 / 2000.0;
                assert!(capital_h(&c, z).unwrap() > 0.0, "ν={nu} z={z}");
            }
        }
        // for 3 < ν < 5, α̃β̃ = s(s−1)/4 < 0 and H starts out negative
        for nu in [3.5, 4.0] {
            let c = c5(nu);
            assert!(c.hyp().alpha * c.hyp().beta < 0.0);
            assert!(capital_h(&c, 1e-3).unwrap() < 0.0);
        }
    }

    #[test]
    fn chi_transition_shape() {
        let a = 0.7;
        let mut prev = 0.0;
        for i in 0..10_000 {
            let x = 3.0 * a * i as f64 / 10_000.0;
            let v = chi_transition(a, x);
            if x <= a {
                assert_eq!(v, 0.0);
            }
            if x >= 2.0 * a {
                assert_eq!(v, 1.0);
            }
            assert!(v >= prev);
            prev = v;
        }
        let y = 0.37;
        let h = 1e-5;
        let [_, d1, d2] = chi_unit(y);
        let f = |y| chi_unit(y)[0];
        assert_relative_eq!(d1, (f(y + h) - f(y - h)) / (2.0 * h), max_relative = 1e-8);
        assert_relative_eq!(d2, (f(y + h) - 2.0 * f(y) + f(y - h)) / (h * h), max_relative = 1e-4);
    }

    #[test]
    fn origin_requires_even_jet() {
        let c = c5(6.0);
        assert_eq!(apply_linearized(&c, &Jet2::radial(1.0, 0.5, 0.0), 0.0), Err(ProfileError::OriginSingular));
        assert!(apply_linearized(&c, &Jet2::radial(1.0, 0.0, 0.0), 0.0).is_ok());
    }
}
