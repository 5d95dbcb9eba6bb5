//! Inversion of `𝒟_τ² + β𝒟_τ + ξ`.
//!
//! Along a characteristic `λ(τ)²ξ = const` the operator `𝒟_τ` is `d/dτ`, and with
//! `s = ∫λ⁻¹` the equation becomes `y_ss + λ(τ)²ξ y = λ²f`. The solution decaying with `f` is
//!
//! `x(τ, ξ) = ∫_τ^∞ H(σ, τ, λ(τ)²ξ) λ(σ) f(σ, λ(τ)²ξ/λ(σ)²) dσ`,
//!
//! which in `s̃ = ντ(1 − e^{−u/ν})`, `σ = τe^u`, reads
//! `x = ∫ sin(√ξ s̃)/√ξ · e^{2pu} f(τe^u, ξe^{−2pu}) ds̃` and
//! `𝒟_τx = −∫ cos(√ξ s̃) e^{2pu} f ds̃`, `p = (1+ν)/ν`. The range of `s̃` is bounded and the
//! integrand smooth, so Filon panels uniform in `u` resolve it whatever the frequency.
//!
//! The discrete components solve ODEs in `τ` alone: `x_0'' + βx_0' = f_0` through `H₀`, and
//! `x_d'' + βx_d' − κ²x_d = f_d`, `κ = |ξ_d|^{1/2}`, whose bounded solution (source extended by
//! zero below `τ₀`) is found as a two-point boundary value problem on a window of a few dozen
//! decay lengths around `τ`.

use super::field::{FourierField, FourierGrid, FourierSource};
use super::filon::FilonRule;
use super::{Parametrix, ParametrixError};
use gauss_quad::GaussLegendre;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionOptions {
    /// Gauss nodes per Filon panel.
    pub filon_order: usize,
    /// Largest `σ/τ` integrated; beyond it the `τ^{−N}` decay bounds the tail.
    pub cut_ratio: f64,
    /// The cut is also placed where the integrand has decayed by `e^{−tail_exponent}`.
    pub tail_exponent: f64,
    /// Mesh of the `x_d` boundary value problem, in units of `1/κ`.
    pub bvp_step: f64,
    /// Half-width of the `x_d` window, in units of `1/κ`.
    pub bvp_half_width: f64,
}

impl Default for InversionOptions {
    fn default() -> Self {
        Self { filon_order: 12, cut_ratio: 1e3, tail_exponent: 37.0, bvp_step: 0.02, bvp_half_width: 36.0 }
    }
}

/// Scaled `τ^{N−2}x` and `τ^{N−1}𝒟_τx` at one point, with the truncation estimate of each.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointValue {
    pub x: f64,
    pub dx: f64,
    pub tail_x: f64,
    pub tail_dx: f64,
}

/// Output of [`Parametrix::apply_inversion`]: `x` with weight `α + ½` and order `N − 2`,
/// `𝒟_τx` with weight `α` and order `N − 1`.
#[derive(Debug, Clone)]
pub struct Inverted {
    pub x: FourierField,
    pub dx: FourierField,
    /// Largest truncation estimate met.
    pub tail: f64,
}

/// Residual of the inverted equation at one point, from differences along the characteristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Defect {
    /// `|𝒟²x + β𝒟x + ξx − f| / (|𝒟²x| + β|𝒟x| + ξ|x| + |f|)`.
    pub relative: f64,
    /// `|d x/dτ − 𝒟x| / (|d x/dτ| + |𝒟x|)`: the returned `𝒟x` against differences of `x`.
    pub derivative_mismatch: f64,
}

/// `(‖x‖_{N−2, α+½} + ‖𝒟x‖_{N−1, α}) / ‖f‖_{N, α}`.
pub fn norm_ratio(grid: &FourierGrid, inv: &Inverted, f_norm: f64) -> f64 {
    (grid.field_norm(&inv.x) + grid.field_norm(&inv.dx)) / f_norm
}

impl Parametrix {
    fn check_order(&self, n: f64) -> Result<(), ParametrixError> {
        let floor = 2.0 * self.p() + 1.0;
        if n > floor {
            Ok(())
        } else {
            Err(ParametrixError::InvalidArgument(format!("decay order N = {n} must exceed 2(1+ν)/ν + 1 = {floor}")))
        }
    }

    /// Panel edges in `u = ln(σ/τ)` and the per-unit decay rate of the `s̃` integrand.
    fn u_panels(&self, n: f64, opts: &InversionOptions) -> (Vec<f64>, f64) {
        let rate = n - 2.0 * self.p() + 1.0 / self.nu;
        let u_cut = opts.cut_ratio.ln().min(opts.tail_exponent / rate);
        let du = (0.5 / n).min(0.05);
        let m = (u_cut / du).ceil() as usize;
        ((0..=m).map(|k| u_cut * k as f64 / m as f64).collect(), rate)
    }

    /// `τ^{N−2}x(τ, ξ)` and `τ^{N−1}𝒟_τx(τ, ξ)` for `ξ ≥ 0` by Filon quadrature in `s̃`.
    pub fn invert_point(&self, src: &dyn FourierSource, tau: f64, xi: f64, opts: &InversionOptions) -> Result<PointValue, ParametrixError> {
        let n = src.order();
        self.check_order(n)?;
        if !(tau > 0.0 && xi >= 0.0 && xi.is_finite()) {
            return Err(ParametrixError::InvalidArgument(format!("need τ > 0, ξ ≥ 0; got ({tau}, {xi})")));
        }
        let (p, nu) = (self.p(), self.nu);
        let rule = FilonRule::new(opts.filon_order);
        let omega = xi.sqrt();
        let s_of = |u: f64| -nu * tau * (-u / nu).exp_m1();
        let u_of = |s: f64| -nu * (-s / (nu * tau)).ln_1p();
        // τ^N e^{2pu} f(τe^u, ξe^{−2pu})
        let g = |u: f64| -> Result<f64, ParametrixError> {
            Ok(((2.0 * p - n) * u).exp() * src.scaled(tau * u.exp(), xi * (-2.0 * p * u).exp())?)
        };
        let (edges, rate) = self.u_panels(n, opts);
        let (mut x, mut dx) = (0.0, 0.0);
        let mut vals = vec![0.0; rule.nodes.len()];
        for w in edges.windows(2) {
            let (a, b) = (s_of(w[0]), s_of(w[1]));
            let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
            for (v, t) in vals.iter_mut().zip(&rule.nodes) {
                *v = g(u_of(m + r * t))?;
            }
            let (si, ci) = rule.panel(a, b, omega, &vals);
            x += si;
            dx -= ci;
        }
        let u_cut = *edges.last().unwrap();
        let tail = g(u_cut)?.abs() * tau * (-u_cut / nu).exp() / rate;
        let s_max = nu * tau;
        let tail_x = tail * if omega > 0.0 { (1.0 / omega).min(s_max) } else { s_max };
        let t2 = tau * tau;
        Ok(PointValue { x: x / t2, dx: dx / tau, tail_x: tail_x / t2, tail_dx: tail / tau })
    }

    /// `(τ^{N−2}x_0, τ^{N−1}𝒟_τx_0)` from `H₀` (d = 5).
    pub fn invert_zero_mode(&self, src: &dyn FourierSource, tau: f64, opts: &InversionOptions) -> Result<(f64, f64), ParametrixError> {
        self.check_order(src.order())?;
        let (p, nu) = (self.p(), self.nu);
        let (edges, _) = self.u_panels(src.order(), opts);
        let gl = GaussLegendre::new(opts.filon_order).expect("valid Legendre rule");
        let n = src.order();
        let (mut x, mut dx) = (0.0, 0.0);
        for w in edges.windows(2) {
            for &(t, wt) in gl.as_node_weight_pairs() {
                let u = 0.5 * (w[0] + w[1]) + 0.5 * (w[1] - w[0]) * t;
                // τ^{N−1}σ f_0(σ) du
                let q = 0.5 * (w[1] - w[0]) * wt * ((1.0 - n) * u).exp() * src.scaled_discrete(tau * u.exp()).1;
                // H₀ = νσ^p τ^{−1/ν}(1 − e^{−u/ν}) = ντ e^{pu}(1 − e^{−u/ν}), ∂_τH₀ = −e^{pu}
                x += -nu * (p * u).exp() * (-u / nu).exp_m1() * q;
                dx -= (p * u).exp() * q;
            }
        }
        Ok((x, dx))
    }

    /// `(τ^{N−2}x_d, τ^{N−1}x_d')` at `τ`: second-order differences on a window around `τ`, Robin condition
    /// `x' = κx` at `τ₀` (the bounded continuation below `τ₀`), adiabatic values `−f_d/κ²` at
    /// window ends away from `τ₀`, and one Richardson step.
    pub fn invert_negative_mode(&self, src: &dyn FourierSource, tau: f64, opts: &InversionOptions) -> Result<(f64, f64), ParametrixError> {
        let tau0 = src.start();
        if !(tau >= tau0) {
            return Err(ParametrixError::InvalidArgument(format!("τ = {tau} precedes the source start {tau0}")));
        }
        let kappa = (-self.xi_d).sqrt();
        let half = opts.bvp_half_width / kappa;
        let a = tau0.max(tau - half);
        let h0 = opts.bvp_step / kappa;
        let (m1, h) = if tau > a {
            let m1 = ((tau - a) / h0).ceil() as usize;
            (m1, (tau - a) / m1 as f64)
        } else {
            (0, h0)
        };
        let m2 = (half / h).ceil() as usize;
        let coarse = self.bvp(src, tau, a, h, m1, m2, a == tau0, kappa)?;
        let fine = self.bvp(src, tau, a, 0.5 * h, 2 * m1, 2 * m2, a == tau0, kappa)?;
        // the boundary value problem is solved for τ^N x_d
        Ok(((4.0 * fine.0 - coarse.0) / (3.0 * tau * tau), (4.0 * fine.1 - coarse.1) / (3.0 * tau)))
    }

    #[allow(clippy::too_many_arguments)]
    fn bvp(
        &self,
        src: &dyn FourierSource,
        tau: f64,
        a: f64,
        h: f64,
        m1: usize,
        m2: usize,
        robin: bool,
        kappa: f64,
    ) -> Result<(f64, f64), ParametrixError> {
        let n = m1 + m2 + 1;
        let k2 = kappa * kappa;
        let t = |i: usize| a + h * i as f64;
        // rows: lo·x_{i−1} + di·x_i + up·x_{i+1} = rhs
        let mut lo = vec![0.0; n];
        let mut di = vec![0.0; n];
        let mut up = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            let ti = t(i);
            let f = (ti / tau).powf(-src.order()) * src.scaled_discrete(ti).0;
            if i == n - 1 || (i == 0 && !robin) {
                di[i] = 1.0;
                rhs[i] = -f / k2;
                continue;
            }
            let beta = self.p() / ti;
            let (l, c, u) = (1.0 / (h * h) - beta / (2.0 * h), -2.0 / (h * h) - k2, 1.0 / (h * h) + beta / (2.0 * h));
            if i == 0 {
                // ghost value x_{−1} = x_1 − 2hκx_0
                di[0] = c - 2.0 * h * kappa * l;
                up[0] = u + l;
            } else {
                lo[i] = l;
                di[i] = c;
                up[i] = u;
            }
            rhs[i] = f;
        }
        // Thomas algorithm
        for i in 1..n {
            let w = lo[i] / di[i - 1];
            di[i] -= w * up[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut x = vec![0.0; n];
        x[n - 1] = rhs[n - 1] / di[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = (rhs[i] - up[i] * x[i + 1]) / di[i];
        }
        let dx = if m1 == 0 && robin { kappa * x[0] } else { (x[m1 + 1] - x[m1 - 1]) / (2.0 * h) };
        Ok((x[m1], dx))
    }

    /// `x` and `𝒟_τx` at every `(τ, ξ)` of the given nodes, points in parallel.
    pub fn apply_inversion(
        &self,
        grid: &FourierGrid,
        src: &dyn FourierSource,
        tau_nodes: &[f64],
        alpha: f64,
        opts: &InversionOptions,
    ) -> Result<Inverted, ParametrixError> {
        let n = src.order();
        self.check_order(n)?;
        if grid.d != self.d {
            return Err(ParametrixError::InvalidArgument("grid and parametrix dimensions differ".into()));
        }
        let nx = grid.xi.len();
        let pts = crate::par::try_map_range(tau_nodes.len() * nx, |i| self.invert_point(src, tau_nodes[i / nx], grid.xi[i % nx], opts))?;
        let disc = crate::par::try_map_range(tau_nodes.len(), |k| -> Result<_, ParametrixError> {
            let d = self.invert_negative_mode(src, tau_nodes[k], opts)?;
            let z = if self.d == 5 { self.invert_zero_mode(src, tau_nodes[k], opts)? } else { (0.0, 0.0) };
            Ok((d, z))
        })?;
        let off = grid.offset();
        let rows = |pick: &dyn Fn(&PointValue) -> f64, which: usize| -> Vec<Vec<f64>> {
            (0..tau_nodes.len())
                .map(|k| {
                    let (dd, zz) = disc[k];
                    let mut r = vec![if which == 0 { dd.0 } else { dd.1 }];
                    if off == 2 {
                        r.push(if which == 0 { zz.0 } else { zz.1 });
                    }
                    r.extend((0..nx).map(|j| pick(&pts[k * nx + j])));
                    r
                })
                .collect()
        };
        let x = FourierField::from_rows(grid, tau_nodes.to_vec(), &rows(&|v| v.x, 0), alpha + 0.5, n - 2.0)?;
        let dx = FourierField::from_rows(grid, tau_nodes.to_vec(), &rows(&|v| v.dx, 1), alpha, n - 1.0)?;
        let tail = pts.iter().map(|v| v.tail_x.abs().max(v.tail_dx.abs())).fold(0.0, f64::max);
        Ok(Inverted { x, dx, tail })
    }
}

fn five_point(v: &[f64; 5], h: f64) -> f64 {
    (v[0] - 8.0 * v[1] + 8.0 * v[3] - v[4]) / (12.0 * h)
}

/// Defect of the inversion at `(τ, ξ)`, `ξ > 0`: `x` and `𝒟x` are recomputed at four nearby
/// points of the characteristic through `(τ, ξ)` and differenced with a fourth-order stencil.
pub fn inversion_defect(
    par: &Parametrix,
    src: &dyn FourierSource,
    tau: f64,
    xi: f64,
    opts: &InversionOptions,
) -> Result<Defect, ParametrixError> {
    let h = 0.02 * tau / src.order();
    let lam = par.time(tau)?.lambda;
    let mut xs = [0.0; 5];
    let mut ds = [0.0; 5];
    for (i, k) in (-2i32..=2).enumerate() {
        let tk = tau + k as f64 * h;
        let xk = xi * (lam / par.time(tk)?.lambda).powi(2);
        let v = par.invert_point(src, tk, xk, opts)?;
        // τ^N x(τ_k) and τ^N 𝒟x(τ_k)
        let n = src.order();
        xs[i] = v.x * tau * tau * (tau / tk).powf(n - 2.0);
        ds[i] = v.dx * tau * (tau / tk).powf(n - 1.0);
    }
    let beta = par.time(tau)?.beta;
    let d1 = five_point(&xs, h);
    let d2 = five_point(&ds, h);
    let f = src.scaled(tau, xi)?;
    Ok(Defect {
        relative: (d2 + beta * ds[2] + xi * xs[2] - f).abs() / (d2.abs() + beta * ds[2].abs() + xi * xs[2].abs() + f.abs()),
        derivative_mismatch: (d1 - ds[2]).abs() / (d1.abs() + ds[2].abs()),
    })
}

/// Defects of the discrete components at `τ`: `(x_d, x_0)`; the second is zero for d = 4.
pub fn discrete_defect(
    par: &Parametrix,
    src: &dyn FourierSource,
    tau: f64,
    opts: &InversionOptions,
) -> Result<(Defect, Defect), ParametrixError> {
    let kappa = (-par.xi_d).sqrt();
    let h = (0.02 * tau / src.order()).min(0.05 / kappa);
    let beta = par.time(tau)?.beta;
    let (fd, f0) = src.scaled_discrete(tau);
    let n = src.order();
    let mut out = Vec::new();
    for (which, coef, f) in [(0, par.xi_d, fd), (1, 0.0, f0)] {
        if which == 1 && par.d == 4 {
            out.push(Defect { relative: 0.0, derivative_mismatch: 0.0 });
            continue;
        }
        let mut xs = [0.0; 5];
        let mut ds = [0.0; 5];
        for (i, k) in (-2i32..=2).enumerate() {
            let tk = tau + k as f64 * h;
            let v = if which == 0 { par.invert_negative_mode(src, tk, opts)? } else { par.invert_zero_mode(src, tk, opts)? };
            xs[i] = v.0 * tau * tau * (tau / tk).powf(n - 2.0);
            ds[i] = v.1 * tau * (tau / tk).powf(n - 1.0);
        }
        let (d1, d2) = (five_point(&xs, h), five_point(&ds, h));
        out.push(Defect {
            relative: (d2 + beta * ds[2] + coef * xs[2] - f).abs() / (d2.abs() + beta * ds[2].abs() + coef.abs() * xs[2].abs() + f.abs()),
            derivative_mismatch: (d1 - ds[2]).abs() / (d1.abs() + ds[2].abs()),
        });
    }
    Ok((out[0], out[1]))
}
