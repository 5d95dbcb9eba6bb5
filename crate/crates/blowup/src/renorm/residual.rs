use super::{FieldKind, ProfileField};
use crate::series_core::Jet2;

/// `F(u) = |u|^{p−1}u`.
pub fn power_nonlinearity(u: f64, p: f64) -> f64 {
    u.abs().powf(p - 1.0) * u
}

/// `F(u + v) − F(u)` without cancellation when `|v| ≪ |u|`.
pub fn increment(u: f64, v: f64, p: f64) -> f64 {
    if u != 0.0 && (u + v) * u > 0.0 {
        let x = v / u;
        power_nonlinearity(u, p) * (p * x.ln_1p()).exp_m1()
    } else {
        power_nonlinearity(u + v, p) - power_nonlinearity(u, p)
    }
}

/// `F(u + v) − F(u) − F'(u)v`, by its binomial series when `|v/u| < 0.1`.
pub fn increment_beyond_linear(u: f64, v: f64, p: f64) -> f64 {
    if u == 0.0 {
        return power_nonlinearity(v, p);
    }
    let x = v / u;
    let fu = power_nonlinearity(u, p);
    if x.abs() < 0.1 {
        let mut term = p * (p - 1.0) / 2.0 * x * x;
        let mut sum = 0.0f64;
        let mut n = 2.0;
        while term.abs() > 1e-18 * sum.abs() && n < 200.0 {
            sum += term;
            term *= (p - n) / (n + 1.0) * x;
            n += 1.0;
        }
        fu * sum
    } else {
        increment(u, v, p) - p * u.abs().powf(p - 1.0) * v
    }
}

/// `t²e = t²(F(u) − □u)` node by node from the jet channels of `u`.
///
/// This is the direct definition and loses about `(tλ)^{2+α}` in relative accuracy where the
/// error is `(tλ)^{−α}` smaller than its terms; the pipeline uses it only as a cross-check.
/// The returned jets carry the value channel only.
pub fn residual(u: &ProfileField) -> ProfileField {
    let g = &u.grid;
    let c = g.consts();
    let (d, p) = (c.d(), c.p());
    ProfileField::from_fn(g.clone(), FieldKind::Error, u.k, |i, j| {
        let t = g.t_nodes[j];
        let jet = u.at(i, j);
        let box_u = jet.dalembertian(d, c.lambda(t), g.r_big(i, j));
        Jet2 { u: t * t * (power_nonlinearity(jet.u, p) - box_u), ..Jet2::default() }
    })
}
