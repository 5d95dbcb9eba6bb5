use super::{ConeGrid, FieldKind, ProfileField, RenormError};
use crate::frobenius::{integrate, OdeOptions};
use crate::profiles::{e0_profile, potential, BlowupConstants};
use crate::series_core::Jet2;
use std::sync::Arc;

/// Below this `R` the solution is replaced by its leading Taylor term `−g(0)R²/(2d)`.
const R_START: f64 = 1e-4;

/// A forcing `f = t²e⁰` of an odd step, given at fixed `R` together with its first two
/// `t`-derivatives at fixed `R`.
pub trait RadialForcing: Sync {
    fn eval(&self, r: f64, t: f64) -> [f64; 3];
}

/// `t²e₀ = t^{κq} E₀(R)`.
#[derive(Debug, Clone)]
pub struct E0Forcing {
    c: BlowupConstants,
}

impl E0Forcing {
    pub fn new(c: &BlowupConstants) -> Self {
        Self { c: c.clone() }
    }
}

impl RadialForcing for E0Forcing {
    fn eval(&self, r: f64, t: f64) -> [f64; 3] {
        let sig = self.c.kappa() * self.c.q();
        let v = t.powf(sig) * e0_profile(&self.c, r).v;
        [v, sig / t * v, sig * (sig - 1.0) / (t * t) * v]
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroForcing;

impl RadialForcing for ZeroForcing {
    fn eval(&self, _r: f64, _t: f64) -> [f64; 3] {
        [0.0; 3]
    }
}

/// Solves `(tλ)²𝓛v = f` on every time slice with zero Cauchy data at `R = 0`.
///
/// Since `(tλ)^{−2} = t^{2ν}`, the slice problem is `𝓛V = g` with `g = t^{2ν}f`, and `v = V`.
/// The `t`-derivatives at fixed `R` solve the same equation with `∂_t g`, `∂_tt g` as forcing,
/// integrated alongside in `x = log R` with state `(V, RV_R)` per channel. Time derivatives
/// at fixed `r` follow from `∂_t R = κR/t`.
pub fn odd_step(forcing: &dyn RadialForcing, grid: &Arc<ConeGrid>, k: usize) -> Result<ProfileField, RenormError> {
    let c = grid.consts();
    let slices = crate::par::try_map_range(grid.n_t(), |j| {
        solve_slice(forcing, grid, c, j).map_err(|source| RenormError::SliceFailure { slice: j, source })
    })?;
    let jets = slices.into_iter().flatten().collect();
    Ok(ProfileField { grid: grid.clone(), jets, kind: FieldKind::Correction, k, smallness_ref: 2.0 * k.div_ceil(2) as f64 })
}

/// `(g, t g_t, t² g_tt)` for `g = t^{2ν} f` at fixed `R`.
fn scaled_forcing(forcing: &dyn RadialForcing, nu: f64, r: f64, t: f64) -> [f64; 3] {
    let [f, ft, ftt] = forcing.eval(r, t);
    let m = 2.0 * nu;
    let amp = t.powf(m);
    [amp * f, amp * (m * f + t * ft), amp * (m * (m - 1.0) * f + 2.0 * m * t * ft + t * t * ftt)]
}

fn solve_slice(
    forcing: &dyn RadialForcing,
    grid: &ConeGrid,
    c: &BlowupConstants,
    j: usize,
) -> Result<Vec<Jet2>, crate::frobenius::FrobeniusError> {
    let t = grid.t_nodes[j];
    let d = c.d() as f64;
    let (nu, kap) = (c.nu(), c.kappa());
    let radii: Vec<f64> = (0..grid.n_a()).map(|i| grid.r_big(i, j)).collect();
    let first = radii.partition_point(|&r| r < R_START);
    let xs: Vec<f64> = radii[first..].iter().map(|r| r.ln()).collect();

    let g0 = scaled_forcing(forcing, nu, 0.0, t);
    let scale = radii
        .iter()
        .step_by(8)
        .map(|&r| scaled_forcing(forcing, nu, r, t).iter().fold(0.0f64, |m, g| m.max(g.abs())))
        .fold(g0.iter().fold(0.0f64, |m, g| m.max(g.abs())), f64::max);
    if scale == 0.0 {
        return Ok(vec![Jet2::default(); radii.len()]);
    }

    let rs = R_START;
    let mut y0 = [0.0; 6];
    let gs = scaled_forcing(forcing, nu, rs, t);
    for ch in 0..3 {
        y0[2 * ch] = -gs[ch] * rs * rs / (2.0 * d);
        y0[2 * ch + 1] = -gs[ch] * rs * rs / d;
    }
    let rhs = |x: f64, y: &[f64], dy: &mut [f64]| {
        let r = x.exp();
        let r2 = r * r;
        let pot = potential(c, r);
        let g = scaled_forcing(forcing, nu, r, t);
        for ch in 0..3 {
            dy[2 * ch] = y[2 * ch + 1];
            dy[2 * ch + 1] = -(d - 2.0) * y[2 * ch + 1] - r2 * (pot * y[2 * ch] + g[ch]);
        }
    };
    let traj = integrate(rhs, rs.ln(), &y0, &xs, &OdeOptions::tol(1e-13, 1e-17 * scale))?;

    let assemble = |r: f64, ch: [[f64; 3]; 3]| -> Jet2 {
        // ch[c] = (V, V_R, V_RR) of channel c, channels scaled by t^c
        let v_t = ch[1][0] / t;
        let v_tt = ch[2][0] / (t * t);
        let v_rt = ch[1][1] / t;
        let w = kap * r / t;
        Jet2 {
            u: ch[0][0],
            u_r: ch[0][1],
            u_rr: ch[0][2],
            u_t: v_t + w * ch[0][1],
            u_tt: v_tt + 2.0 * w * v_rt + w * w * ch[0][2] + kap * (kap - 1.0) * r / (t * t) * ch[0][1],
        }
    };
    let mut out = Vec::with_capacity(radii.len());
    for &r in &radii[..first] {
        let g = scaled_forcing(forcing, nu, r, t);
        let ch = [0, 1, 2].map(|i| [-g[i] * r * r / (2.0 * d), -g[i] * r / d, -g[i] / d]);
        out.push(assemble(r, ch));
    }
    for (&r, y) in radii[first..].iter().zip(&traj.ys) {
        let g = scaled_forcing(forcing, nu, r, t);
        let pot = potential(c, r);
        let ch = [0, 1, 2].map(|i| {
            let v = y[2 * i];
            let vr = y[2 * i + 1] / r;
            [v, vr, -(d - 1.0) / r * vr - pot * v - g[i]]
        });
        out.push(assemble(r, ch));
    }
    Ok(out)
}
