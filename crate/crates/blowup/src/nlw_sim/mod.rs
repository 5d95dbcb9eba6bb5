//! Radial finite-difference solver for `∂_tt u − Δu = |u|^{p−1}u`, `p = (d+2)/(d−2)`.
//!
//! The Laplacian is discretized in flux form, `Δu ≈ (F_{i+½} − F_{i−½})/(w_i δr)` with
//! `F_{i+½} = r_{i+½}^{d−1}(u_{i+1} − u_i)/δr` and `w_iδr` the volume of the shell
//! `[r_{i−½}, r_{i+½}]` (a ball at the origin), so that `r²` is differentiated exactly and the
//! origin row is the regular limit `d∂_rr u(0)` of the even extension.
//! The operator is symmetric for `Σ w_i δr`, so velocity Verlet conserves a discrete energy up
//! to `O(δt²)` oscillations. Steps may run in either time direction: the approach to `t = 0`
//! is integrated as the time-reversed forward problem. The last node carries a first-order
//! outgoing-wave condition `∂_s u + ∂_r u + (d−1)u/(2r) = 0`, `s` the marching time.

mod blowup;
mod data;

pub use blowup::{
    expected_amplitude_slope, run_blowup_fit, shoot_blowup, BlowupFit, FitOptions, Sample, ShootOptions, ShotFit, StopReason,
};
pub use data::{init_from_profile, ProfileSlice, SimOptions};

use statrs::function::gamma::gamma;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("initial data do not cover the simulation box: {0}")]
    CoverageGap(String),
    #[error("time step {dt:e} exceeds the stability limit {limit:e}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("solution stopped being finite at t = {time}")]
    NonFinite { time: f64 },
    #[error("resolution lost after {samples} samples; last trusted time {last_trusted}")]
    ResolutionExhausted { last_trusted: f64, samples: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Renorm(#[from] crate::renorm::RenormError),
}

/// Largest Courant number accepted anywhere.
pub const MAX_CFL: f64 = 0.9;

/// Radial state on a uniform grid `r_i = iδr`, `i = 0..n`.
#[derive(Debug, Clone)]
pub struct WaveState {
    pub d: usize,
    pub r_nodes: Vec<f64>,
    pub u: Vec<f64>,
    pub u_t: Vec<f64>,
    pub time: f64,
    pub dr: f64,
    pub dt: f64,
    /// `+1` marches towards larger `t`, `−1` towards smaller.
    pub direction: f64,
    w: Vec<f64>,
    flux: Vec<f64>,
    cfl_max: f64,
    acc: Option<Vec<f64>>,
}

/// Energy of a state split at `|x| = fraction·|t|`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Energies {
    pub total: f64,
    /// `½∫u_t²`.
    pub kinetic: f64,
    /// `∫½u_r² − |u|^{p+1}/(p+1)`.
    pub potential: f64,
    pub inside: f64,
    pub outside: f64,
}

/// Area of the unit sphere in `ℝ^d`.
fn sphere_area(d: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0)
}

impl WaveState {
    /// A state with `n + 1` nodes on `[0, r_max]` and the given samples.
    pub fn new(d: usize, r_max: f64, u: Vec<f64>, u_t: Vec<f64>, time: f64, dt: f64, direction: f64) -> Result<Self, SimError> {
        if d < 3 {
            return Err(SimError::InvalidArgument(format!("dimension {d} has no energy-critical power")));
        }
        if u.len() < 3 || u.len() != u_t.len() {
            return Err(SimError::InvalidArgument("need ≥ 3 nodes and matching u, u_t".into()));
        }
        if !(r_max > 0.0) || direction.abs() != 1.0 {
            return Err(SimError::InvalidArgument("r_max must be positive and direction ±1".into()));
        }
        let n = u.len() - 1;
        let dr = r_max / n as f64;
        let r_nodes: Vec<f64> = (0..=n).map(|i| i as f64 * dr).collect();
        let e = d as i32 - 1;
        // cell volumes: Δ(r²) = 2d holds exactly, which keeps the origin second order
        let w = (0..=n)
            .map(|i| {
                let lo = if i == 0 { 0.0 } else { (i as f64 - 0.5) * dr };
                (((i as f64 + 0.5) * dr).powi(d as i32) - lo.powi(d as i32)) / (d as f64 * dr)
            })
            .collect();
        let flux = (0..n).map(|i| ((i as f64 + 0.5) * dr).powi(e)).collect();
        let mut st = Self { d, r_nodes, u, u_t, time, dr, dt, direction, w, flux, cfl_max: 0.0, acc: None };
        st.cfl_max = st.gershgorin_cfl();
        st.check_cfl(dt)?;
        if !st.is_finite() {
            return Err(SimError::NonFinite { time });
        }
        Ok(st)
    }

    pub fn p(&self) -> f64 {
        (self.d as f64 + 2.0) / (self.d as f64 - 2.0)
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        self.r_nodes[self.r_nodes.len() - 1]
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.u_t).all(|x| x.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.u.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Stability limit on `δt/δr`: `2/(δr√G)` from the Gershgorin bound `G` of the discrete
    /// Laplacian (`4d/δr²`, attained at the origin), capped at [`MAX_CFL`].
    pub fn cfl_limit(&self) -> f64 {
        self.cfl_max
    }

    fn gershgorin_cfl(&self) -> f64 {
        let n = self.len() - 1;
        let h2 = self.dr * self.dr;
        let mut g: f64 = 0.0;
        for i in 0..n {
            let left = if i == 0 { 0.0 } else { self.flux[i - 1] };
            g = g.max(2.0 * (left + self.flux[i]) / (self.w[i] * h2));
        }
        (2.0 / (self.dr * g.sqrt())).min(MAX_CFL)
    }

    fn check_cfl(&self, dt: f64) -> Result<(), SimError> {
        let limit = self.cfl_limit() * self.dr;
        if !(dt > 0.0) || dt > limit {
            return Err(SimError::CflViolation { dt, limit });
        }
        Ok(())
    }

    /// `Δu` at interior nodes `0..n`.
    fn laplacian(&self, u: &[f64], out: &mut [f64]) {
        let n = u.len() - 1;
        let h2 = self.dr * self.dr;
        let mut left = 0.0;
        for i in 0..n {
            let right = self.flux[i] * (u[i + 1] - u[i]);
            out[i] = (right - left) / (self.w[i] * h2);
            left = right;
        }
        out[n] = 0.0;
    }

    fn nonlinearity(&self, u: f64) -> f64 {
        match self.d {
            4 => u * u * u,
            6 => u * u.abs(),
            _ => u.abs().powf(self.p() - 1.0) * u,
        }
    }

    fn acceleration(&self, u: &[f64], t: f64, source: Option<&dyn Fn(f64, f64) -> f64>) -> Vec<f64> {
        let mut a = vec![0.0; u.len()];
        self.laplacian(u, &mut a);
        let n = u.len() - 1;
        for i in 0..n {
            a[i] += self.nonlinearity(u[i]);
            if let Some(s) = source {
                a[i] += s(t, self.r_nodes[i]);
            }
        }
        a
    }

    /// Multiplies `(u, ∂_t u)` by `s`.
    pub fn scale_data(&mut self, s: f64) {
        self.u.iter_mut().chain(self.u_t.iter_mut()).for_each(|x| *x *= s);
        self.acc = None;
    }

    /// One Verlet step of length `dt` in the marching direction.
    pub fn step(&mut self, dt: f64) -> Result<(), SimError> {
        self.step_with_source(dt, None)
    }

    /// Step of `∂_tt u − Δu − |u|^{p−1}u = S(t, r)`.
    pub fn step_with_source(&mut self, dt: f64, source: Option<&dyn Fn(f64, f64) -> f64>) -> Result<(), SimError> {
        self.check_cfl(dt)?;
        let h = self.direction * dt;
        let n = self.len() - 1;
        let acc = match self.acc.take() {
            Some(a) if source.is_none() => a,
            _ => self.acceleration(&self.u, self.time, source),
        };
        let old_edge = (self.u[n - 1], self.u[n]);
        for i in 0..n {
            self.u_t[i] += 0.5 * h * acc[i];
            self.u[i] += h * self.u_t[i];
        }
        // upwind outflow in the marching time
        let rn = self.r_nodes[n];
        let dun = (old_edge.1 - old_edge.0) / self.dr + (self.d as f64 - 1.0) / (2.0 * rn) * old_edge.1;
        self.u[n] = old_edge.1 - dt * dun;
        self.u_t[n] = (self.u[n] - old_edge.1) / h;
        self.time += h;
        let acc = self.acceleration(&self.u, self.time, source);
        for i in 0..n {
            self.u_t[i] += 0.5 * h * acc[i];
        }
        self.acc = if source.is_none() { Some(acc) } else { None };
        if !self.is_finite() {
            return Err(SimError::NonFinite { time: self.time });
        }
        Ok(())
    }

    /// Steps of the state's own `dt` until `time` has moved by `span` (the last step is shortened).
    pub fn advance(&mut self, span: f64) -> Result<(), SimError> {
        let target = self.time + self.direction * span;
        while self.direction * (target - self.time) > 1e-12 * span.max(1e-300) {
            let dt = self.dt.min(self.direction * (target - self.time));
            self.step(dt)?;
        }
        Ok(())
    }
}

/// Discrete energy, consistent with the stepping scheme; nodes are assigned to the interior
/// when `r < fraction·|t|` and gradient bonds by their midpoints. The boundary node is excluded.
pub fn energies(state: &WaveState, fraction: f64) -> Energies {
    let n = state.len() - 1;
    let p = state.p();
    let omega = sphere_area(state.d);
    let cut = fraction * state.time.abs();
    let mut e = Energies::default();
    let mut add = |r: f64, kin: f64, pot: f64| {
        e.kinetic += kin;
        e.potential += pot;
        if r < cut {
            e.inside += kin + pot;
        } else {
            e.outside += kin + pot;
        }
    };
    for i in 0..n {
        let vol = omega * state.w[i] * state.dr;
        let u = state.u[i];
        add(state.r_nodes[i], 0.5 * vol * state.u_t[i].powi(2), -vol * u.abs().powf(p + 1.0) / (p + 1.0));
        let g = (state.u[i + 1] - state.u[i]) / state.dr;
        add((i as f64 + 0.5) * state.dr, 0.0, 0.5 * omega * state.flux[i] * state.dr * g * g);
    }
    e.total = e.kinetic + e.potential;
    e
}
