use super::{SimError, WaveState};
use crate::profiles::{chi_unit, extend_outside_cone, u0_e0, BlowupConstants, ExtensionKernel};
use crate::renorm::Approximation;

/// `u_k(t, ·)` and `∂_t u_k(t, ·)` on one time slice.
///
/// `u₀ = λ^{(d−2)/2}W(λr)` is evaluated in closed form at every radius; the corrections
/// `u_k − u₀` are interpolated from the cone grid and continued past `r = t` with the
/// moment-matching reflection, tapered to zero across `a ∈ [1, 1 + TAPER]`. Far from the edge
/// the reflection amplifies any non-polynomial variation of the samples, and nothing beyond
/// `r = t` at the start can reach the cone `r < t` later on.
#[derive(Debug, Clone)]
pub struct ProfileSlice {
    pub consts: BlowupConstants,
    pub t: f64,
    pub k: usize,
    a_nodes: Vec<f64>,
    du: Vec<f64>,
    du_t: Vec<f64>,
    kernel: ExtensionKernel,
    cut_width: f64,
}

/// Grid choices for [`init_from_profile`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    /// Nodes on `[0, r_max]`, excluding the origin.
    pub n_r: usize,
    /// `r_max = box_factor·t`.
    pub box_factor: f64,
    pub cfl: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { n_r: 20_000, box_factor: 4.0, cfl: 0.4 }
    }
}

/// Outer edge of the cone grid must come this close to `a = 1`.
const CONE_GAP: f64 = 1e-2;
/// The reflected continuation is switched off across `a ∈ [2(1−δ), 2]`.
const CUT_WIDTH: f64 = 0.25;
const TAPER: f64 = 0.25;

impl ProfileSlice {
    /// The slice `j` (default: the latest, `t = t₀`) of `u_k` from a renormalization run.
    pub fn from_approximation(ap: &Approximation, k: usize, j: Option<usize>) -> Result<Self, SimError> {
        let g = &ap.grid;
        if k >= ap.u.len() {
            return Err(SimError::CoverageGap(format!("u_{k} was not computed (K = {})", ap.u.len() - 1)));
        }
        let j = j.unwrap_or(g.n_t() - 1);
        if j >= g.n_t() {
            return Err(SimError::CoverageGap(format!("slice {j} of {}", g.n_t())));
        }
        let a_end = g.a_nodes[g.n_a() - 1];
        if a_end < 1.0 - CONE_GAP {
            return Err(SimError::CoverageGap(format!("cone grid ends at a = {a_end}")));
        }
        let (mut du, mut du_t) = (Vec::with_capacity(g.n_a()), Vec::with_capacity(g.n_a()));
        for i in 0..g.n_a() {
            let (uk, u0) = (ap.u[k].at(i, j), ap.u[0].at(i, j));
            if !uk.is_finite() {
                return Err(SimError::CoverageGap(format!("u_{k} is not finite at a = {}", g.a_nodes[i])));
            }
            du.push(uk.u - u0.u);
            du_t.push(uk.u_t - u0.u_t);
        }
        Ok(Self {
            consts: g.consts().clone(),
            t: g.t_nodes[j],
            k,
            a_nodes: g.a_nodes.clone(),
            du,
            du_t,
            kernel: ExtensionKernel::default(),
            cut_width: CUT_WIDTH,
        })
    }

    /// Bare `u₀` data at time `t`.
    pub fn u0_only(c: &BlowupConstants, t: f64) -> Self {
        let a_nodes = vec![0.0, 1.0];
        Self {
            consts: c.clone(),
            t,
            k: 0,
            a_nodes,
            du: vec![0.0; 2],
            du_t: vec![0.0; 2],
            kernel: ExtensionKernel::default(),
            cut_width: CUT_WIDTH,
        }
    }

    /// `(u, ∂_t u)` at the radii `r`.
    pub fn sample(&self, r: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let a: Vec<f64> = r.iter().map(|x| x / self.t).collect();
        let du = extend_outside_cone(&self.a_nodes, &self.du, &a, &self.kernel, self.cut_width);
        let du_t = extend_outside_cone(&self.a_nodes, &self.du_t, &a, &self.kernel, self.cut_width);
        let taper = |a: f64| 1.0 - chi_unit((a - 1.0) / TAPER)[0];
        let lam = self.consts.lambda(self.t);
        let base = crate::par::map(r, |&x| u0_e0(&self.consts, lam * x, self.t).0);
        let u = base.iter().zip(&du).zip(&a).map(|((b, c), &a)| b.u + taper(a) * c).collect();
        let u_t = base.iter().zip(&du_t).zip(&a).map(|((b, c), &a)| b.u_t + taper(a) * c).collect();
        (u, u_t)
    }
}

/// Samples a profile slice on `[0, box_factor·t]` and sets up the march towards `t = 0`.
pub fn init_from_profile(slice: &ProfileSlice, opts: &SimOptions) -> Result<WaveState, SimError> {
    if opts.n_r < 2 || !(opts.box_factor > 0.0) || !(opts.cfl > 0.0) {
        return Err(SimError::InvalidArgument(format!("{opts:?}")));
    }
    let r_max = opts.box_factor * slice.t;
    let dr = r_max / opts.n_r as f64;
    let r: Vec<f64> = (0..=opts.n_r).map(|i| i as f64 * dr).collect();
    let (u, u_t) = slice.sample(&r);
    if let Some(i) = u.iter().chain(&u_t).position(|x| !x.is_finite()) {
        return Err(SimError::CoverageGap(format!("non-finite sample at r = {}", r[i % r.len()])));
    }
    WaveState::new(slice.consts.d(), r_max, u, u_t, slice.t, opts.cfl * dr, -1.0)
}
