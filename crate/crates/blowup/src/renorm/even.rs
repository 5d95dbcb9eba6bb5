use super::fit::lstsq;
use super::{ConeGrid, FieldKind, ProfileField, Region, RenormError};
use crate::frobenius::{integrate, OdeOptions};
use crate::profiles::{chi_unit, BlowupConstants};
use crate::series_core::{Bijet, Jet2};
use std::sync::Arc;

/// Start of the `a`-integration; below it `P_l = c_l a²`.
const A_START: f64 = 1e-6;
/// Smallest `R` entering the four-dimensional projection.
const D4_PROJECTION_R: f64 = 20.0;

/// Main term `t²ẽ⁰ = t^s Σ_l q_l(a) log(R)^l` of an error, each `q_l` a polynomial in `a²`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvenForcing {
    pub s: f64,
    /// `q[l][m]` is the coefficient of `a^{2m}` in `q_l`.
    pub q: Vec<Vec<f64>>,
}

impl EvenForcing {
    /// `t²ẽ⁰ = q₀ t^s`.
    pub fn constant(s: f64, q0: f64) -> Self {
        Self { s, q: vec![vec![q0]] }
    }

    /// Highest log power.
    pub fn log_degree(&self) -> usize {
        self.q.len().saturating_sub(1)
    }

    pub fn q_at(&self, l: usize, a: f64) -> f64 {
        self.q.get(l).map_or(0.0, |cs| cs.iter().rev().fold(0.0, |acc, c| acc * a * a + c))
    }

    /// `t²ẽ⁰` at `(a, R, t)`.
    pub fn value(&self, a: f64, r: f64, t: f64) -> f64 {
        let rho = r.ln();
        let sum = (0..self.q.len()).rev().fold(0.0, |acc, l| acc * rho + self.q_at(l, a));
        t.powf(self.s) * sum
    }

    pub fn is_zero(&self) -> bool {
        self.q.iter().flatten().all(|&c| c == 0.0)
    }
}

/// Output of the main-term projector.
#[derive(Debug, Clone)]
pub struct Projection {
    pub forcing: EvenForcing,
    /// `(a_i, [q_0, …, q_J])` at every node with enough usable slices.
    pub nodal: Vec<(f64, Vec<f64>)>,
    /// Root-mean-square least-squares residual relative to the rms of the data.
    pub residual: f64,
}

/// Solution of the coefficient system on a set of `a` values: `p[l][i] = (P_l, P_l', P_l'')`.
#[derive(Debug, Clone)]
pub struct EvenProfile {
    pub s: f64,
    pub a: Vec<f64>,
    pub p: Vec<Vec<[f64; 3]>>,
}

/// The correction of an even step together with `t²□v`, assembled without cancellation.
#[derive(Debug, Clone)]
pub struct EvenStep {
    pub v: ProfileField,
    pub box_v: Vec<f64>,
    pub profile: EvenProfile,
}

/// Projects an error field (`t²e`) onto `t^s q(a)` (d = 5, tip region, with the decaying
/// `τ^{−2/3}, τ^{−1}, τ^{−5/3}, τ^{−2}` terms, `τ = tλ`, fitted alongside) or onto
/// `t^s(q₀ + q₁ log R)` (d = 4, `R ≥ 20`, with `R^{−2} log^j R`, `j ≤ 2`), node by node in
/// `a` across slices; the nodal coefficients are then smoothed by quadratics in `a²`.
pub fn project_main_term(e: &ProfileField) -> Result<Projection, RenormError> {
    let g = &e.grid;
    let c = g.consts();
    let s = c.s();
    let five = c.d() == 5;
    let n_log = if five { 1 } else { 2 };
    let tau_ref = (0..g.n_t()).map(|j| g.t_lambda(j)).fold(f64::INFINITY, f64::min);
    let mut nodal = Vec::new();
    let (mut res2, mut dat2) = (0.0, 0.0);
    for i in 0..g.n_a() {
        let mut rows = Vec::new();
        let mut ys = Vec::new();
        for j in 0..g.n_t() {
            let r = g.r_big(i, j);
            let y = e.value(i, j) / g.t_nodes[j].powf(s);
            if five {
                if g.region(i, j) != Region::Tip {
                    continue;
                }
                let u = g.t_lambda(j) / tau_ref;
                rows.push(vec![1.0, u.powf(-2.0 / 3.0), 1.0 / u, u.powf(-5.0 / 3.0), u.powi(-2)]);
            } else {
                if r < D4_PROJECTION_R {
                    continue;
                }
                let rho = r.ln();
                let w = (D4_PROJECTION_R / r).powi(2);
                rows.push(vec![1.0, rho, w, w * rho, w * rho * rho]);
            }
            ys.push(y);
        }
        if rows.len() <= rows.first().map_or(usize::MAX, Vec::len) {
            continue;
        }
        let (coef, rms) = lstsq(&rows, &ys);
        res2 += rms * rms * ys.len() as f64;
        dat2 += ys.iter().map(|y| y * y).sum::<f64>();
        nodal.push((g.a_nodes[i], coef[..n_log].to_vec()));
    }
    if nodal.len() < 4 {
        return Err(RenormError::ProjectionFailed(format!("{} nodes with enough slices", nodal.len())));
    }
    let q = (0..n_log)
        .map(|l| {
            let rows: Vec<Vec<f64>> = nodal.iter().map(|(a, _)| vec![1.0, a * a, a.powi(4)]).collect();
            let ys: Vec<f64> = nodal.iter().map(|(_, q)| q[l]).collect();
            lstsq(&rows, &ys).0
        })
        .collect();
    Ok(Projection { forcing: EvenForcing { s, q }, nodal, residual: (res2 / dat2.max(f64::MIN_POSITIVE)).sqrt() })
}

/// Solves `L₀P_l + (l+1)L₁P_{l+1} + (l+1)(l+2)L₂P_{l+2} = −q_l` for `l = J, …, 0` on the
/// sorted abscissae `a_out ⊂ [0, 1)`, with `P_l = O(a²)` at the origin, where
/// `t²(−∂_tt + ∂_rr + (d−1)/r ∂_r)(t^s P ρ^l)` has been expanded in `ρ = log R`:
///
/// - `L₀P = (1−a²)P'' + ((d−1)/a + (2s−2)a)P' − s(s−1)P`,
/// - `L₁P = 2P'/a + (d−2)P/a² − 2κ(sP − aP') + κP`,
/// - `L₂P = P/a² − κ²P`.
pub fn solve_even_system(c: &BlowupConstants, forcing: &EvenForcing, a_out: &[f64]) -> Result<EvenProfile, RenormError> {
    let d = c.d() as f64;
    let (s, kap) = (forcing.s, c.kappa());
    let nl = forcing.log_degree() + 1;
    if forcing.is_zero() {
        return Ok(EvenProfile { s, a: a_out.to_vec(), p: vec![vec![[0.0; 3]; a_out.len()]; nl] });
    }
    // Taylor coefficients P_l ≈ c_l a², top-down
    let mut c2 = vec![0.0; nl + 2];
    for l in (0..nl).rev() {
        let lf = l as f64;
        c2[l] = (-forcing.q_at(l, 0.0) - (lf + 1.0) * (d + 2.0) * c2[l + 1] - (lf + 1.0) * (lf + 2.0) * c2[l + 2]) / (2.0 * d);
    }
    let l1 = |a: f64, p: f64, dp: f64| 2.0 * dp / a + (d - 2.0) * p / (a * a) - 2.0 * kap * (s * p - a * dp) + kap * p;
    let l2 = |a: f64, p: f64| p / (a * a) - kap * kap * p;
    // y = [P_0, P_0', P_1, P_1', …]
    let second = |a: f64, y: &[f64]| -> Vec<f64> {
        (0..nl)
            .map(|l| {
                let lf = l as f64;
                let mut rhs = -forcing.q_at(l, a);
                if l + 1 < nl {
                    rhs -= (lf + 1.0) * l1(a, y[2 * l + 2], y[2 * l + 3]);
                }
                if l + 2 < nl {
                    rhs -= (lf + 1.0) * (lf + 2.0) * l2(a, y[2 * l + 4]);
                }
                let (p, dp) = (y[2 * l], y[2 * l + 1]);
                (rhs - ((d - 1.0) / a + (2.0 * s - 2.0) * a) * dp + s * (s - 1.0) * p) / (1.0 - a * a)
            })
            .collect()
    };
    let first = a_out.partition_point(|&a| a < A_START);
    let y0: Vec<f64> = (0..nl).flat_map(|l| [c2[l] * A_START * A_START, 2.0 * c2[l] * A_START]).collect();
    let scale = c2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let traj = integrate(
        |a, y, dy| {
            let sec = second(a, y);
            for l in 0..nl {
                dy[2 * l] = y[2 * l + 1];
                dy[2 * l + 1] = sec[l];
            }
        },
        A_START,
        &y0,
        &a_out[first..],
        &OdeOptions::tol(1e-12, 1e-15 * scale),
    )
    .map_err(RenormError::HypergeomFailure)?;
    let mut p = vec![Vec::with_capacity(a_out.len()); nl];
    for &a in &a_out[..first] {
        for l in 0..nl {
            p[l].push([c2[l] * a * a, 2.0 * c2[l] * a, 2.0 * c2[l]]);
        }
    }
    for (&a, y) in a_out[first..].iter().zip(&traj.ys) {
        let sec = second(a, y);
        for l in 0..nl {
            p[l].push([y[2 * l], y[2 * l + 1], sec[l]]);
        }
    }
    Ok(EvenProfile { s, a: a_out.to_vec(), p })
}

/// Even step: solves for `ṽ = t^s Σ P_l(a) log(R)^l` and returns the correction
/// `v = χ_{[1,∞)}(R/(tλ)^{2/3+ε}) ṽ` (d = 5) or `v = t^s Σ P_l(a) ℓ^l`, `ℓ = ½ log(1+R²)`
/// (d = 4), with jets.
///
/// For d = 5, `t²□v` is assembled as `χ t²ẽ⁰ + t²(□(χṽ) − χ□ṽ)`, using that `ṽ` solves its
/// equation exactly; the commutator only involves derivatives of `χ`. For d = 4 it is read
/// off the jets directly.
pub fn even_step(forcing: &EvenForcing, grid: &Arc<ConeGrid>, k: usize) -> Result<EvenStep, RenormError> {
    let c = grid.consts();
    let profile = solve_even_system(c, forcing, &grid.a_nodes)?;
    let (d, kap, nu, s) = (c.d(), c.kappa(), c.nu(), forcing.s);
    let beta = 2.0 / 3.0 + c.eps();
    let node = |n: usize| -> (Jet2, f64) {
        let (i, j) = (n % grid.n_a(), n / grid.n_a());
        let t = grid.t_nodes[j];
        let a = grid.a_nodes[i];
        let r = a * t;
        let rr = grid.r_big(i, j);
        let lam = c.lambda(t);
        let x = Bijet::var_x(r);
        let y = Bijet::var_y(t);
        let ab = x / y;
        let rb = x * y.powf(kap);
        let polys: Vec<Bijet> = profile
            .p
            .iter()
            .map(|pl| {
                let [p0, p1, p2] = pl[i];
                ab.apply(p0, p1, p2)
            })
            .collect();
        let ts = y.powf(s);
        if d == 5 {
            let arg = x * y.powf(kap + nu * beta) - 1.0;
            let [h0, h1, h2] = chi_unit(arg.v);
            if h0 == 0.0 && h1 == 0.0 {
                return (Jet2::default(), 0.0);
            }
            let chi = arg.apply(h0, h1, h2);
            let rho = rb.ln();
            let vt = polys.iter().rev().fold(Bijet::constant(0.0), |acc, pl| acc * rho + *pl) * ts;
            let v = chi * vt;
            let box_chi = chi.dyy - chi.dxx - (d as f64 - 1.0) / r * chi.dx;
            let comm = vt.v * box_chi + 2.0 * (chi.dy * vt.dy - chi.dx * vt.dx);
            let box_v = h0 * forcing.value(a, rr, t) + t * t * comm;
            (Jet2::from_physical(&v, lam), box_v)
        } else {
            let ell = (rb * rb).ln_1p() * 0.5;
            let v = polys.iter().rev().fold(Bijet::constant(0.0), |acc, pl| acc * ell + *pl) * ts;
            let jet = Jet2::from_physical(&v, lam);
            (jet, t * t * jet.dalembertian(d, lam, rr))
        }
    };
    let (jets, box_v): (Vec<Jet2>, Vec<f64>) = crate::par::map_range(grid.len(), node).into_iter().unzip();
    let v = ProfileField { grid: grid.clone(), jets, kind: FieldKind::Correction, k, smallness_ref: 2.0 * (k / 2) as f64 };
    Ok(EvenStep { v, box_v, profile })
}
