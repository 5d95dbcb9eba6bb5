use super::ParametrixError;
use crate::spectral::{ground_eigenvalue, spectral_density, zero_mode_norm_sq, Eigenvalue};

/// `⟨ξ⟩ = (1 + ξ²)^{1/2}`.
pub fn bracket(xi: f64) -> f64 {
    xi.hypot(1.0)
}

/// A log-uniform `ξ` grid with the spectral data the weighted norms and `𝒦` need.
///
/// Vectors on the grid are laid out as `[x_d, x_0 (d = 5 only), x(ξ_1), …, x(ξ_n)]`. The
/// continuous quadrature uses cells centred on the nodes in `log ξ`, weight `w_j = ξ_jδ`.
#[derive(Debug, Clone)]
pub struct FourierGrid {
    pub d: usize,
    pub xi: Vec<f64>,
    /// Spacing `δ` in `log ξ`.
    pub log_step: f64,
    pub rho: Vec<f64>,
    /// `ξρ'(ξ)/ρ(ξ)` at the nodes.
    pub rho_log_slope: Vec<f64>,
    pub weights: Vec<f64>,
    pub eigen: Eigenvalue,
    /// `‖φ(·, 0)‖²` for d = 5, `NaN` for d = 4 (not in `L²`).
    pub zero_mode_norm_sq: f64,
}

impl FourierGrid {
    /// `per_decade` nodes per decade on `[lo, hi]`; `ρ` and its log-slope at every node.
    pub fn new(d: usize, lo: f64, hi: f64, per_decade: usize) -> Result<Self, ParametrixError> {
        if !(lo > 0.0 && hi > lo && per_decade >= 1) {
            return Err(ParametrixError::InvalidArgument(format!("bad ξ grid [{lo}, {hi}] with {per_decade} per decade")));
        }
        let n = ((hi / lo).log10() * per_decade as f64).round() as usize + 1;
        let log_step = (hi / lo).ln() / (n - 1) as f64;
        let xi: Vec<f64> = (0..n).map(|j| lo * (log_step * j as f64).exp()).collect();
        let eigen = ground_eigenvalue(d)?;
        const H: f64 = 1e-3;
        let dens = crate::par::try_map_range(n, |j| -> Result<(f64, f64), ParametrixError> {
            let r = spectral_density(d, xi[j])?.rho;
            let up = spectral_density(d, xi[j] * H.exp())?.rho;
            let dn = spectral_density(d, xi[j] * (-H).exp())?.rho;
            Ok((r, (up.ln() - dn.ln()) / (2.0 * H)))
        })?;
        Ok(Self {
            d,
            weights: xi.iter().map(|x| x * log_step).collect(),
            rho: dens.iter().map(|v| v.0).collect(),
            rho_log_slope: dens.iter().map(|v| v.1).collect(),
            xi,
            log_step,
            eigen,
            zero_mode_norm_sq: if d == 5 { zero_mode_norm_sq(5) } else { f64::NAN },
        })
    }

    pub fn xi_d(&self) -> f64 {
        self.eigen.xi
    }

    /// Number of discrete coordinates in front of the continuous ones.
    pub fn offset(&self) -> usize {
        if self.d == 5 {
            2
        } else {
            1
        }
    }

    pub fn dim(&self) -> usize {
        self.offset() + self.xi.len()
    }

    /// `(|f_d|² + |f_0|²[d = 5] + Σ w_j |f_j|²⟨ξ_j⟩^{2α}ρ_j)^{1/2}` for a laid-out vector.
    pub fn norm(&self, v: &[f64], alpha: f64) -> f64 {
        let off = self.offset();
        let disc: f64 = v[..off].iter().map(|x| x * x).sum();
        let cont: f64 =
            (0..self.xi.len()).map(|j| self.weights[j] * v[off + j].powi(2) * bracket(self.xi[j]).powf(2.0 * alpha) * self.rho[j]).sum();
        (disc + cont).sqrt()
    }

    /// `max_k τ_k^N ‖x(τ_k)‖_α` with the field's own `α` and `N`.
    pub fn field_norm(&self, f: &FourierField) -> f64 {
        (0..f.tau_nodes.len()).map(|k| self.norm(&f.row(k), f.alpha)).fold(0.0, f64::max)
    }
}

/// What the inversion needs from a right-hand side `f ∼ τ^{−N}`: the decay order `N` and the
/// scaled values `τ^N f` at any `(τ, ξ)` with `τ ≥ τ₀`. Working with `τ^N f` keeps every
/// quantity of order one however large `τ^N` is.
pub trait FourierSource: Sync {
    fn order(&self) -> f64;
    /// The first time at which the source is given.
    fn start(&self) -> f64;
    /// `τ^N f(τ, ξ)`.
    fn scaled(&self, tau: f64, xi: f64) -> Result<f64, ParametrixError>;
    /// `τ^N (f(τ, ξ_d), f(τ, 0))`; the second entry is ignored for d = 4.
    fn scaled_discrete(&self, tau: f64) -> (f64, f64);
}

/// `f(τ, ξ) = τ^{−N}g(ξ)` with discrete components `τ^{−N}(f_d, f_0)`.
pub struct SeparableSource<G> {
    pub order: f64,
    pub start: f64,
    pub profile: G,
    pub f_d: f64,
    pub f_0: f64,
}

impl<G: Fn(f64) -> f64 + Sync> FourierSource for SeparableSource<G> {
    fn order(&self) -> f64 {
        self.order
    }
    fn start(&self) -> f64 {
        self.start
    }
    fn scaled(&self, _tau: f64, xi: f64) -> Result<f64, ParametrixError> {
        Ok((self.profile)(xi))
    }
    fn scaled_discrete(&self, _tau: f64) -> (f64, f64) {
        (self.f_d, self.f_0)
    }
}

/// Natural cubic spline.
#[derive(Debug, Clone)]
struct Spline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Spline {
    fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        let mut m = vec![0.0; n];
        if n >= 3 {
            // tridiagonal system for the interior second derivatives
            let mut c = vec![0.0; n];
            let mut r = vec![0.0; n];
            for i in 1..n - 1 {
                let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
                let a = h0 / 6.0;
                let b = (h0 + h1) / 3.0 - a * c[i - 1];
                c[i] = h1 / 6.0 / b;
                r[i] = ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0 - a * r[i - 1]) / b;
            }
            for i in (1..n - 1).rev() {
                m[i] = r[i] - c[i] * m[i + 1];
            }
        }
        Self { x, y, m }
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if n == 1 {
            return self.y[0];
        }
        let i = self.x.partition_point(|&v| v <= t).clamp(1, n - 1) - 1;
        let h = self.x[i + 1] - self.x[i];
        let (a, b) = ((self.x[i + 1] - t) / h, (t - self.x[i]) / h);
        a * self.y[i] + b * self.y[i + 1] + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

/// Lagrange weights of a stencil of at most four nodes around `t`.
fn lagrange_stencil(nodes: &[f64], t: f64) -> (usize, Vec<f64>) {
    let n = nodes.len();
    let k = n.min(4);
    let j = nodes.partition_point(|&v| v <= t);
    let start = j.saturating_sub(k / 2).min(n - k);
    let s = &nodes[start..start + k];
    let w = (0..k).map(|i| (0..k).filter(|&m| m != i).map(|m| (t - s[m]) / (s[i] - s[m])).product()).collect();
    (start, w)
}

/// Scaled samples `τ^N x(τ, ξ)` on a `τ × ξ` grid plus the discrete components.
///
/// Between nodes, `ξ ↦ τ_k^N x(τ_k, ξ)` is a natural cubic spline in `log ξ` and
/// `τ ↦ τ^N x(τ, ξ)` a local Lagrange interpolant in `log τ`; past the last `τ` node the field
/// decays like `τ^{−N}`, and below the smallest `ξ` node it is continued by its end value.
#[derive(Debug, Clone)]
pub struct FourierField {
    pub d: usize,
    pub tau_nodes: Vec<f64>,
    pub xi_nodes: Vec<f64>,
    /// `values[k][j] = τ_k^N x(τ_k, ξ_j)`.
    pub values: Vec<Vec<f64>>,
    /// `τ_k^N x_d(τ_k)`.
    pub x_d: Vec<f64>,
    /// `τ_k^N x_0(τ_k)`; empty for d = 4.
    pub x_0: Vec<f64>,
    pub alpha: f64,
    pub order: f64,
    splines: Vec<Spline>,
    log_tau: Vec<f64>,
}

impl FourierField {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        d: usize,
        tau_nodes: Vec<f64>,
        xi_nodes: Vec<f64>,
        values: Vec<Vec<f64>>,
        x_d: Vec<f64>,
        x_0: Vec<f64>,
        alpha: f64,
        order: f64,
    ) -> Result<Self, ParametrixError> {
        let bad = |m: &str| Err(ParametrixError::InvalidArgument(m.to_string()));
        if tau_nodes.is_empty() || tau_nodes.windows(2).any(|w| !(w[1] > w[0])) || !(tau_nodes[0] > 0.0) {
            return bad("τ nodes must be positive and increasing");
        }
        if xi_nodes.is_empty() || xi_nodes.windows(2).any(|w| !(w[1] > w[0])) || !(xi_nodes[0] > 0.0) {
            return bad("ξ nodes must be positive and increasing");
        }
        let nt = tau_nodes.len();
        if values.len() != nt || values.iter().any(|r| r.len() != xi_nodes.len()) || x_d.len() != nt {
            return bad("field shape does not match its nodes");
        }
        if (d == 5 && x_0.len() != nt) || (d == 4 && !x_0.is_empty()) || !(d == 4 || d == 5) {
            return bad("x_0 is carried exactly when d = 5");
        }
        let lx: Vec<f64> = xi_nodes.iter().map(|x| x.ln()).collect();
        let splines = (0..nt).map(|k| Spline::new(lx.clone(), values[k].clone())).collect();
        let log_tau = tau_nodes.iter().map(|t| t.ln()).collect();
        Ok(Self { d, tau_nodes, xi_nodes, values, x_d, x_0, alpha, order, splines, log_tau })
    }

    /// Builds a field from laid-out scaled vectors `τ_k^N x(τ_k)`, one per `τ` node.
    pub fn from_rows(grid: &FourierGrid, tau_nodes: Vec<f64>, rows: &[Vec<f64>], alpha: f64, order: f64) -> Result<Self, ParametrixError> {
        let off = grid.offset();
        if rows.iter().any(|r| r.len() != grid.dim()) {
            return Err(ParametrixError::InvalidArgument(format!("rows must have length {}", grid.dim())));
        }
        let x_d = rows.iter().map(|r| r[0]).collect();
        let x_0 = if grid.d == 5 { rows.iter().map(|r| r[1]).collect() } else { Vec::new() };
        let values = rows.iter().map(|r| r[off..].to_vec()).collect();
        Self::new(grid.d, tau_nodes, grid.xi.clone(), values, x_d, x_0, alpha, order)
    }

    /// `τ^{−N}v` for `τ ≥ τ₀`, stored at the single node `τ₀`.
    pub fn separable(grid: &FourierGrid, tau0: f64, v: &[f64], alpha: f64, order: f64) -> Result<Self, ParametrixError> {
        Self::from_rows(grid, vec![tau0], &[v.to_vec()], alpha, order)
    }

    /// The laid-out scaled vector at `τ` node `k`.
    pub fn row(&self, k: usize) -> Vec<f64> {
        let mut v = vec![self.x_d[k]];
        if self.d == 5 {
            v.push(self.x_0[k]);
        }
        v.extend_from_slice(&self.values[k]);
        v
    }

    fn in_tau(&self, tau: f64, at: impl Fn(usize) -> f64) -> f64 {
        let lt = tau.ln().min(*self.log_tau.last().unwrap());
        let (start, w) = lagrange_stencil(&self.log_tau, lt);
        w.iter().enumerate().map(|(i, wi)| wi * at(start + i)).sum()
    }
}

impl FourierSource for FourierField {
    fn order(&self) -> f64 {
        self.order
    }
    fn start(&self) -> f64 {
        self.tau_nodes[0]
    }
    fn scaled(&self, tau: f64, xi: f64) -> Result<f64, ParametrixError> {
        let max = *self.xi_nodes.last().unwrap();
        if xi > max * (1.0 + 1e-12) {
            return Err(ParametrixError::InterpolationRange { xi, max });
        }
        let lx = xi.max(self.xi_nodes[0]).ln();
        Ok(self.in_tau(tau, |k| self.splines[k].eval(lx)))
    }
    fn scaled_discrete(&self, tau: f64) -> (f64, f64) {
        let fd = self.in_tau(tau, |k| self.x_d[k]);
        let f0 = if self.d == 5 { self.in_tau(tau, |k| self.x_0[k]) } else { 0.0 };
        (fd, f0)
    }
}
