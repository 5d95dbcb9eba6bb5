use super::closed::phi0;
use super::eigen::{eigenfunction, ground_eigenvalue, sort_nodes, spectral_density, MatchInfo};
use super::{check_dimension, SpectralError};
use gauss_quad::GaussLegendre;
use nalgebra::DMatrix;
use num_complex::Complex64;

/// `ρ(ξ)`, `a(ξ)` and samples of `φ(R, ξ)` on a fixed `ξ` grid.
#[derive(Debug, Clone)]
pub struct SpectralTable {
    pub d: usize,
    /// Sorted, positive.
    pub xi_nodes: Vec<f64>,
    pub rho: Vec<f64>,
    pub a_coef: Vec<Complex64>,
    pub r_nodes: Vec<f64>,
    /// `phi_samples[(i, j)] = φ(r_nodes[i], xi_nodes[j])`.
    pub phi_samples: DMatrix<f64>,
    pub matching: Vec<MatchInfo>,
}

/// Least-squares line through `(x, y)`: slope, intercept and `r²`.
pub(crate) fn line_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

impl SpectralTable {
    /// Evaluates `a`, `ρ` and `φ` at every node; the `ξ` nodes run in parallel.
    pub fn build(d: usize, mut xi_nodes: Vec<f64>, mut r_nodes: Vec<f64>) -> Result<Self, SpectralError> {
        check_dimension(d)?;
        if xi_nodes.is_empty() || xi_nodes.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(SpectralError::InvalidArgument("ξ nodes must be positive and finite".into()));
        }
        xi_nodes.sort_by(f64::total_cmp);
        r_nodes.sort_by(f64::total_cmp);
        let cols = crate::par::try_map_range(xi_nodes.len(), |j| -> Result<_, SpectralError> {
            let s = spectral_density(d, xi_nodes[j])?;
            let phi = eigenfunction(d, xi_nodes[j], &r_nodes)?;
            Ok((s, phi))
        })?;
        let phi_samples = DMatrix::from_fn(r_nodes.len(), xi_nodes.len(), |i, j| cols[j].1[i][0]);
        Ok(Self {
            d,
            rho: cols.iter().map(|c| c.0.rho).collect(),
            a_coef: cols.iter().map(|c| c.0.a).collect(),
            matching: cols.iter().map(|c| c.0.matching).collect(),
            xi_nodes,
            r_nodes,
            phi_samples,
        })
    }

    /// `n` log-spaced nodes on `[lo, hi]`.
    pub fn log_spaced(d: usize, lo: f64, hi: f64, n: usize, r_nodes: Vec<f64>) -> Result<Self, SpectralError> {
        if !(lo > 0.0 && hi > lo && n >= 2) {
            return Err(SpectralError::InvalidArgument(format!("bad ξ range [{lo}, {hi}] with {n} nodes")));
        }
        let step = (hi / lo).ln() / (n - 1) as f64;
        Self::build(d, (0..n).map(|i| lo * (step * i as f64).exp()).collect(), r_nodes)
    }

    fn window(&self, lo: f64, hi: f64) -> Vec<usize> {
        (0..self.xi_nodes.len()).filter(|&j| self.xi_nodes[j] >= lo * (1.0 - 1e-12) && self.xi_nodes[j] <= hi * (1.0 + 1e-12)).collect()
    }

    /// Slope and `r²` of `log(ρ|log ξ|^{log_power})` against `log ξ` on `[lo, hi]`.
    pub fn slope_fit(&self, lo: f64, hi: f64, log_power: f64) -> Result<(f64, f64), SpectralError> {
        let idx = self.window(lo, hi);
        if idx.len() < 3 {
            return Err(SpectralError::InvalidArgument(format!("fewer than 3 nodes in [{lo}, {hi}]")));
        }
        let xs: Vec<f64> = idx.iter().map(|&j| self.xi_nodes[j].ln()).collect();
        let ys: Vec<f64> = idx.iter().map(|&j| self.rho[j].ln() + log_power * self.xi_nodes[j].ln().abs().ln()).collect();
        let (s, _, r2) = line_fit(&xs, &ys);
        Ok((s, r2))
    }

    /// `ξρ'(ξ)/ρ(ξ)` at the nodes, by differences in `log ξ`.
    pub fn log_derivative(&self) -> Vec<f64> {
        let n = self.xi_nodes.len();
        let l: Vec<(f64, f64)> = self.xi_nodes.iter().zip(&self.rho).map(|(x, r)| (x.ln(), r.ln())).collect();
        (0..n)
            .map(|j| {
                let (a, b) = if j == 0 {
                    (0, 1.min(n - 1))
                } else if j == n - 1 {
                    (n - 2, n - 1)
                } else {
                    (j - 1, j + 1)
                };
                if a == b {
                    0.0
                } else {
                    (l[b].1 - l[a].1) / (l[b].0 - l[a].0)
                }
            })
            .collect()
    }

    /// `max |ξρ'/ρ|` over the nodes (the constant of the symbol-type bound).
    pub fn symbol_constant(&self) -> f64 {
        self.log_derivative().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `ρ` by log-log interpolation (linear extrapolation of the end slopes outside the table).
    pub fn rho_at(&self, xi: f64) -> f64 {
        let n = self.xi_nodes.len();
        if n == 1 {
            return self.rho[0];
        }
        let j = self.xi_nodes.partition_point(|&x| x < xi).clamp(1, n - 1);
        let (x0, x1) = (self.xi_nodes[j - 1].ln(), self.xi_nodes[j].ln());
        let (y0, y1) = (self.rho[j - 1].ln(), self.rho[j].ln());
        (y0 + (y1 - y0) * (xi.ln() - x0) / (x1 - x0)).exp()
    }
}

/// Both sides of the generalized Parseval identity for one test function.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsevalReport {
    /// `‖f‖²_{L²(0,∞)}`.
    pub norm_sq: f64,
    /// `∫_0^∞ |f̂(ξ)|²ρ(ξ)dξ`.
    pub continuous: f64,
    /// `(ξ, |⟨f, φ_ξ⟩|²/‖φ_ξ‖²)` for the negative eigenvalue and, for d = 5, `ξ = 0`.
    pub discrete: Vec<(f64, f64)>,
    pub relative_error: f64,
}

/// Generalized Parseval identity for `f` supported in `[lo, hi] ⊂ (0, ∞)`:
/// `‖f‖² = ∫|f̂|²ρ dξ + Σ_discrete`, with `f̂(ξ) = ∫φ(R, ξ)f(R)dR`.
///
/// The `ξ` integral runs in `log ξ` over `[10⁻⁸, xi_max]`; below `10⁻⁸` it is closed with the
/// small-`ξ` law of `ρ` and `f̂ ≈ f̂(0)`.
pub fn parseval_check(d: usize, f: impl Fn(f64) -> f64 + Sync, lo: f64, hi: f64, xi_max: f64) -> Result<ParsevalReport, SpectralError> {
    check_dimension(d)?;
    if !(lo > 0.0 && hi > lo) {
        return Err(SpectralError::InvalidArgument(format!("support [{lo}, {hi}] must lie in (0, ∞)")));
    }
    let rule = GaussLegendre::new(24).expect("valid Legendre rule");
    let pairs = rule.as_node_weight_pairs();
    // R quadrature resolving oscillations up to √xi_max
    let n_panels = ((hi - lo) * xi_max.sqrt() / 3.0).ceil().max(8.0) as usize;
    let h = (hi - lo) / n_panels as f64;
    let (mut rn, mut rw) = (Vec::new(), Vec::new());
    for p in 0..n_panels {
        let a = lo + h * p as f64;
        for &(t, w) in pairs {
            rn.push(a + 0.5 * h * (1.0 + t));
            rw.push(0.5 * h * w);
        }
    }
    let (rn, rw) = sort_nodes(rn, rw);
    let fv: Vec<f64> = rn.iter().map(|&r| f(r)).collect();
    let norm_sq: f64 = fv.iter().zip(&rw).map(|(v, w)| v * v * w).sum();
    let transform = |xi: f64| -> Result<f64, SpectralError> {
        let phi = eigenfunction(d, xi, &rn)?;
        Ok(phi.iter().zip(&fv).zip(&rw).map(|((p, v), w)| p[0] * v * w).sum())
    };

    let xi_min: f64 = 1e-8;
    let (u0, u1) = (xi_min.ln(), xi_max.ln());
    let n_u = ((u1 - u0) * 4.0).ceil() as usize;
    let hu = (u1 - u0) / n_u as f64;
    let rule_u = GaussLegendre::new(8).expect("valid Legendre rule");
    let mut us = Vec::new();
    for p in 0..n_u {
        let a = u0 + hu * p as f64;
        for &(t, w) in rule_u.as_node_weight_pairs() {
            us.push((a + 0.5 * hu * (1.0 + t), 0.5 * hu * w));
        }
    }
    let terms = crate::par::try_map_range(us.len(), |i| -> Result<f64, SpectralError> {
        let (u, w) = us[i];
        let xi = u.exp();
        let fh = transform(xi)?;
        Ok(w * xi * fh * fh * spectral_density(d, xi)?.rho)
    })?;
    let mut continuous: f64 = terms.iter().sum();
    // ∫_0^{ξ_min}: ρ ∼ C/(ξ log²ξ) for d = 4, a power law ρ(ξ_min)(ξ/ξ_min)^s for d = 5
    let r_a = spectral_density(d, xi_min)?.rho;
    let f0 = transform(0.0)?;
    let tail = if d == 4 {
        r_a * xi_min * xi_min.ln().abs()
    } else {
        let s = (spectral_density(d, 2.0 * xi_min)?.rho / r_a).ln() / 2f64.ln();
        r_a * xi_min / (1.0 + s)
    };
    continuous += f0 * f0 * tail;

    let mut discrete = Vec::new();
    let ev = ground_eigenvalue(d)?;
    let pd = ev.eigenfunction(&rn)?;
    let c: f64 = pd.iter().zip(&fv).zip(&rw).map(|((p, v), w)| p[0] * v * w).sum();
    discrete.push((ev.xi, c * c / ev.norm_sq));
    if d == 5 {
        discrete.push((0.0, f0 * f0 / zero_mode_norm_sq(d)));
    }
    let total = continuous + discrete.iter().map(|x| x.1).sum::<f64>();
    Ok(ParsevalReport { norm_sq, continuous, discrete, relative_error: (total - norm_sq).abs() / norm_sq })
}

/// `‖φ‖²_{L²(0,∞)}` of the zero-energy solution (finite for d = 5, where `φ ∼ R^{−1}`).
pub fn zero_mode_norm_sq(d: usize) -> f64 {
    let rule = GaussLegendre::new(24).expect("valid Legendre rule");
    let r_end = 1e8;
    let mut total = 0.0;
    let mut x = 0.0f64;
    while x < r_end {
        let h = (0.25 * x).max(0.25).min(r_end - x);
        total += rule.integrate(x, x + h, |r| phi0(d, r).u.powi(2));
        x += h;
    }
    // φ² ≈ R^{3−d}
    total + if d == 5 { 1.0 / r_end } else { f64::INFINITY }
}
