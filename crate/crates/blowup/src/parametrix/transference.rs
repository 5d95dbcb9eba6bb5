//! The transference operator `𝒦` on a [`FourierGrid`]: the part of `(R∂_Rf)^` not given by
//! `−2ξ∂_ξf̂`.
//!
//! Continuous–continuous entries are `ρ(ξ)F(ξ, η)/(η − ξ)` plus `−(3/2 + ηρ'/ρ)δ(ξ − η)`. The
//! principal value is discretized on cells centred at the nodes: the punctured sum, the exact
//! principal value of `1/(η − ξ)` over the grid's span for the `g(η)` part, and a difference
//! of `ρ(ξ)F(ξ, ξ)f(ξ)` for the missing cell. Entries coupling to the eigenfunction `φ_d`
//! (normalized) and, for d = 5, the zero mode `φ₀` are `⟨R∂_Rφ_•, φ_∘⟩` by quadrature; the
//! symmetric part of `R∂_R` being `−½`, couplings between discrete modes are antisymmetric and
//! each discrete diagonal entry is `−½`.

use super::field::FourierGrid;
use super::ParametrixError;
use crate::spectral::{eigenfunction, f_kernel_with, phi0, KernelOptions};
use gauss_quad::GaussLegendre;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct TransferenceMatrix {
    pub d: usize,
    /// `𝒦` in the grid layout `[d, 0 (d = 5), ξ_1..ξ_n]`.
    pub matrix: DMatrix<f64>,
    /// `[ξ∂_ξ, 𝒦] = D𝒦 − 𝒦D`, `D` the centred difference in `log ξ`.
    pub commutator: DMatrix<f64>,
    /// `−(3/2 + ηρ'(η)/ρ(η))` at the nodes.
    pub delta_coef: Vec<f64>,
    /// `⟨R∂_Rφ_d, φ(·, η)⟩/‖φ_d‖` at the nodes.
    pub k_dc: Vec<f64>,
    /// `⟨R∂_Rφ₀, φ(·, η)⟩/‖φ₀‖ = F(0, η)/(η‖φ₀‖)` at the nodes (d = 5, else empty).
    pub k_0c: Vec<f64>,
    /// `⟨R∂_Rφ_d, φ₀⟩/(‖φ_d‖‖φ₀‖)` (d = 5, else zero).
    pub k_d0: f64,
}

/// Ascending Gauss–Legendre nodes and weights on `[0, r_max]`, panels at most `h` long.
fn radial_nodes(r_max: f64, h: f64) -> (Vec<f64>, Vec<f64>) {
    let gl = GaussLegendre::new(16).expect("valid Legendre rule");
    let mut pairs = gl.as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let m = (r_max / h).ceil() as usize;
    let h = r_max / m as f64;
    let mut nodes = Vec::with_capacity(16 * m);
    let mut weights = Vec::with_capacity(16 * m);
    for k in 0..m {
        for &(t, w) in &pairs {
            nodes.push(h * (k as f64 + 0.5 + 0.5 * t));
            weights.push(0.5 * h * w);
        }
    }
    (nodes, weights)
}

/// Radius beyond which `R·φ_d` is below `10⁻¹⁶` of its size.
fn eigen_cutoff(xi_d: f64) -> f64 {
    40.0 / (-xi_d).sqrt()
}

/// `⟨R∂_Rφ_d, φ(·, η)⟩/‖φ_d‖` by direct quadrature (the eigenfunction decays exponentially).
pub fn negative_mode_coupling(grid: &FourierGrid, eta: f64) -> Result<f64, ParametrixError> {
    let h = 0.5f64.min(std::f64::consts::FRAC_PI_2 / eta.sqrt());
    let (nodes, weights) = radial_nodes(eigen_cutoff(grid.xi_d()), h);
    let pd = grid.eigen.eigenfunction(&nodes)?;
    let pe = eigenfunction(grid.d, eta, &nodes)?;
    let s: f64 = (0..nodes.len()).map(|i| weights[i] * nodes[i] * pd[i][1] * pe[i][0]).sum();
    Ok(s / grid.eigen.norm_sq.sqrt())
}

/// `⟨R∂_Rφ_d, φ₀⟩/(‖φ_d‖‖φ₀‖)` for d = 5.
fn negative_zero_coupling(grid: &FourierGrid) -> Result<f64, ParametrixError> {
    let (nodes, weights) = radial_nodes(eigen_cutoff(grid.xi_d()), 0.5);
    let pd = grid.eigen.eigenfunction(&nodes)?;
    let s: f64 = (0..nodes.len()).map(|i| weights[i] * nodes[i] * pd[i][1] * phi0(5, nodes[i]).u).sum();
    Ok(s / (grid.eigen.norm_sq * grid.zero_mode_norm_sq).sqrt())
}

/// Centred differences in `log ξ` on the continuous block, one-sided at its ends.
pub fn log_derivative_matrix(grid: &FourierGrid) -> DMatrix<f64> {
    let (off, n, dl) = (grid.offset(), grid.xi.len(), grid.log_step);
    let mut m = DMatrix::zeros(grid.dim(), grid.dim());
    for i in 0..n {
        let (a, b) = if i == 0 {
            (0, 1)
        } else if i == n - 1 {
            (n - 2, n - 1)
        } else {
            (i - 1, i + 1)
        };
        let h = dl * (b - a) as f64;
        m[(off + i, off + a)] -= 1.0 / h;
        m[(off + i, off + b)] += 1.0 / h;
    }
    m
}

impl TransferenceMatrix {
    /// All kernel values the grid needs; `F` evaluations run in parallel.
    pub fn build(grid: &FourierGrid, opts: &KernelOptions) -> Result<Self, ParametrixError> {
        let (d, n, off) = (grid.d, grid.xi.len(), grid.offset());
        let xi = &grid.xi;
        // upper triangle of F(ξ_j, ξ_i), diagonal included
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        let fv = crate::par::try_map_range(pairs.len(), |k| f_kernel_with(d, xi[pairs[k].0], xi[pairs[k].1], opts).map(|v| v.value))?;
        let mut f = DMatrix::zeros(n, n);
        for (k, &(i, j)) in pairs.iter().enumerate() {
            f[(i, j)] = fv[k];
            f[(j, i)] = fv[k];
        }
        // ∂_ηF(ξ, η) at η = ξ: central differences, one Richardson step
        let dfd = crate::par::try_map_range(n, |i| -> Result<f64, ParametrixError> {
            let x = xi[i];
            let diff = |h: f64| -> Result<f64, ParametrixError> {
                let up = f_kernel_with(d, x, x * (1.0 + h), opts)?.value;
                let dn = f_kernel_with(d, x, x * (1.0 - h), opts)?.value;
                Ok((up - dn) / (2.0 * h * x))
            };
            let (c, fine) = (diff(1e-2)?, diff(5e-3)?);
            Ok((4.0 * fine - c) / 3.0)
        })?;
        let k_dc = crate::par::try_map_range(n, |i| negative_mode_coupling(grid, xi[i]))?;
        let (k_0c, k_d0) = if d == 5 {
            let z = crate::par::try_map_range(n, |i| f_kernel_with(d, 0.0, xi[i], opts).map(|v| v.value))?;
            let nz = grid.zero_mode_norm_sq.sqrt();
            (z.iter().zip(xi).map(|(f, x)| f / (x * nz)).collect(), negative_zero_coupling(grid)?)
        } else {
            (Vec::new(), 0.0)
        };
        let delta_coef: Vec<f64> = grid.rho_log_slope.iter().map(|s| -(1.5 + s)).collect();

        let (w, rho) = (&grid.weights, &grid.rho);
        let mut m = DMatrix::zeros(grid.dim(), grid.dim());
        m[(0, 0)] = -0.5;
        if d == 5 {
            m[(1, 1)] = -0.5;
            m[(1, 0)] = k_d0;
            m[(0, 1)] = -k_d0;
        }
        let (lo_edge, hi_edge) = (xi[0] * (-0.5 * grid.log_step).exp(), xi[n - 1] * (0.5 * grid.log_step).exp());
        for i in 0..n {
            let r = off + i;
            m[(r, 0)] = k_dc[i];
            m[(0, r)] = -w[i] * rho[i] * k_dc[i];
            if d == 5 {
                m[(r, 1)] = k_0c[i];
                m[(1, r)] = -w[i] * rho[i] * k_0c[i];
            }
            let eta = xi[i];
            let mut punct = 0.0;
            for j in (0..n).filter(|&j| j != i) {
                m[(r, off + j)] += w[j] * rho[j] * f[(j, i)] / (eta - xi[j]);
                punct += w[j] / (eta - xi[j]);
            }
            let log_pv = ((eta - lo_edge) / (hi_edge - eta)).ln();
            m[(r, r)] += delta_coef[i] + w[i] * rho[i] * dfd[i] + rho[i] * f[(i, i)] * (log_pv - punct);
            // the missing cell: −w_i d/dξ[ρF(ξ, ξ)f](η_i), differenced in log ξ
            let (a, b) = if i == 0 {
                (0, 1)
            } else if i == n - 1 {
                (n - 2, n - 1)
            } else {
                (i - 1, i + 1)
            };
            let c = w[i] / (eta * grid.log_step * (b - a) as f64);
            m[(r, off + b)] -= c * rho[b] * f[(b, b)];
            m[(r, off + a)] += c * rho[a] * f[(a, a)];
        }
        let dm = log_derivative_matrix(grid);
        let commutator = &dm * &m - &m * &dm;
        Ok(Self { d, matrix: m, commutator, delta_coef, k_dc, k_0c, k_d0 })
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (&self.matrix * DVector::from_column_slice(v)).as_slice().to_vec()
    }

    pub fn apply_commutator(&self, v: &[f64]) -> Vec<f64> {
        (&self.commutator * DVector::from_column_slice(v)).as_slice().to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{f_kernel, w0_potential};
    use std::sync::OnceLock;

    fn grid5() -> &'static (FourierGrid, TransferenceMatrix) {
        static G: OnceLock<(FourierGrid, TransferenceMatrix)> = OnceLock::new();
        G.get_or_init(|| {
            let g = FourierGrid::new(5, 1e-3, 1e1, 2).unwrap();
            let k = TransferenceMatrix::build(&g, &KernelOptions::default()).unwrap();
            (g, k)
        })
    }

    /// `⟨W₀φ_d, φ(·, η)⟩`, the same quadrature as the coupling.
    fn w0_form(g: &FourierGrid, eta: f64) -> f64 {
        let (nodes, weights) = radial_nodes(eigen_cutoff(g.xi_d()), 0.5f64.min(1.0 / eta.sqrt()));
        let pd = g.eigen.eigenfunction(&nodes).unwrap();
        let pe = eigenfunction(g.d, eta, &nodes).unwrap();
        (0..nodes.len()).map(|i| weights[i] * w0_potential(g.d, nodes[i]).u * pd[i][0] * pe[i][0]).sum::<f64>() / g.eigen.norm_sq.sqrt()
    }

    #[test]
    fn discrete_couplings_match_commutator_identity() {
        // ⟨R∂φ_d, φ_η⟩ = ⟨W₀φ_d, φ_η⟩/(η − ξ_d), from [𝓛, R∂_R] = 2𝓛 + W₀
        let (g, k) = grid5();
        for (i, &eta) in g.xi.iter().enumerate() {
            let oracle = w0_form(g, eta) / (eta - g.xi_d());
            assert!((k.k_dc[i] - oracle).abs() <= 1e-8 * (1.0 + oracle.abs()), "η = {eta}: {} vs {oracle}", k.k_dc[i]);
        }
        // and ⟨R∂φ₀, φ_η⟩ = F(0, η)/η against the same identity in the other slot
        let (nodes, weights) = radial_nodes(eigen_cutoff(g.xi_d()), 0.5);
        let pd = g.eigen.eigenfunction(&nodes).unwrap();
        let w0: f64 = (0..nodes.len()).map(|i| weights[i] * w0_potential(5, nodes[i]).u * pd[i][0] * phi0(5, nodes[i]).u).sum();
        let oracle = w0 / (0.0 - g.xi_d()) / (g.eigen.norm_sq * g.zero_mode_norm_sq).sqrt();
        assert!((k.k_d0 - oracle).abs() <= 1e-8 * (1.0 + oracle.abs()), "{} vs {oracle}", k.k_d0);
        assert!(k.k_0c.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn weighted_symmetric_part_is_the_diagonal_term() {
        let (g, k) = grid5();
        let off = g.offset();
        let mut gw = vec![1.0; g.dim()];
        for j in 0..g.xi.len() {
            gw[off + j] = g.weights[j] * g.rho[j];
        }
        let m = &k.matrix;
        let dim = g.dim();
        let scale = (0..dim).flat_map(|i| (0..dim).map(move |j| (i, j))).map(|(i, j)| (gw[i] * m[(i, j)]).abs()).fold(0.0, f64::max);
        for i in 0..dim {
            for j in 0..dim {
                // the missing-cell stencil couples neighbours; everything else is exactly antisymmetric
                let near = i >= off && j >= off && i.abs_diff(j) <= 1;
                if i == j || near {
                    continue;
                }
                let s = gw[i] * m[(i, j)] + gw[j] * m[(j, i)];
                assert!(s.abs() <= 1e-12 * scale, "({i}, {j}): {s}");
            }
        }
        assert_eq!(m[(0, 0)], -0.5);
        assert_eq!(m[(1, 1)], -0.5);
    }

    #[test]
    fn delta_coefficient_is_finite_and_smooth() {
        let (_, k) = grid5();
        assert!(k.delta_coef.iter().all(|c| c.is_finite()));
        // second differences in log ξ stay small next to the values
        let jumps = k.delta_coef.windows(3).map(|w| (w[0] - 2.0 * w[1] + w[2]).abs()).fold(0.0, f64::max);
        let size = k.delta_coef.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(jumps <= 0.5 * size, "{jumps} vs {size}");
        // −(3/2 + ηρ'/ρ) → −(3/2 + d/2 − 3) = −1 at small ξ, −(3/2 + d/2 − 1) = −3 at large ξ for d = 5
        assert!((k.delta_coef[0] + 1.0).abs() < 0.1, "{}", k.delta_coef[0]);
    }

    #[test]
    fn commutator_vanishes_on_constants_of_a_diagonal_operator() {
        // sanity of D𝒦 − 𝒦D: for 𝒦 = identity it is zero
        let (g, _) = grid5();
        let dm = log_derivative_matrix(g);
        let id = DMatrix::<f64>::identity(g.dim(), g.dim());
        assert!((&dm * &id - &id * &dm).amax() == 0.0);
        // D annihilates constants on the continuous block
        let mut v = vec![0.0; g.dim()];
        v.iter_mut().skip(g.offset()).for_each(|x| *x = 1.0);
        assert!((&dm * DVector::from_vec(v)).amax() < 1e-14);
    }

    #[test]
    fn off_diagonal_entries_use_the_kernel() {
        let (g, k) = grid5();
        let off = g.offset();
        let (i, j) = (3, 7);
        let expect = g.weights[j] * g.rho[j] * f_kernel(5, g.xi[j], g.xi[i]).unwrap() / (g.xi[i] - g.xi[j]);
        assert!((k.matrix[(off + i, off + j)] - expect).abs() <= 1e-12 * expect.abs().max(1e-300));
    }
}
