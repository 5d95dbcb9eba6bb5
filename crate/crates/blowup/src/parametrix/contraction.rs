//! Linear part of the fixed-point map for `ε` and its measured contraction factor.
//!
//! With `y = 𝒟_τx`, the linear terms moved to the right-hand side are
//!
//! `T(x, y) = (d−1)βy + (d−2)β²𝒦x − 2β𝒦y + 2β²[ξ∂_ξ, 𝒦]x − β̇𝒦x − β²𝒦x + cβ̇x`,
//! `c = (d−1)(d−3+dν−ν)/(4ν)`,
//!
//! and the map is `(x, y) ↦ (x', 𝒟_τx')` with `x'` the inversion of `T(x, y)`. On pairs
//! `x = τ^{−(N−2)}a`, `y = τ^{−(N−1)}b` every term of `T` is exactly `τ^{−N}` times a fixed
//! vector, since `βτ` and `β̇τ²` are constants.

use super::field::{FourierField, FourierGrid};
use super::inversion::InversionOptions;
use super::transference::TransferenceMatrix;
use super::{Parametrix, ParametrixError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionOptions {
    /// Weight `α` of the norms.
    pub alpha: f64,
    /// Decay order `N`.
    pub order: f64,
    pub tau0: f64,
    /// Multiples of `τ₀` at which the output is measured.
    pub tau_multiples: Vec<f64>,
    /// Random pairs `(a, b)` tried.
    pub samples: usize,
    pub seed: u64,
    pub inversion: InversionOptions,
}

impl Default for ContractionOptions {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            order: 40.0,
            tau0: 1e4,
            tau_multiples: vec![1.0, 2.0, 4.0, 8.0],
            samples: 8,
            seed: 11,
            inversion: InversionOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    /// Largest measured `‖(x', 𝒟x')‖/‖(x, y)‖`.
    pub kappa: f64,
    pub ratios: Vec<f64>,
    /// Largest truncation estimate met in the inversions.
    pub tail: f64,
}

/// `c = (d−1)(d−3+dν−ν)/(4ν)`.
pub fn beta_dot_coefficient(d: usize, nu: f64) -> f64 {
    let df = d as f64;
    (df - 1.0) * (df - 3.0 + df * nu - nu) / (4.0 * nu)
}

/// The vector `v` with `T(τ^{−(N−2)}a, τ^{−(N−1)}b) = τ^{−N}v`.
pub fn linear_part(par: &Parametrix, km: &TransferenceMatrix, a: &[f64], b: &[f64]) -> Vec<f64> {
    let p = par.p();
    let df = par.d as f64;
    let c = beta_dot_coefficient(par.d, par.nu);
    let (ka, kb, ca) = (km.apply(a), km.apply(b), km.apply_commutator(a));
    // βτ = p, β̇τ² = −p
    (0..a.len())
        .map(|i| (df - 1.0) * p * b[i] + ((df - 2.0) * p * p + p - p * p) * ka[i] - 2.0 * p * kb[i] + 2.0 * p * p * ca[i] - c * p * a[i])
        .collect()
}

/// A smooth random vector: a few Gaussian bumps in `log ξ` plus random discrete components.
fn random_vector(grid: &FourierGrid, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let off = grid.offset();
    let (lo, hi) = (grid.xi[0].ln(), grid.xi[grid.xi.len() - 1].ln());
    let mut v = vec![0.0; grid.dim()];
    for x in v.iter_mut().take(off) {
        *x = rng.gen_range(-1.0..1.0);
    }
    for _ in 0..3 {
        let (c, s, amp) = (rng.gen_range(lo..hi), rng.gen_range(0.3..1.5), rng.gen_range(-1.0..1.0));
        for (j, x) in grid.xi.iter().enumerate() {
            v[off + j] += amp * (-(x.ln() - c).powi(2) / (2.0 * s * s)).exp();
        }
    }
    v
}

/// Largest measured ratio `(‖x'‖_{N−2, α+½} + ‖𝒟x'‖_{N−1, α}) / (‖x‖_{N−2, α+½} + ‖y‖_{N−1, α})`
/// over random pairs.
pub fn linear_contraction_factor(
    par: &Parametrix,
    grid: &FourierGrid,
    km: &TransferenceMatrix,
    opts: &ContractionOptions,
) -> Result<ContractionReport, ParametrixError> {
    if km.d != par.d || grid.d != par.d || km.matrix.nrows() != grid.dim() {
        return Err(ParametrixError::InvalidArgument("grid, transference matrix and parametrix disagree".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let taus: Vec<f64> = opts.tau_multiples.iter().map(|m| m * opts.tau0).collect();
    let (n, alpha) = (opts.order, opts.alpha);
    let mut ratios = Vec::with_capacity(opts.samples);
    let mut tail: f64 = 0.0;
    for _ in 0..opts.samples {
        let a = random_vector(grid, &mut rng);
        let b = random_vector(grid, &mut rng);
        let input = grid.norm(&a, alpha + 0.5) + grid.norm(&b, alpha);
        let v = linear_part(par, km, &a, &b);
        let src = FourierField::separable(grid, opts.tau0, &v, alpha, n)?;
        let out = par.apply_inversion(grid, &src, &taus, alpha, &opts.inversion)?;
        tail = tail.max(out.tail);
        ratios.push((grid.field_norm(&out.x) + grid.field_norm(&out.dx)) / input);
    }
    Ok(ContractionReport { kappa: ratios.iter().copied().fold(0.0, f64::max), ratios, tail })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Eigenvalue;
    use nalgebra::DMatrix;

    fn toy(d: usize) -> (Parametrix, FourierGrid, TransferenceMatrix) {
        let log_step = 10f64.ln() / 2.0;
        let xi: Vec<f64> = (0..9).map(|j| 1e-2 * (log_step * j as f64).exp()).collect();
        let grid = FourierGrid {
            d,
            weights: xi.iter().map(|x| x * log_step).collect(),
            rho: xi.iter().map(|x| x.sqrt()).collect(),
            rho_log_slope: vec![0.5; xi.len()],
            xi,
            log_step,
            eigen: Eigenvalue { d, xi: -0.38, norm_sq: 1.0, tail_coef: 1.0, r_match: 4.0 },
            zero_mode_norm_sq: 1.0,
        };
        let dim = grid.dim();
        let km = TransferenceMatrix {
            d,
            matrix: DMatrix::zeros(dim, dim),
            commutator: DMatrix::zeros(dim, dim),
            delta_coef: vec![0.0; 9],
            k_dc: vec![0.0; 9],
            k_0c: vec![],
            k_d0: 0.0,
        };
        (Parametrix::with_eigenvalue(d, 6.0, -0.38).unwrap(), grid, km)
    }

    #[test]
    fn coefficient_of_beta_dot() {
        // d = 5, ν = 6: 4·(2 + 30 − 6)/24
        assert!((beta_dot_coefficient(5, 6.0) - 13.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn linear_part_without_transference() {
        let (p, g, km) = toy(5);
        let a: Vec<f64> = (0..g.dim()).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..g.dim()).map(|i| 1.0 - i as f64).collect();
        let v = linear_part(&p, &km, &a, &b);
        let c = beta_dot_coefficient(5, 6.0);
        for i in 0..g.dim() {
            assert!((v[i] - (4.0 * p.p() * b[i] - c * p.p() * a[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn factor_decreases_with_tau0_for_the_local_terms() {
        let (p, g, km) = toy(5);
        let mut last = f64::INFINITY;
        for tau0 in [1e2, 1e3, 1e4] {
            let opts = ContractionOptions { tau0, samples: 3, order: 20.0, ..Default::default() };
            let k = linear_contraction_factor(&p, &g, &km, &opts).unwrap().kappa;
            assert!(k.is_finite() && k < last, "τ₀ = {tau0}: {k}");
            last = k;
        }
    }
}
