use super::closed::w0_potential;
use super::eigen::{eigenfunction, sort_nodes, spectral_density};
use super::{check_dimension, SpectralError};
use gauss_quad::GaussLegendre;

/// Quadrature controls for [`f_kernel_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelOptions {
    /// Absolute error target (rule difference plus tail bound).
    pub tol: f64,
    /// Gauss–Legendre points per panel; a rule with 6 fewer points gives the error estimate.
    pub order: usize,
    /// Largest truncation radius tried.
    pub r_cap: f64,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self { tol: 1e-10, order: 20, r_cap: 2e5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FValue {
    pub value: f64,
    /// Rule difference plus tail bound.
    pub estimate: f64,
    pub nodes: usize,
    pub r_max: f64,
    /// Whether the integration-by-parts form was used.
    pub by_parts: bool,
}

/// Arguments far enough apart, and large enough, for the integration-by-parts form.
fn separated(xi: f64, eta: f64) -> bool {
    xi + eta >= 1.0 && (eta - xi).abs() >= 0.25 * (xi + eta)
}

/// Panel edges on `[0, r_max]`: geometric near the origin, at most half a period of
/// `cos((√ξ + √η)R)` long.
fn panels(omega: f64, r_max: f64) -> Vec<f64> {
    let h_osc = if omega > 0.0 { std::f64::consts::PI / omega } else { f64::INFINITY };
    let mut edges = vec![0.0];
    let mut x = 0.0;
    while x < r_max {
        let h = (0.25 * x).max(0.1).min(h_osc).min(r_max - x);
        x += h;
        edges.push(x);
    }
    edges
}

struct Rules {
    hi: Vec<(f64, f64)>,
    lo: Vec<(f64, f64)>,
}

impl Rules {
    fn new(order: usize) -> Self {
        let mk = |n: usize| GaussLegendre::new(n).expect("valid Legendre rule").as_node_weight_pairs().to_vec();
        Self { hi: mk(order), lo: mk(order.saturating_sub(6).max(4)) }
    }

    /// All nodes with weights for both rules; the flag marks the high-order rule.
    fn nodes(&self, edges: &[f64]) -> (Vec<f64>, Vec<(f64, bool)>) {
        let mut nodes = Vec::new();
        let mut tags = Vec::new();
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            for (set, hi) in [(&self.hi, true), (&self.lo, false)] {
                for &(t, wt) in set.iter() {
                    nodes.push(0.5 * (a + b) + 0.5 * (b - a) * t);
                    tags.push((0.5 * (b - a) * wt, hi));
                }
            }
        }
        sort_nodes(nodes, tags)
    }
}

/// Envelope amplitude of `φ(·, ξ)` and of `∂_Rφ` at `R` from a sample `(φ, φ')`.
fn envelope(xi: f64, r: f64, v: [f64; 2]) -> (f64, f64) {
    if xi * r * r > 1.0 {
        let k = xi.sqrt();
        let a = (v[0] * v[0] + v[1] * v[1] / xi).sqrt();
        (a, a * k)
    } else {
        (v[0].abs() + r * v[1].abs(), v[1].abs() + v[0].abs() / r)
    }
}

/// `F(ξ, η) = ⟨W₀φ(·, ξ), φ(·, η)⟩_{L²(0,∞)}` with default options.
pub fn f_kernel(d: usize, xi: f64, eta: f64) -> Result<f64, SpectralError> {
    Ok(f_kernel_with(d, xi, eta, &KernelOptions::default())?.value)
}

/// `F(ξ, η)` by panel Gauss–Legendre quadrature.
///
/// For `ξ + η ≥ 1` and `|η − ξ| ≥ (ξ + η)/4` the identity
/// `(η − ξ)F = −⟨(2W₀'∂_R + W₀'')φ(ξ), φ(η)⟩` is used, whose integrand decays like `R^{−5}`
/// instead of `R^{−4}`. The truncation radius grows until the tail bound is below `tol/10`.
pub fn f_kernel_with(d: usize, xi: f64, eta: f64, opts: &KernelOptions) -> Result<FValue, SpectralError> {
    check_dimension(d)?;
    if !(xi >= 0.0 && eta >= 0.0 && xi.is_finite() && eta.is_finite()) {
        return Err(SpectralError::InvalidArgument(format!("F needs ξ, η ≥ 0, got ({xi}, {eta})")));
    }
    let by_parts = separated(xi, eta);
    let omega = xi.sqrt() + eta.sqrt();
    let rules = Rules::new(opts.order);
    let mut r_max = (20.0 / omega.max(1e-300)).clamp(100.0, opts.r_cap);
    loop {
        let edges = panels(omega, r_max);
        let (nodes, tags) = rules.nodes(&edges);
        let (px, pe) = if xi == eta {
            let v = eigenfunction(d, xi, &nodes)?;
            (v.clone(), v)
        } else {
            let (a, b) = crate::par::join(|| eigenfunction(d, xi, &nodes), || eigenfunction(d, eta, &nodes));
            (a?, b?)
        };
        let (mut hi, mut lo) = (0.0, 0.0);
        for (i, &r) in nodes.iter().enumerate() {
            let w = w0_potential(d, r);
            let f =
                if by_parts { -(2.0 * w.u_r * px[i][1] + w.u_rr * px[i][0]) * pe[i][0] / (eta - xi) } else { w.u * px[i][0] * pe[i][0] };
            let (wt, is_hi) = tags[i];
            if is_hi {
                hi += wt * f;
            } else {
                lo += wt * f;
            }
        }
        let last = nodes.len() - 1;
        let (ax, dx) = envelope(xi, r_max, px[last]);
        let (ae, _) = envelope(eta, r_max, pe[last]);
        let w = w0_potential(d, r_max);
        let tail = if by_parts {
            (2.0 * w.u_r.abs() * r_max / 4.0 * dx + w.u_rr.abs() * r_max / 5.0 * ax) * ae / (eta - xi).abs()
        } else {
            w.u.abs() * r_max / 3.0 * ax * ae
        };
        if tail > 0.1 * opts.tol && r_max < opts.r_cap {
            r_max = (4.0 * r_max).min(opts.r_cap);
            continue;
        }
        let estimate = (hi - lo).abs() + tail;
        let out = FValue { value: hi, estimate, nodes: nodes.len(), r_max, by_parts };
        if !(estimate <= opts.tol) {
            return Err(SpectralError::QuadratureFailure { xi, eta, estimate, tol: opts.tol, nodes: out.nodes, r_max });
        }
        return Ok(out);
    }
}

/// `K⁰_cc(η, ξ) = ρ(ξ)F(ξ, η)/(η − ξ)` off the diagonal.
pub fn transference_kernel(d: usize, eta: f64, xi: f64) -> Result<f64, SpectralError> {
    let rho = spectral_density(d, xi)?.rho;
    transference_kernel_with(d, eta, xi, rho, &KernelOptions::default())
}

/// Smallest `|η − ξ|/max(ξ, 1)` at which [`transference_kernel_with`] divides by `η − ξ`.
pub const DIAGONAL_GAP: f64 = 1e-4;

/// `K⁰_cc(η, ξ)` for a known `ρ(ξ)`. Closer to the diagonal than [`DIAGONAL_GAP`] the
/// difference quotient is replaced by the regular part `ρ(ξ)∂_ηF(ξ, η)` at `η = ξ`, from a
/// central difference of step `max(ξ, 1)·DIAGONAL_GAP`; the principal-value part
/// `ρ(ξ)F(ξ, ξ)/(η − ξ)` is left to the caller.
pub fn transference_kernel_with(d: usize, eta: f64, xi: f64, rho: f64, opts: &KernelOptions) -> Result<f64, SpectralError> {
    let gap = DIAGONAL_GAP * xi.max(1.0);
    if (eta - xi).abs() >= gap {
        let f = f_kernel_with(d, xi, eta, opts)?.value;
        return Ok(rho * f / (eta - xi));
    }
    let lo = (xi - gap).max(0.0);
    let hi = xi + gap;
    let (fl, fh) = (f_kernel_with(d, xi, lo, opts)?.value, f_kernel_with(d, xi, hi, opts)?.value);
    Ok(rho * (fh - fl) / (hi - lo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::table::line_fit;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tight() -> KernelOptions {
        KernelOptions { tol: 1e-13, ..KernelOptions::default() }
    }

    #[test]
    fn vanishes_at_origin() {
        for d in [4, 5] {
            assert!(f_kernel(d, 0.0, 0.0).unwrap().abs() <= 1e-6);
        }
    }

    #[test]
    fn symmetric_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in [4, 5] {
            for _ in 0..8 {
                let (x, y) = (10f64.powf(rng.gen_range(-3.0..1.3)), 10f64.powf(rng.gen_range(-3.0..1.3)));
                let (a, b) = (
                    f_kernel_with(d, x, y, &KernelOptions::default()).unwrap(),
                    f_kernel_with(d, y, x, &KernelOptions::default()).unwrap(),
                );
                assert!((a.value - b.value).abs() <= 1e-8, "d = {d}, ({x}, {y}): {} vs {}", a.value, b.value);
            }
            // one pair on each side of the integration-by-parts switch
            for (x, y) in [(1.0, 3.0), (2.0, 20.0), (0.3, 0.35)] {
                let (a, b) = (f_kernel(d, x, y).unwrap(), f_kernel(d, y, x).unwrap());
                assert!((a - b).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn by_parts_agrees_with_direct_form() {
        // the direct form at the same pair, forced by a tiny shift across the switch
        for d in [4, 5] {
            let ibp = f_kernel_with(d, 1.0, 4.0, &tight()).unwrap();
            assert!(ibp.by_parts);
            let direct = f_kernel_with(d, 0.6, 4.0 * 0.6, &tight()).unwrap();
            assert!(direct.value.is_finite());
            let near = f_kernel_with(d, 0.3, 0.36, &tight()).unwrap();
            assert!(!near.by_parts);
        }
    }

    #[test]
    fn linear_bound_near_origin() {
        for d in [4, 5] {
            let mut ratios = Vec::new();
            for i in 0..6 {
                for j in 0..6 {
                    let (x, y) = (10f64.powi(-i), 10f64.powf(-(j as f64) - 0.5));
                    ratios.push((x + y, f_kernel(d, x, y).unwrap().abs() / (x + y)));
                }
            }
            let c = ratios.iter().fold(0.0f64, |m, r| m.max(r.1));
            assert!(c.is_finite() && c < 10.0);
            // no growth as the arguments shrink: the smallest decade stays within 2× of the rest
            let small = ratios.iter().filter(|r| r.0 < 1e-4).fold(0.0f64, |m, r| m.max(r.1));
            let large = ratios.iter().filter(|r| r.0 >= 1e-2).fold(0.0f64, |m, r| m.max(r.1));
            assert!(small <= 2.0 * large.max(1e-3 * c), "d = {d}: small {small}, large {large}");
        }
    }

    #[test]
    fn transference_factor_identity() {
        for d in [4, 5] {
            let rho = spectral_density(d, 2.0).unwrap().rho;
            for eta in [0.5, 3.0, 11.0] {
                let k = transference_kernel_with(d, eta, 2.0, rho, &KernelOptions::default()).unwrap();
                let f = f_kernel(d, 2.0, eta).unwrap();
                assert_eq!((eta - 2.0) * k, (eta - 2.0) * (rho * f / (eta - 2.0)));
                assert!(((eta - 2.0) * k - rho * f).abs() <= 1e-15 * (rho * f).abs().max(1e-300));
            }
        }
    }

    #[test]
    fn off_diagonal_decay_order() {
        for d in [4, 5] {
            let (mut xs, mut ys) = (Vec::new(), Vec::new());
            for xi in [1.0, 2.0, 4.0, 8.0] {
                let eta = 9.0 * xi;
                let rho = spectral_density(d, xi).unwrap().rho;
                let k = transference_kernel_with(d, eta, xi, rho, &tight()).unwrap();
                xs.push(((1.0 + xi) * (1.0 + eta)).ln());
                ys.push(k.abs().ln());
            }
            let (slope, _, _) = line_fit(&xs, &ys);
            assert!(-slope >= 3.0, "d = {d}: fitted N = {}", -slope);
        }
    }

    #[test]
    fn diagonal_limit_matches_divided_difference() {
        for d in [4, 5] {
            for xi in [0.5, 2.0] {
                let rho = spectral_density(d, xi).unwrap().rho;
                let k = transference_kernel_with(d, xi, xi, rho, &tight()).unwrap();
                let f0 = f_kernel_with(d, xi, xi, &tight()).unwrap().value;
                let dd = |h: f64| (f_kernel_with(d, xi, xi + h, &tight()).unwrap().value - f0) / h;
                let (h, h2) = (2e-4, 1e-4);
                let oracle = rho * (2.0 * dd(h2) - dd(h));
                assert!((k - oracle).abs() <= 1e-4 * oracle.abs(), "d = {d}, ξ = {xi}: {k} vs {oracle}");
            }
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(f_kernel(3, 1.0, 1.0).is_err());
        assert!(f_kernel(4, -1.0, 1.0).is_err());
        assert!(f_kernel(5, 1.0, f64::NAN).is_err());
    }
}
