use super::chi_unit;
use gauss_quad::GaussLaguerre;
use nalgebra::{DMatrix, DVector};

/// Reflection kernel `φ(y) = e^{−μ(y−1)} Σ_j c_j (μ(y−1))^j` on `[1, ∞)` with
/// `∫φ = 1` and `∫ yⁿ φ = 0` for `1 ≤ n ≤ M`. The decay rate `μ` keeps the reflected
/// arguments `1 − h y` inside the sampled interval up to exponentially small weight.
#[derive(Debug, Clone)]
pub struct ExtensionKernel {
    coeffs: Vec<f64>,
    mu: f64,
    rule: GaussLaguerre,
}

const DECAY: f64 = 10.0;

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |a, k| a * k as f64)
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

impl ExtensionKernel {
    /// Kernel with `moments` vanishing moments, solved from the `(M+1)×(M+1)` moment system
    /// `μ^{−1} Σ_j c_j Σ_i C(n,i) μ^{−i} (i+j)! = δ_{n0}`.
    pub fn new(moments: usize) -> Self {
        let m = moments + 1;
        let mu = DECAY;
        let a = DMatrix::from_fn(m, m, |n, j| (0..=n).map(|i| binomial(n, i) * factorial(i + j) * mu.powi(-(i as i32))).sum::<f64>() / mu);
        let mut rhs = DVector::zeros(m);
        rhs[0] = 1.0;
        let c = a.lu().solve(&rhs).expect("moment matrix is a Hankel-type positive system");
        let rule = GaussLaguerre::new(48, 0.0).expect("valid Laguerre rule");
        Self { coeffs: c.iter().copied().collect(), mu, rule }
    }

    /// Polynomial factor in `u = μ(y−1)`.
    fn poly(&self, u: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c)
    }

    /// `∫_1^∞ φ(y) g(y) dy`.
    pub fn apply(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.rule.integrate(|u| self.poly(u) * g(1.0 + u / self.mu)) / self.mu
    }

    /// `∫_1^∞ yⁿ φ(y) dy` by quadrature (a check of the construction).
    pub fn moment(&self, n: i32) -> f64 {
        self.apply(|y| y.powi(n))
    }
}

impl Default for ExtensionKernel {
    fn default() -> Self {
        Self::new(4)
    }
}

fn interp(a: &[f64], f: &[f64], x: f64) -> f64 {
    if x <= a[0] {
        return f[0];
    }
    let n = a.len();
    if x >= a[n - 1] {
        return f[n - 1];
    }
    let i = a.partition_point(|&v| v <= x) - 1;
    if a[i] == x {
        return f[i];
    }
    let w = (x - a[i]) / (a[i + 1] - a[i]);
    f[i] + w * (f[i + 1] - f[i])
}

/// Extends samples `f(aᵢ)` on `[0, a_end]` (`a_end ≈ 1`) to `[0, 2]` for one time slice.
///
/// Inside the sampled range values are interpolated linearly (exact at nodes). Beyond it,
/// `f̃(a_end + h) = cut(a)·∫φ(y) f(a_end − h y) dy`, where the kernel's vanishing moments keep
/// `f̃ − f(a_end)` of the same Hölder order as `f` near the edge, and `cut` falls from one to
/// zero across `[2(1−δ), 2]` so that the extension is supported in `a < 2`.
pub fn extend_outside_cone(a: &[f64], f: &[f64], out: &[f64], kernel: &ExtensionKernel, delta: f64) -> Vec<f64> {
    assert_eq!(a.len(), f.len());
    let a_end = a[a.len() - 1];
    let a_cut = 2.0 * (1.0 - delta);
    out.iter()
        .map(|&x| {
            if x <= a_end {
                return interp(a, f, x);
            }
            if x >= 2.0 {
                return 0.0;
            }
            let cut = 1.0 - chi_unit((x - a_cut) / (2.0 - a_cut))[0];
            let h = x - a_end;
            cut * kernel.apply(|y| interp(a, f, a_end - h * y))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_moments() {
        let k = ExtensionKernel::new(4);
        assert!((k.moment(0) - 1.0).abs() < 1e-9);
        for n in 1..=4 {
            assert!(k.moment(n).abs() < 1e-8, "n={n}: {}", k.moment(n));
        }
    }

    #[test]
    fn constants_extend_to_constants() {
        let a: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let f = vec![3.0; a.len()];
        let out: Vec<f64> = (0..=200).map(|i| i as f64 / 100.0).collect();
        let delta = 0.05;
        let e = extend_outside_cone(&a, &f, &out, &ExtensionKernel::default(), delta);
        for (x, v) in out.iter().zip(&e) {
            if *x <= 2.0 * (1.0 - delta) {
                assert!((v - 3.0).abs() < 1e-9, "x={x} v={v}");
            }
            if *x >= 2.0 {
                assert_eq!(*v, 0.0);
            }
        }
        assert!(e[199] < 3.0);
    }

    #[test]
    fn interior_values_are_untouched() {
        let a: Vec<f64> = (0..=64).map(|i| (i as f64 / 64.0).sqrt()).collect();
        let f: Vec<f64> = a.iter().map(|x| (3.0 * x).sin()).collect();
        let e = extend_outside_cone(&a, &f, &a, &ExtensionKernel::default(), 0.05);
        assert_eq!(e, f);
    }

    #[test]
    fn boundary_holder_exponent_is_preserved() {
        let nu = 6.0;
        let gamma = 0.5 + nu / 2.0;
        let n = 4000;
        let a: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let f: Vec<f64> = a.iter().map(|x| (1.0 - x).powf(gamma)).collect();
        let hs = [1e-2, 2e-2, 4e-2, 8e-2];
        let out: Vec<f64> = hs.iter().map(|h| 1.0 + h).collect();
        let e = extend_outside_cone(&a, &f, &out, &ExtensionKernel::default(), 0.05);
        let slope = (e[3].abs().ln() - e[0].abs().ln()) / (hs[3] / hs[0]).ln();
        assert!((slope - gamma).abs() < 0.1, "slope {slope}");
    }
}
