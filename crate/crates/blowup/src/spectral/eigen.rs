use super::closed::{coupling, operator_potential, scale};
use super::{check_dimension, SpectralError};
use crate::frobenius::{integrate, OdeOptions};
use crate::series_core::Jet2;
use num_complex::Complex64;
use std::f64::consts::PI;

/// The origin series is used on `R ≤ R_s` with `R_s² = min(1/|ξ|, c/4)`.
fn series_limit(d: usize, xi: f64) -> f64 {
    let geo = 0.25 * scale(d);
    if xi == 0.0 {
        geo.sqrt()
    } else {
        geo.min(1.0 / xi.abs()).sqrt()
    }
}

/// `φ(R, ξ) = R^{(d−1)/2} Σ_n a_n R^{2n}`: the regular solution of `𝓛φ = ξφ` with
/// `φ(R, 0) = φ(R)`. With `g = φ/R^{(d−1)/2}` the equation is `Δ_d g + (pW^{p−1} + ξ)g = 0`.
#[derive(Debug, Clone)]
struct OriginSeries {
    m: f64,
    a: Vec<f64>,
}

impl OriginSeries {
    fn new(d: usize, xi: f64, r_max: f64) -> Self {
        let (k, c) = (coupling(d), scale(d));
        let df = d as f64;
        // pW^{p−1} = (K/c²) Σ_k (k+1)(−x/c)^k
        let pk = |j: usize| k / (c * c) * (j as f64 + 1.0) * (-1.0 / c).powi(j as i32);
        let x_max = r_max * r_max;
        let mut a = vec![-c.powf(1.0 - df / 2.0)];
        let mut largest = a[0].abs();
        for n in 1..400 {
            let mut acc = xi * a[n - 1];
            for j in 0..n {
                acc += pk(j) * a[n - 1 - j];
            }
            let nf = n as f64;
            let an = -acc / (2.0 * nf * (2.0 * nf + df - 2.0));
            a.push(an);
            let term = an.abs() * x_max.powi(n as i32);
            largest = largest.max(term);
            if n > 4 && term < 1e-19 * largest && a[n - 1].abs() * x_max.powi(n as i32 - 1) < 1e-19 * largest {
                break;
            }
        }
        Self { m: (df - 1.0) / 2.0, a }
    }

    /// `(φ, φ_R)`.
    fn eval(&self, r: f64) -> [f64; 2] {
        let x = r * r;
        let (mut g, mut gr) = (0.0, 0.0);
        for (n, &an) in self.a.iter().enumerate().rev() {
            g = g * x + an;
            if n > 0 {
                gr = gr * x + 2.0 * n as f64 * an;
            }
        }
        // gr currently holds Σ 2n a_n x^{n−1}
        let gr = gr * r;
        let rm = r.powf(self.m);
        [rm * g, self.m * r.powf(self.m - 1.0) * g + rm * gr]
    }
}

fn ode_options(scale: f64) -> OdeOptions {
    OdeOptions::tol(1e-12, 1e-15 * scale)
}

/// `(φ(R, ξ), ∂_Rφ(R, ξ))` at ascending nodes `R ≥ 0`: the origin series on `R²|ξ| ≤ 1`
/// (and `R² ≤ c/4`), continued by integrating `φ'' = (V − ξ)φ`. For `ξ > 0`, beyond
/// [`far_radius`] the representation `φ = 2 Re(ā ψ⁺)` with the asymptotic Jost expansion is used.
pub fn eigenfunction(d: usize, xi: f64, nodes: &[f64]) -> Result<Vec<[f64; 2]>, SpectralError> {
    check_dimension(d)?;
    if !xi.is_finite() || nodes.iter().any(|r| !(*r >= 0.0)) || nodes.windows(2).any(|w| w[1] < w[0]) {
        return Err(SpectralError::InvalidArgument("nodes must be ascending and nonnegative, ξ finite".into()));
    }
    let far = if xi > 0.0 { nodes.partition_point(|&r| r <= far_radius(d, xi)) } else { nodes.len() };
    let rs = series_limit(d, xi);
    let series = OriginSeries::new(d, xi, rs);
    let split = nodes[..far].partition_point(|&r| r <= rs);
    let mut out: Vec<[f64; 2]> = nodes[..split].iter().map(|&r| series.eval(r)).collect();
    if split < far {
        let y0 = series.eval(rs);
        let amp = y0[0].abs().max((1.0 + xi.abs()).powf((1.0 - d as f64) / 4.0));
        let rhs = |r: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = (operator_potential(d, r) - xi) * y[0];
        };
        let traj = integrate(rhs, rs, &y0, &nodes[split..far], &ode_options(amp))?;
        out.extend(traj.ys.iter().map(|y| [y[0], y[1]]));
    }
    if far < nodes.len() {
        let ac = spectral_density(d, xi)?.a.conj() * xi.powf(-0.25);
        let series = JostSeries::new(d, ik_of(xi));
        for &r in &nodes[far..] {
            let (f, rel) = series.eval(r);
            if rel > 1e-14 {
                return Err(SpectralError::IterationDivergence { xi, r, tol: 1e-14 });
            }
            out.push([2.0 * (ac * f[0]).re, 2.0 * (ac * f[1]).re]);
        }
    }
    Ok(out)
}

/// Radius beyond which [`eigenfunction`] evaluates `φ(·, ξ)`, `ξ > 0`, from the Jost expansion;
/// lies past the matching window of [`spectral_density`].
fn far_radius(d: usize, xi: f64) -> f64 {
    (FAR_PHASE / xi.sqrt()).max(15.0).max(2.0 * scale(d).sqrt() + 10.0)
}

/// `φ(R, ξ)` as a radial jet; `∂_RRφ = (V − ξ)φ` from the equation.
pub fn phi_xi(d: usize, r: f64, xi: f64) -> Result<Jet2, SpectralError> {
    let [u, ur] = eigenfunction(d, xi, &[r])?[0];
    Ok(Jet2::radial(u, ur, (operator_potential(d, r) - xi) * u))
}

/// Smallest `|ik|R` at which the asymptotic expansion of the Jost solution is evaluated.
const FAR_PHASE: f64 = 40.0;

/// `V(R) = Σ_m v_m R^{−m}` for `R² > c`.
fn far_potential(d: usize, n: usize) -> Vec<f64> {
    let df = d as f64;
    let (k, c) = (coupling(d), scale(d));
    let mut v = vec![0.0; n + 2];
    v[2] = (df - 1.0) * (df - 3.0) / 4.0;
    let mut j = 0;
    while 4 + 2 * j < v.len() {
        v[4 + 2 * j] -= k * (j as f64 + 1.0) * (-c).powi(j as i32);
        j += 1;
    }
    v
}

/// `f = e^{ikR} Σ_n b_n R^{−n}` for `ik` (`i√ξ` outgoing, `−√(−ξ)` decaying), from
/// `w'' + 2ik w' = V w`: `b_n = [n(n−1)b_{n−1} − Σ_m v_m b_{n+1−m}]/(2ikn)`.
struct JostSeries {
    ik: Complex64,
    b: Vec<Complex64>,
}

impl JostSeries {
    const N_MAX: usize = 240;

    fn new(d: usize, ik: Complex64) -> Self {
        let v = far_potential(d, Self::N_MAX + 1);
        let mut b = vec![Complex64::new(1.0, 0.0)];
        for n in 1..Self::N_MAX {
            let nf = n as f64;
            let mut acc = b[n - 1] * (nf * (nf - 1.0));
            for m in 2..=(n + 1) {
                acc -= b[n + 1 - m] * v[m];
            }
            let bn = acc / (ik * 2.0 * nf);
            // the coefficients grow factorially
            if !(bn.norm() < 1e280) {
                break;
            }
            b.push(bn);
        }
        Self { ik, b }
    }

    /// `(f, f')` at `R` and the size of the last terms used relative to `|f|`, which bounds the
    /// truncation error of the asymptotic series.
    fn eval(&self, r: f64) -> ([Complex64; 2], f64) {
        let (mut w, mut wr) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        let mut last = f64::INFINITY;
        let mut last_two = [f64::INFINITY; 2];
        // the series is asymptotic: terms may grow for a few orders, and diverge beyond n ≈ 2|k|R
        let n_stop = self.b.len().min((2.0 * self.ik.norm() * r) as usize).max(4.min(self.b.len()));
        let inv = 1.0 / r;
        let mut pw = 1.0;
        for n in 1..n_stop {
            let nf = n as f64;
            pw *= inv;
            let term = self.b[n] * pw;
            w += term;
            wr -= term * (nf * inv);
            // single terms can vanish exactly (b₂ = 0 when v₂ = 2), so look at three in a row
            let recent = term.norm().max(last_two[0]).max(last_two[1]);
            last_two = [last_two[1], term.norm()];
            last = recent;
            if n > 6 && recent < 1e-18 * w.norm() {
                break;
            }
        }
        let e = (self.ik * r).exp();
        ([e * w, e * (self.ik * w + wr)], last / w.norm())
    }
}

fn ik_of(xi: f64) -> Complex64 {
    if xi > 0.0 {
        Complex64::new(0.0, xi.sqrt())
    } else {
        Complex64::new(-(-xi).sqrt(), 0.0)
    }
}

/// `(f, f')` at ascending nodes for the Jost solution `f₊ ∼ e^{iR√ξ}` (`ξ > 0`) or the decaying
/// solution `f ∼ e^{−R√(−ξ)}` (`ξ < 0`).
///
/// The solution is started from its asymptotic expansion at `R_far` with `|ik|R_far ≥ 40` and
/// integrated inward; this is the fixed point of the Volterra equation
/// `f₊ = e^{iR√ξ} − ∫_R^∞ sin(√ξ(R−R'))/√ξ · V f₊ dR'`, whose Born series the expansion resums.
pub fn jost_samples(d: usize, xi: f64, nodes: &[f64]) -> Result<Vec<[Complex64; 2]>, SpectralError> {
    check_dimension(d)?;
    if !(xi != 0.0 && xi.is_finite()) || nodes.iter().any(|r| !(*r > 0.0)) || nodes.windows(2).any(|w| w[1] < w[0]) {
        return Err(SpectralError::InvalidArgument("Jost solution needs ξ ≠ 0 and ascending positive nodes".into()));
    }
    let ik = ik_of(xi);
    let k = ik.norm();
    let top = nodes.last().copied().unwrap_or(1.0);
    let r_far = top.max(FAR_PHASE / k).max(2.0 * scale(d).sqrt() + 10.0);
    let (f, rel) = JostSeries::new(d, ik).eval(r_far);
    if rel > 1e-14 {
        return Err(SpectralError::IterationDivergence { xi, r: r_far, tol: 1e-14 });
    }
    let desc: Vec<f64> = nodes.iter().rev().copied().collect();
    let y0 = [f[0].re, f[0].im, f[1].re, f[1].im];
    let rhs = |r: f64, y: &[f64], dy: &mut [f64]| {
        let q = operator_potential(d, r) - xi;
        dy[0] = y[2];
        dy[1] = y[3];
        dy[2] = q * y[0];
        dy[3] = q * y[1];
    };
    let amp = f[0].norm().max(f[1].norm() / k);
    let traj = integrate(rhs, r_far, &y0, &desc, &ode_options(amp))?;
    let mut out: Vec<[Complex64; 2]> = traj.ys.iter().map(|y| [Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3])]).collect();
    out.reverse();
    Ok(out)
}

/// `f₊(R, ξ)` and `∂_R f₊`; the Jost function proper is `ψ⁺ = ξ^{−1/4} f₊`.
pub fn jost(d: usize, r: f64, xi: f64) -> Result<[Complex64; 2], SpectralError> {
    if !(xi > 0.0) {
        return Err(SpectralError::InvalidArgument(format!("Jost solution needs ξ > 0, got {xi}")));
    }
    Ok(jost_samples(d, xi, &[r])?[0])
}

/// Matching diagnostics of one `a(ξ)` evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchInfo {
    pub r_match: f64,
    /// Largest relative deviation of the Wronskian across the matching window.
    pub variation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDensity {
    /// `a(ξ) = −(i/2) W(φ(·, ξ), ψ⁺(·, ξ))`.
    pub a: Complex64,
    /// Density of the absolutely continuous part of the spectral measure.
    pub rho: f64,
    pub matching: MatchInfo,
}

/// Normalization of `ρ` in terms of `a`: `ρ = 1/(RHO_FACTOR·π|a|²)`.
///
/// With `φ = aψ⁺ + c.c.` and `ψ⁺ ∼ ξ^{−1/4}e^{iR√ξ}`, the amplitude of `φ` at infinity is
/// `2|a|ξ^{−1/4}` and unitarity of `f ↦ ∫φ(R, ξ)f(R)dR` on `L²(ρ dξ)` needs `ρ = 1/(4π|a|²)`.
pub const RHO_FACTOR: f64 = 4.0;

/// Relative Wronskian variation allowed across the matching window.
const MATCH_TOL: f64 = 1e-6;

/// `a(ξ)` and `ρ(ξ)` for `ξ > 0`, matching `φ(·, ξ)` and `ψ⁺` on `R ∈ R*[1, 3/2]`,
/// `R* = max(10, 8/√ξ)`.
pub fn spectral_density(d: usize, xi: f64) -> Result<SpectralDensity, SpectralError> {
    check_dimension(d)?;
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(SpectralError::InvalidArgument(format!("spectral density needs ξ > 0, got {xi}")));
    }
    let r_star = (8.0 / xi.sqrt()).max(10.0);
    let window: Vec<f64> = (0..5).map(|i| r_star * (1.0 + 0.125 * i as f64)).collect();
    let phi = eigenfunction(d, xi, &window)?;
    let f = jost_samples(d, xi, &window)?;
    let q = xi.powf(-0.25);
    let ws: Vec<Complex64> = phi.iter().zip(&f).map(|(p, f)| (f[1] * p[0] - f[0] * p[1]) * q).collect();
    let variation = ws.iter().map(|w| (w - ws[0]).norm() / ws[0].norm()).fold(0.0, f64::max);
    if !(variation <= MATCH_TOL) {
        return Err(SpectralError::MatchingFailure { xi, variation });
    }
    let a = Complex64::new(0.0, -0.5) * ws[0];
    Ok(SpectralDensity { a, rho: rho_from_a(a), matching: MatchInfo { r_match: r_star, variation } })
}

pub(crate) fn rho_from_a(a: Complex64) -> f64 {
    1.0 / (RHO_FACTOR * PI * a.norm_sqr())
}

/// The negative eigenvalue of `𝓛` and its eigenfunction data.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenvalue {
    pub d: usize,
    pub xi: f64,
    /// `‖φ(·, ξ_d)‖²_{L²(0,∞)}` of the origin-normalized eigenfunction.
    pub norm_sq: f64,
    /// `φ(R, ξ_d) = coef · f(R)` beyond the matching radius, `f ∼ e^{−R√(−ξ_d)}`.
    pub tail_coef: f64,
    pub r_match: f64,
}

impl Eigenvalue {
    /// Origin-normalized eigenfunction `(φ, φ_R)` at ascending nodes, switching to the decaying
    /// solution beyond the matching radius.
    pub fn eigenfunction(&self, nodes: &[f64]) -> Result<Vec<[f64; 2]>, SpectralError> {
        let split = nodes.partition_point(|&r| r <= self.r_match);
        let mut out = eigenfunction(self.d, self.xi, &nodes[..split])?;
        if split < nodes.len() {
            let tail = jost_samples(self.d, self.xi, &nodes[split..])?;
            out.extend(tail.iter().map(|f| [self.tail_coef * f[0].re, self.tail_coef * f[1].re]));
        }
        Ok(out)
    }
}

const EIGEN_MATCH: f64 = 4.0;

/// `W(φ(·, ξ), f(·, ξ))/(|φ||f'| + |φ'||f|)` at `R = 4` for `ξ < 0`; vanishes at eigenvalues.
fn shooting_function(d: usize, xi: f64) -> Result<f64, SpectralError> {
    let p = eigenfunction(d, xi, &[EIGEN_MATCH])?[0];
    let f = jost_samples(d, xi, &[EIGEN_MATCH])?[0];
    let (f0, f1) = (f[0].re, f[1].re);
    Ok((p[0] * f1 - p[1] * f0) / (p[0].abs() * f1.abs() + p[1].abs() * f0.abs()))
}

/// The negative eigenvalue `ξ_d < 0`, located by a sign change of the matching Wronskian on a
/// log grid of `−ξ ∈ [10⁻⁴, 10²]` and refined by bisection.
pub fn ground_eigenvalue(d: usize) -> Result<Eigenvalue, SpectralError> {
    check_dimension(d)?;
    let grid: Vec<f64> = (0..=24).map(|i| -(10f64).powf(2.0 - 0.25 * i as f64)).collect();
    let vals = crate::par::try_map_range(grid.len(), |i| shooting_function(d, grid[i]))?;
    let j = (0..grid.len() - 1)
        .find(|&j| vals[j].signum() != vals[j + 1].signum())
        .ok_or(SpectralError::NoEigenvalue { lo: grid[0], hi: grid[grid.len() - 1] })?;
    let (mut lo, mut hi, mut flo) = (grid[j], grid[j + 1], vals[j]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= 1e-15 * mid.abs() {
            break;
        }
        let fm = shooting_function(d, mid)?;
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let xi = 0.5 * (lo + hi);
    let kappa = (-xi).sqrt();
    let r_match = EIGEN_MATCH;
    let p = eigenfunction(d, xi, &[r_match])?[0];
    let f = jost_samples(d, xi, &[r_match])?[0];
    let tail_coef = p[0] / f[0].re;
    let mut ev = Eigenvalue { d, xi, norm_sq: 0.0, tail_coef, r_match };
    // ∫φ² on panels up to where e^{−2κR} is negligible
    let r_end = r_match + 40.0 / kappa;
    let rule = gauss_quad::GaussLegendre::new(16).expect("valid Legendre rule");
    let pairs = rule.as_node_weight_pairs();
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut x = 0.0;
    while x < r_end {
        let h = (0.25 * x).clamp(0.05, 0.5 / kappa.max(0.1)).min(r_end - x);
        for &(t, w) in pairs.iter().rev() {
            nodes.push(x + 0.5 * h * (1.0 - t));
            weights.push(0.5 * h * w);
        }
        x += h;
    }
    let (nodes, weights) = sort_nodes(nodes, weights);
    let vals = ev.eigenfunction(&nodes)?;
    ev.norm_sq = vals.iter().zip(&weights).map(|(v, w)| w * v[0] * v[0]).sum();
    Ok(ev)
}

pub(crate) fn sort_nodes<T: Copy>(nodes: Vec<f64>, weights: Vec<T>) -> (Vec<f64>, Vec<T>) {
    let mut idx: Vec<usize> = (0..nodes.len()).collect();
    idx.sort_by(|&a, &b| nodes[a].total_cmp(&nodes[b]));
    (idx.iter().map(|&i| nodes[i]).collect(), idx.iter().map(|&i| weights[i]).collect())
}

#[cfg(test)]
mod tests {
    use super::super::closed::phi0;
    use super::*;

    fn fd_residual(d: usize, xi: f64, r: f64) -> f64 {
        // 𝓛φ − ξφ with φ'' from fourth-order differences of the φ' channel
        let h = 1e-3 * r.min(1.0 / xi.abs().sqrt().max(1e-3));
        let nodes = [r - 2.0 * h, r - h, r, r + h, r + 2.0 * h];
        let y = eigenfunction(d, xi, &nodes).unwrap();
        let dd = (y[0][1] - 8.0 * y[1][1] + 8.0 * y[3][1] - y[4][1]) / (12.0 * h);
        let scale = y[2][0].abs().max(y[2][1].abs() * h.max(r.min(1.0)));
        (-dd + (operator_potential(d, r) - xi) * y[2][0]).abs() / scale.max(1e-300)
    }

    #[test]
    fn zero_energy_solution_is_phi0() {
        for d in [4usize, 5] {
            let nodes = [0.01, 0.5, 1.0, 3.0, 10.0, 100.0];
            let got = eigenfunction(d, 0.0, &nodes).unwrap();
            for (r, g) in nodes.iter().zip(&got) {
                let p = phi0(d, *r);
                assert!((g[0] - p.u).abs() <= 1e-10 * p.u.abs().max(1e-3 * r.powf((3.0 - d as f64) / 2.0)), "d={d} R={r}");
                assert!((g[1] - p.u_r).abs() <= 1e-9 * (p.u_r.abs() + p.u.abs() / r), "d={d} R={r}");
            }
        }
    }

    #[test]
    fn series_and_ode_agree_on_the_overlap() {
        for d in [4usize, 5] {
            for xi in [-2.0, 0.5, 30.0] {
                let rs = series_limit(d, xi);
                let series = OriginSeries::new(d, xi, rs);
                // integrate from a smaller start and compare at R_s
                let r1 = 0.3 * rs;
                let y0 = series.eval(r1);
                let rhs = |r: f64, y: &[f64], dy: &mut [f64]| {
                    dy[0] = y[1];
                    dy[1] = (operator_potential(d, r) - xi) * y[0];
                };
                let traj = integrate(rhs, r1, &y0, &[rs], &OdeOptions::tol(1e-13, 1e-300)).unwrap();
                let s = series.eval(rs);
                assert!((traj.ys[0][0] - s[0]).abs() <= 1e-10 * s[0].abs(), "d={d} ξ={xi}");
                assert!((traj.ys[0][1] - s[1]).abs() <= 1e-10 * s[1].abs().max(s[0].abs() / rs), "d={d} ξ={xi}");
            }
        }
    }

    #[test]
    fn eigenfunction_residual_is_small() {
        for d in [4usize, 5] {
            for xi in [1e-3, 0.1, 1.0, 10.0, 100.0] {
                for r in [0.05, 0.7, 2.0, 9.0, 25.0] {
                    let res = fd_residual(d, xi, r);
                    assert!(res <= 1e-7, "d={d} ξ={xi} R={r}: {res:e}");
                }
            }
        }
    }

    #[test]
    fn phi_is_bounded_by_the_bracket_power_for_large_r() {
        for d in [4usize, 5] {
            let mut worst: f64 = 0.0;
            for xi in [0.5f64, 2.0, 10.0, 50.0, 200.0, 1000.0] {
                let nodes: Vec<f64> = (1..=40).map(|i| (1.0 + i as f64) / xi.sqrt()).collect();
                let vals = eigenfunction(d, xi, &nodes).unwrap();
                let bound = (1.0 + xi).powf((1.0 - d as f64) / 4.0);
                for v in vals {
                    worst = worst.max(v[0].abs() / bound);
                }
            }
            assert!(worst < 10.0, "d={d}: sup |φ|/⟨ξ⟩^((1−d)/4) = {worst}");
        }
    }

    #[test]
    fn jost_solution_approaches_the_plane_wave() {
        let d = 5;
        let xi: f64 = 4.0;
        let k = xi.sqrt();
        let rs: Vec<f64> = [2.0, 4.0, 8.0, 16.0, 32.0].iter().map(|q| q / k).collect();
        let f = jost_samples(d, xi, &rs).unwrap();
        let dev: Vec<f64> = rs.iter().zip(&f).map(|(r, f)| (f[0] * Complex64::new(0.0, -k * r).exp() - 1.0).norm()).collect();
        let n = rs.len() as f64;
        let xs: Vec<f64> = rs.iter().map(|r| (k * r).ln()).collect();
        let ys: Vec<f64> = dev.iter().map(|v| v.ln()).collect();
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        assert!(slope <= -0.95, "slope {slope}");
    }

    #[test]
    fn jost_wronskian_is_constant() {
        for d in [4usize, 5] {
            for xi in [0.01, 1.0, 100.0] {
                let rs = [0.5, 2.0, 10.0, 50.0];
                let f = jost_samples(d, xi, &rs).unwrap();
                let q = xi.powf(-0.25);
                // W(ψ⁺, ψ⁻) = −2i for ψ^± ∼ ξ^{−1/4}e^{±iR√ξ}
                for fr in f {
                    let (p, pm) = (fr[0] * q, fr[0].conj() * q);
                    let w = p * fr[1].conj() * q - fr[1] * q * pm;
                    assert!((w - Complex64::new(0.0, -2.0)).norm() < 1e-9, "d={d} ξ={xi}: {w}");
                }
            }
        }
    }

    #[test]
    fn jost_solves_the_equation() {
        let (d, xi) = (4, 3.0);
        for r in [0.4, 2.0, 7.0] {
            let h = 1e-3 * r;
            let nodes = [r - 2.0 * h, r - h, r, r + h, r + 2.0 * h];
            let f = jost_samples(d, xi, &nodes).unwrap();
            let dd = (f[0][1] - f[1][1] * 8.0 + f[3][1] * 8.0 - f[4][1]) / (12.0 * h);
            let res = (-dd + f[2][0] * (operator_potential(d, r) - xi)).norm() / f[2][0].norm().max(f[2][1].norm() * h);
            assert!(res < 1e-7, "R={r}: {res:e}");
        }
    }

    #[test]
    fn density_is_positive_and_consistent() {
        for d in [4usize, 5] {
            for xi in [1e-4, 0.3, 20.0] {
                let s = spectral_density(d, xi).unwrap();
                assert!(s.rho > 0.0 && s.a.norm() > 0.0);
                assert!((s.rho * RHO_FACTOR * PI * s.a.norm_sqr() - 1.0).abs() < 1e-14);
                assert!(s.matching.variation <= 1e-6);
                // φ = aψ⁺ + c.c. with the printed a up to conjugation
                let r = 3.0 * s.matching.r_match;
                let p = eigenfunction(d, xi, &[r]).unwrap()[0][0];
                let f = jost(d, r, xi).unwrap()[0] * xi.powf(-0.25);
                let recon = 2.0 * (s.a.conj() * f).re;
                assert!((recon - p).abs() < 1e-7 * s.a.norm() * xi.powf(-0.25), "d={d} ξ={xi}: {recon} vs {p}");
            }
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(spectral_density(5, 0.0).is_err());
        assert!(spectral_density(3, 1.0).is_err());
        assert!(jost(5, 1.0, -1.0).is_err());
    }

    #[test]
    fn negative_eigenvalue_by_shooting() {
        for d in [4usize, 5] {
            let ev = ground_eigenvalue(d).unwrap();
            assert!(ev.xi < 0.0 && ev.norm_sq > 0.0);
            let kappa = (-ev.xi).sqrt();
            // the origin-normalized solution decays like e^{−κR} before the growing mode takes over
            let rs: Vec<f64> = (0..6).map(|i| 6.0 + 2.0 * i as f64 / kappa.max(0.5)).collect();
            let v = eigenfunction(d, ev.xi, &rs).unwrap();
            let slope = (v[5][0].abs().ln() - v[1][0].abs().ln()) / (rs[5] - rs[1]);
            assert!((slope + kappa).abs() < 0.05 * kappa, "d={d}: slope {slope}, κ = {kappa}");
        }
    }
}
