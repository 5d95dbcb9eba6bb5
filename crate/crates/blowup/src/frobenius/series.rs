use num_complex::Complex64;

use super::FrobeniusError;
use crate::series_core::{Coeff, LogPowerSeries};

/// Distance below which `μ` is treated as an indicial root.
pub const ROOT_TOL: f64 = 1e-9;
/// Smallest admissible non-resonant indicial value `|I(μ)|`.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

/// `z²u'' + z P(z) u' + Q(z) u = 0` around a regular singular point, with `P = z·p(z)` and
/// `Q = z²·q(z)` analytic.
#[derive(Debug, Clone, PartialEq)]
pub struct ODESpec {
    pub p_series: LogPowerSeries,
    pub q_series: LogPowerSeries,
    pub center: Complex64,
}

impl ODESpec {
    pub fn new(p: Vec<f64>, q: Vec<f64>, radius: f64) -> Self {
        Self {
            p_series: LogPowerSeries::analytic(p, radius),
            q_series: LogPowerSeries::analytic(q, radius),
            center: Complex64::new(0.0, 0.0),
        }
    }

    pub fn p0(&self) -> f64 {
        self.p_series.coeff(0, 0)
    }

    pub fn q0(&self) -> f64 {
        self.q_series.coeff(0, 0)
    }

    pub fn radius(&self) -> f64 {
        self.p_series.radius.min(self.q_series.radius)
    }

    fn p(&self) -> &[f64] {
        &self.p_series.coeffs[0]
    }

    fn q(&self) -> &[f64] {
        &self.q_series.coeffs[0]
    }

    /// Indicial polynomial `I(μ) = μ(μ−1) + p₀μ + q₀`.
    pub fn indicial<T: Coeff>(&self, mu: T) -> T {
        mu * mu + mu.scale(self.p0() - 1.0) + T::from_real(self.q0())
    }
}

/// Roots of `α² + (p₀−1)α + q₀ = 0`, ordered by descending real part.
pub fn indicial_roots(ode: &ODESpec) -> (Complex64, Complex64) {
    let b = ode.p0() - 1.0;
    let c = ode.q0();
    let disc = Complex64::new(b * b - 4.0 * c, 0.0).sqrt();
    let r1 = (-b + disc) * 0.5;
    let r2 = (-b - disc) * 0.5;
    if r1.re >= r2.re {
        (r1, r2)
    } else {
        (r2, r1)
    }
}

/// Fundamental system `u₁ = z^{r₁}h₁`, `u₂ = z^{r₂}h₂ + c·log(z)·u₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrobeniusSystem {
    pub r1: Complex64,
    pub r2: Complex64,
    pub h1: LogPowerSeries<Complex64>,
    pub h2: LogPowerSeries<Complex64>,
    pub c: Complex64,
    /// `W(u₁, u₂) = z^{−p₀}·(analytic)`; offset exponent `−p₀`.
    pub wronskian_series: LogPowerSeries<Complex64>,
}

impl FrobeniusSystem {
    /// `(h, h', h'')` by Horner; each derivative loop stops at the first surviving power.
    fn horner_derivs(h: &LogPowerSeries<Complex64>, z: f64) -> [Complex64; 3] {
        let row = &h.coeffs[0];
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for (n, &c) in row.iter().enumerate().rev() {
            let nf = n as f64;
            out[0] = out[0] * z + c;
            if n >= 1 {
                out[1] = out[1] * z + c * nf;
            }
            if n >= 2 {
                out[2] = out[2] * z + c * nf * (nf - 1.0);
            }
        }
        out
    }

    /// `(u, u', u'')` of `z^{r}h(z)` at real `z > 0`.
    fn power_times(r: Complex64, h: &LogPowerSeries<Complex64>, z: f64) -> [Complex64; 3] {
        let [hv, h1, h2] = Self::horner_derivs(h, z);
        let zr = Complex64::new(z, 0.0).powc(r);
        let u = zr * hv;
        let u1 = zr * (r / z * hv + h1);
        let u2 = zr * (r * (r - 1.0) / (z * z) * hv + 2.0 * r / z * h1 + h2);
        [u, u1, u2]
    }

    /// `(u₁, u₁', u₁'')` at real `z > 0`.
    pub fn u1(&self, z: f64) -> [Complex64; 3] {
        Self::power_times(self.r1, &self.h1, z)
    }

    /// `(u₂, u₂', u₂'')` at real `z > 0`.
    pub fn u2(&self, z: f64) -> [Complex64; 3] {
        let [a, a1, a2] = Self::power_times(self.r2, &self.h2, z);
        if self.c == Complex64::new(0.0, 0.0) {
            return [a, a1, a2];
        }
        let [b, b1, b2] = self.u1(z);
        let l = z.ln();
        [a + self.c * l * b, a1 + self.c * (b / z + l * b1), a2 + self.c * (-b / (z * z) + 2.0 * b1 / z + l * b2)]
    }

    /// Wronskian from the stored closed form.
    pub fn wronskian(&self, z: f64) -> Complex64 {
        self.wronskian_series.eval_complex(Complex64::new(z, 0.0))
    }
}

fn nearest_root(mu: Complex64, roots: (Complex64, Complex64)) -> usize {
    let hits = [roots.0, roots.1].iter().filter(|r| (mu - **r).norm() < ROOT_TOL).count();
    if hits == 2 && (roots.0 - roots.1).norm() >= ROOT_TOL {
        1
    } else {
        hits
    }
}

/// Solves `I(μ + D) c = r` for a polynomial `c(L)` (`D = d/dL`), where `res` counts how many
/// indicial roots `μ` coincides with; free constants are set from `init` (zero by default).
fn back_substitute<T: Coeff>(ode: &ODESpec, mu: T, res: usize, rhs: &[T], init: &[T], cap: usize) -> Result<Vec<T>, f64> {
    let i0 = ode.indicial(mu);
    let i1 = mu.scale(2.0) + T::from_real(ode.p0() - 1.0);
    let mut c = vec![T::default(); cap + 1];
    let top = rhs.iter().rposition(|x| x.modulus() != 0.0);
    match res {
        0 => {
            if i0.modulus() < DENOMINATOR_FLOOR {
                return Err(i0.modulus());
            }
            if let Some(top) = top {
                for k in (0..=top).rev() {
                    let mut v = rhs[k];
                    if k < cap {
                        v = v - i1.scale((k + 1) as f64) * c[k + 1];
                    }
                    if k + 2 <= cap {
                        v = v - c[k + 2].scale(((k + 2) * (k + 1)) as f64);
                    }
                    c[k] = v / i0;
                }
            }
        }
        1 => {
            if i1.modulus() < DENOMINATOR_FLOOR {
                return Err(i1.modulus());
            }
            c[0] = init.first().copied().unwrap_or_default();
            if let Some(top) = top {
                if top + 1 > cap {
                    return Err(0.0);
                }
                for k in (0..=top).rev() {
                    let mut v = rhs[k];
                    if k + 2 <= cap {
                        v = v - c[k + 2].scale(((k + 2) * (k + 1)) as f64);
                    }
                    c[k + 1] = v / i1.scale((k + 1) as f64);
                }
            }
        }
        _ => {
            c[0] = init.first().copied().unwrap_or_default();
            c[1] = init.get(1).copied().unwrap_or_default();
            if let Some(top) = top {
                if top + 2 > cap {
                    return Err(0.0);
                }
                for k in (0..=top).rev() {
                    c[k + 2] = rhs[k] / T::from_real(((k + 2) * (k + 1)) as f64);
                }
            }
        }
    }
    Ok(c)
}

/// Core recursion: returns `c_n(L)` for `n = 0..=order`, with the solution
/// `z^β Σ_n c_n(log z) zⁿ`. Homogeneous when `forcing` is `None` (then `init` is `c₀`).
#[allow(clippy::too_many_arguments)]
fn recursion<T: Coeff>(
    ode: &ODESpec,
    beta: T,
    roots: (Complex64, Complex64),
    order: usize,
    init: &[T],
    forcing: Option<(&[f64], usize)>,
    cap: usize,
) -> Result<Vec<Vec<T>>, (usize, f64)> {
    let p = ode.p();
    let q = ode.q();
    let mut cs: Vec<Vec<T>> = Vec::with_capacity(order + 1);
    for n in 0..=order {
        let mu = beta + T::from_real(n as f64);
        let mut rhs = vec![T::default(); cap + 1];
        if let Some((g, j)) = forcing {
            if let Some(&gn) = g.get(n) {
                rhs[j] = T::from_real(gn);
            }
        }
        for m in 1..=n {
            let pm = p.get(m).copied().unwrap_or(0.0);
            let qm = q.get(m).copied().unwrap_or(0.0);
            if pm == 0.0 && qm == 0.0 {
                continue;
            }
            let prev = &cs[n - m];
            let shift = beta + T::from_real((n - m) as f64);
            for k in 0..=cap {
                let mut v = (shift.scale(pm) + T::from_real(qm)) * prev[k];
                if k < cap {
                    v += prev[k + 1].scale(pm * (k + 1) as f64);
                }
                rhs[k] = rhs[k] - v;
            }
        }
        let res = nearest_root(mu.to_complex(), roots);
        let c = if n == 0 && forcing.is_none() {
            let mut c = vec![T::default(); cap + 1];
            c[..init.len()].copy_from_slice(init);
            c
        } else {
            let free: &[T] = if forcing.is_none() { &[] } else { init };
            back_substitute(ode, mu, res, &rhs, free, cap).map_err(|d| (n, d))?
        };
        cs.push(c);
    }
    Ok(cs)
}

fn to_series<T: Coeff>(cs: &[Vec<T>], beta: f64, radius: f64, cap: usize) -> LogPowerSeries<T> {
    let coeffs = (0..=cap).map(|k| cs.iter().map(|c| c[k]).collect()).collect();
    LogPowerSeries::new(Complex64::new(0.0, 0.0), beta, coeffs, radius).trim_logs()
}

/// Fundamental system by coefficient recursion up to monomial order `order`.
pub fn fundamental_system(ode: &ODESpec, order: usize) -> Result<FrobeniusSystem, FrobeniusError> {
    let order = order.max(2);
    let (r1, r2) = indicial_roots(ode);
    let radius = ode.radius();
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let brk = |(n, d): (usize, f64)| FrobeniusError::RecursionBreakdown { order: n, denominator: d };
    let c1 = recursion(ode, r1, (r1, r2), order, &[one], None, 1).map_err(brk)?;
    if c1.iter().any(|c| c[1].norm() != 0.0) {
        return Err(FrobeniusError::RecursionBreakdown { order: 0, denominator: 0.0 });
    }
    let double = (r1 - r2).norm() < ROOT_TOL;
    let init = if double { vec![one, one] } else { vec![one] };
    let c2 = recursion(ode, r2, (r1, r2), order, &init, None, 1).map_err(brk)?;
    let h1 = LogPowerSeries::new(zero, 0.0, vec![c1.iter().map(|c| c[0]).collect()], radius);
    let h2 = LogPowerSeries::new(zero, 0.0, vec![c2.iter().map(|c| c[0]).collect()], radius);
    let c = if double {
        one
    } else {
        let gap = r1 - r2;
        let m = gap.re.round();
        if gap.im.abs() < ROOT_TOL && (gap.re - m).abs() < ROOT_TOL && m >= 0.0 && (m as usize) <= order {
            c2[m as usize][1]
        } else {
            zero
        }
    };
    // W = C z^{−p₀} exp(−Σ_{n≥1} p_n zⁿ/n)
    let p = ode.p();
    let mut s = vec![0.0; order + 1];
    for n in 1..=order {
        s[n] = -p.get(n).copied().unwrap_or(0.0) / n as f64;
    }
    let mut e = vec![0.0; order + 1];
    e[0] = 1.0;
    for n in 1..=order {
        let mut acc = 0.0;
        for k in 1..=n {
            acc += k as f64 * s[k] * e[n - k];
        }
        e[n] = acc / n as f64;
    }
    let lead = if double { one } else { r2 - r1 };
    let wr = LogPowerSeries::new(zero, -ode.p0(), vec![e.iter().map(|&x| lead * x).collect()], radius);
    Ok(FrobeniusSystem { r1, r2, h1, h2, c, wronskian_series: wr })
}

/// Particular solution of `z²w'' + zP w' + Q w = z^β g(z) log(z)^j`, i.e. the forcing
/// `z^{β−2} g log^j` in the normalized form `w'' + p w' + q w`.
///
/// The result has the shape `z^β Σ_{k≤j+2} w_k(z) log^k`; log powers beyond `j` appear only
/// at resonances (`β + n` an indicial root), and the homogeneous constants freed there are
/// set to zero.
pub fn solve_inhomogeneous(ode: &ODESpec, forcing_beta: f64, g: &LogPowerSeries, j: usize) -> Result<LogPowerSeries, FrobeniusError> {
    let order = g.n_max();
    let roots = indicial_roots(ode);
    let cap = j + 2;
    let radius = ode.radius().min(g.radius);
    let cs = recursion(ode, forcing_beta, roots, order, &[], Some((&g.coeffs[0], j)), cap)
        .map_err(|(n, d)| FrobeniusError::ResonanceOverflow { order: n, denominator: d })?;
    Ok(to_series(&cs, forcing_beta, radius, cap))
}

/// Applies `z²w'' + zP w' + Q w` to a log-power series (coefficient-exact, truncated at the
/// input order); used to check particular solutions.
pub fn apply_operator(ode: &ODESpec, w: &LogPowerSeries) -> LogPowerSeries {
    let kk = w.k_max();
    let nn = w.n_max();
    let p = ode.p();
    let q = ode.q();
    let mut out = vec![vec![0.0; nn + 1]; kk + 1];
    for n in 0..=nn {
        for m in 0..=n {
            let (pm, qm) = (p.get(m).copied().unwrap_or(0.0), q.get(m).copied().unwrap_or(0.0));
            let mu = w.beta + (n - m) as f64;
            for k in 0..=kk {
                let c = |i: usize| if i <= kk { w.coeffs[i][n - m] } else { 0.0 };
                // θ(θ−1) on z^μ L^k-expansions: (μ+D)(μ+D−1) = μ(μ−1) + (2μ−1)D + D²
                let mut v = (pm * mu + qm) * c(k) + pm * (k + 1) as f64 * c(k + 1);
                if m == 0 {
                    v += mu * (mu - 1.0) * c(k) + (2.0 * mu - 1.0) * (k + 1) as f64 * c(k + 1) + ((k + 2) * (k + 1)) as f64 * c(k + 2);
                }
                out[k][n] += v;
            }
        }
    }
    LogPowerSeries::new(w.center, w.beta, out, w.radius)
}
