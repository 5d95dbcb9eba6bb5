use statrs::function::gamma::gamma;

use super::SeriesError;

/// Parameters `(α, β; γ)` of the Gauss hypergeometric function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl HypParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self, SeriesError> {
        if is_nonpositive_integer(gamma) {
            return Err(SeriesError::InvalidGamma(gamma));
        }
        Ok(Self { alpha, beta, gamma })
    }

    /// `γ − α − β`, the exponent gap at `z = 1`.
    pub fn excess(&self) -> f64 {
        self.gamma - self.alpha - self.beta
    }

    fn shifted(&self, k: f64) -> Self {
        Self { alpha: self.alpha + k, beta: self.beta + k, gamma: self.gamma + k }
    }
}

/// A value together with an overflow flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checked {
    pub value: f64,
    pub overflow: bool,
}

/// Rising factorial `(x)_n = x(x+1)…(x+n−1)`; `(x)_0 = 1`.
pub fn pochhammer(x: f64, n: u32) -> Checked {
    let mut v = 1.0;
    for i in 0..n {
        v *= x + i as f64;
        if v == 0.0 {
            break;
        }
    }
    Checked { value: v, overflow: v.is_infinite() }
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

fn rgamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        0.0
    } else {
        1.0 / gamma(x)
    }
}

const MAX_TERMS: usize = 200_000;
const Z_SPLIT: f64 = 0.8;

/// Direct Maclaurin summation with a running geometric tail bound.
fn series(p: &HypParams, z: f64, tol: f64) -> Result<f64, SeriesError> {
    // Past this index the term ratio is monotone in n and tends to z.
    let settled = (p.alpha.abs() + p.beta.abs() + p.gamma.abs()) as usize + 2;
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        let ratio = (p.alpha + nf) * (p.beta + nf) / ((p.gamma + nf) * (nf + 1.0));
        term *= ratio * z;
        sum += term;
        if term == 0.0 {
            return Ok(sum);
        }
        if n >= settled {
            let q = ratio.abs().max(1.0) * z;
            if q < 1.0 && term.abs() * q / (1.0 - q) < tol {
                return Ok(sum);
            }
        }
    }
    Err(SeriesError::Stalled { terms: MAX_TERMS })
}

/// Taylor coefficients of the hypergeometric ODE solution around `z0`, given `w(z0)` and
/// `w'(z0)`, evaluated at `z0 + h` (value and derivative).
fn taylor_hop(p: &HypParams, z0: f64, w0: f64, w1: f64, h: f64) -> (f64, f64) {
    let (a, b, c) = (p.alpha, p.beta, p.gamma);
    let p0 = z0 * (1.0 - z0);
    let p1 = 1.0 - 2.0 * z0;
    let q0 = c - (a + b + 1.0) * z0;
    let q1 = -(a + b + 1.0);
    let mut cm = w0; // c_n
    let mut cn = w1; // c_{n+1}
    let mut val = w0 + w1 * h;
    let mut der = w1;
    let mut hp = h; // h^{n+1}
    for n in 0..400 {
        let nf = n as f64;
        let next = -((p1 * nf + q0) * (nf + 1.0) * cn + (-nf * (nf - 1.0) + q1 * nf - a * b) * cm) / (p0 * (nf + 2.0) * (nf + 1.0));
        der += (nf + 2.0) * next * hp;
        hp *= h;
        val += next * hp;
        cm = cn;
        cn = next;
        if n > 8 && (next * hp).abs() <= 1e-18 * val.abs().max(1e-300) && (cm * hp / h).abs() <= 1e-18 * val.abs().max(1e-300) {
            break;
        }
    }
    (val, der)
}

/// Analytic continuation along `[0.5, z]` by repeated Taylor steps of half the distance to
/// the singular point `z = 1`.
fn continuation(p: &HypParams, z: f64, tol: f64) -> Result<f64, SeriesError> {
    let z0 = 0.5;
    let stol = tol.min(1e-15);
    let mut w = series(p, z0, stol)?;
    let mut dw = p.alpha * p.beta / p.gamma * series(&p.shifted(1.0), z0, stol)?;
    let mut x = z0;
    while x < z {
        let h = (0.5 * (1.0 - x)).min(z - x);
        let (nw, ndw) = taylor_hop(p, x, w, dw, h);
        w = nw;
        dw = ndw;
        x += h;
        if z - x < 1e-15 * z {
            break;
        }
    }
    Ok(w)
}

/// Gauss hypergeometric function `F(α, β; γ; z)` for `z ∈ [0, 1]`, accurate to `tol`
/// (absolute) away from `z = 1`.
///
/// Uses the Maclaurin series for `z ≤ 0.8`; beyond that the connection formula to `1 − z`
/// when `γ − α − β` is safely non-integer, otherwise Taylor continuation of the ODE.
/// Terminating cases (`α` or `β` a non-positive integer) are summed exactly.
pub fn hyp2f1(p: HypParams, z: f64, tol: f64) -> Result<f64, SeriesError> {
    if is_nonpositive_integer(p.gamma) {
        return Err(SeriesError::InvalidGamma(p.gamma));
    }
    if !(0.0..=1.0).contains(&z) || z.is_nan() {
        return Err(SeriesError::ArgumentRange(z));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    for m in [p.alpha, p.beta] {
        if is_nonpositive_integer(m) {
            let n = (-m) as u32;
            let mut term = 1.0;
            let mut sum = 1.0;
            for k in 0..n {
                let kf = k as f64;
                term *= (p.alpha + kf) * (p.beta + kf) / ((p.gamma + kf) * (kf + 1.0)) * z;
                sum += term;
            }
            return Ok(sum);
        }
    }
    let excess = p.excess();
    if z == 1.0 {
        if excess <= 0.0 {
            return Err(SeriesError::NonConvergent { excess });
        }
        return Ok(gamma(p.gamma) * gamma(excess) * rgamma(p.gamma - p.alpha) * rgamma(p.gamma - p.beta));
    }
    if z <= Z_SPLIT {
        return series(&p, z, tol);
    }
    if (excess - excess.round()).abs() > 1e-3 {
        let w = 1.0 - z;
        let (a, b, c) = (p.alpha, p.beta, p.gamma);
        let stol = tol.min(1e-15);
        let ca = gamma(c) * gamma(excess) * rgamma(c - a) * rgamma(c - b);
        let cb = gamma(c) * gamma(-excess) * rgamma(a) * rgamma(b);
        let f1 = if ca == 0.0 { 0.0 } else { series(&HypParams { alpha: a, beta: b, gamma: 1.0 - excess }, w, stol)? };
        let f2 = if cb == 0.0 { 0.0 } else { series(&HypParams { alpha: c - a, beta: c - b, gamma: 1.0 + excess }, w, stol)? };
        return Ok(ca * f1 + cb * w.powf(excess) * f2);
    }
    continuation(&p, z, tol)
}

/// `F`, `F'`, `F''` at `z`, from the contiguous shifts `F' = (αβ/γ) F(α+1, β+1; γ+1)`.
pub fn hyp2f1_jet(p: HypParams, z: f64, tol: f64) -> Result<[f64; 3], SeriesError> {
    let f0 = hyp2f1(p, z, tol)?;
    let c1 = p.alpha * p.beta / p.gamma;
    let f1 = if c1 == 0.0 { 0.0 } else { c1 * hyp2f1(p.shifted(1.0), z, tol)? };
    let c2 = c1 * (p.alpha + 1.0) * (p.beta + 1.0) / (p.gamma + 1.0);
    let f2 = if c2 == 0.0 { 0.0 } else { c2 * hyp2f1(p.shifted(2.0), z, tol)? };
    Ok([f0, f1, f2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hp(a: f64, b: f64, c: f64) -> HypParams {
        HypParams::new(a, b, c).unwrap()
    }

    #[test]
    fn pochhammer_examples() {
        assert_eq!(pochhammer(2.5, 0).value, 1.0);
        assert_eq!(pochhammer(3.0, 4).value, 360.0);
        assert_eq!(pochhammer(-2.0, 4).value, 0.0);
        assert!(pochhammer(1e3, 400).overflow);
    }

    #[test]
    fn value_at_zero() {
        assert_eq!(hyp2f1(hp(0.3, -1.7, 2.2), 0.0, 1e-14).unwrap(), 1.0);
    }

    #[test]
    fn log_closed_form() {
        for z in [0.1, 0.5, 0.79, 0.81, 0.95, 0.999] {
            let exact = -(1.0f64 - z).ln() / z;
            let v = hyp2f1(hp(1.0, 1.0, 2.0), z, 1e-14).unwrap();
            assert!((v - exact).abs() < 1e-11 * exact, "z={z}: {v} vs {exact}");
        }
        assert!((hyp2f1(hp(1.0, 1.0, 2.0), 0.5, 1e-12).unwrap() - 1.3862944).abs() < 1e-7);
    }

    #[test]
    fn arcsin_closed_form_noninteger_gap() {
        // F(1/2, 1/2; 3/2; z²) = asin(z)/z
        for z in [0.3f64, 0.9, 0.99, 0.9999] {
            let v = hyp2f1(hp(0.5, 0.5, 1.5), z * z, 1e-14).unwrap();
            assert!((v - z.asin() / z).abs() < 1e-12, "{z}");
        }
    }

    #[test]
    fn gauss_sum_at_one() {
        // F(a, b; c; 1) with c − a − b = 1/2 + ν/2 at ν = 6
        let nu = 6.0;
        let s: f64 = 1.5 * (-1.0 - nu) + 2.0 * nu;
        let p = hp(-s / 2.0, -s / 2.0 + 0.5, 2.5);
        assert!((p.excess() - (0.5 + nu / 2.0)).abs() < 1e-15);
        let at_one = hyp2f1(p, 1.0, 1e-14).unwrap();
        let near = hyp2f1(p, 1.0 - 1e-10, 1e-14).unwrap();
        assert!((at_one - near).abs() < 1e-8);
    }

    #[test]
    fn divergence_and_invalid_gamma() {
        assert!(matches!(hyp2f1(hp(1.0, 1.0, 2.0), 1.0, 1e-10), Err(SeriesError::NonConvergent { .. })));
        assert!(matches!(HypParams::new(1.0, 1.0, -2.0), Err(SeriesError::InvalidGamma(_))));
    }

    #[test]
    fn terminating_polynomial() {
        // β = −1: F = 1 + (α·(−1)/γ) z
        let v = hyp2f1(hp(-1.5, -1.0, 2.5), 1.0, 1e-14).unwrap();
        assert!((v - (1.0 + 1.5 / 2.5)).abs() < 1e-15);
    }

    #[test]
    fn integer_gap_uses_continuation() {
        // c − a − b = 1 exactly: F(1, 1; 3; z) = [ (1 − z) log(1 − z) + z ] · 2 / z²
        for z in [0.85f64, 0.99, 0.999999] {
            let exact = 2.0 * ((1.0 - z) * (1.0 - z).ln() + z) / (z * z);
            let v = hyp2f1(hp(1.0, 1.0, 3.0), z, 1e-14).unwrap();
            assert!((v - exact).abs() < 1e-11, "{z}: {v} vs {exact}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn ode_residual(a in -3.0f64..3.0, b in -3.0f64..3.0, gap in 0.5f64..4.0, z in 0.0f64..0.999) {
            let c = a + b + gap + 0.01;
            prop_assume!(!is_nonpositive_integer(c) && !is_nonpositive_integer(c + 1.0) && !is_nonpositive_integer(c + 2.0));
            let p = HypParams { alpha: a, beta: b, gamma: c };
            let [w, w1, w2] = hyp2f1_jet(p, z, 1e-15).unwrap();
            let res = z * (1.0 - z) * w2 + (c - (a + b + 1.0) * z) * w1 - a * b * w;
            let scale = 1.0 + w2.abs() + w1.abs() * c.abs().max(1.0) + (a * b * w).abs();
            prop_assert!(res.abs() <= 1e-8 * scale, "res {res} scale {scale}");
        }

    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn monotone_when_alpha_beta_positive(a in -4.0f64..4.0, b in -4.0f64..4.0, c in 0.05f64..6.0) {
            prop_assume!(a * b > 0.05);
            let p = HypParams { alpha: a, beta: b, gamma: c };
            let n = 10_000;
            let mut prev = 0.0;
            for i in 1..=n {
                let z = (1.0 - 1e-6) * i as f64 / n as f64;
                let v = hyp2f1(p, z, 1e-15).unwrap() - 1.0;
                prop_assert!(v > prev, "not increasing at z={z}: {v} <= {prev}");
                prev = v;
            }
        }
    }
}
