use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use num_complex::Complex64;

use super::SeriesError;

/// Scalar type a series may carry: `f64` or `Complex64`.
pub trait Coeff:
    Copy
    + Debug
    + Default
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + 'static
{
    fn from_real(x: f64) -> Self;
    fn modulus(self) -> f64;
    fn finite(self) -> bool;
    fn to_complex(self) -> Complex64;
    fn scale(self, s: f64) -> Self;
}

impl Coeff for f64 {
    fn from_real(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn finite(self) -> bool {
        self.is_finite()
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

impl Coeff for Complex64 {
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn to_complex(self) -> Complex64 {
        self
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

/// `x^β Σ_{k≤K} log(x)^k Σ_{n≤N} c[k][n] xⁿ` in the local variable `x = z − center`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogPowerSeries<T: Coeff = f64> {
    pub center: Complex64,
    pub beta: f64,
    /// `coeffs[k][n]`; every row has the same length `N + 1`.
    pub coeffs: Vec<Vec<T>>,
    pub radius: f64,
}

impl<T: Coeff> LogPowerSeries<T> {
    /// Builds a series, padding ragged rows with zeros so the matrix is rectangular.
    pub fn new(center: Complex64, beta: f64, mut coeffs: Vec<Vec<T>>, radius: f64) -> Self {
        if coeffs.is_empty() {
            coeffs.push(vec![T::default()]);
        }
        let width = coeffs.iter().map(Vec::len).max().unwrap_or(1).max(1);
        for row in &mut coeffs {
            row.resize(width, T::default());
        }
        Self { center, beta, coeffs, radius }
    }

    /// Analytic series `Σ c[n] xⁿ` about the origin.
    pub fn analytic(coeffs: Vec<T>, radius: f64) -> Self {
        Self::new(Complex64::new(0.0, 0.0), 0.0, vec![coeffs], radius)
    }

    pub fn zero(beta: f64, radius: f64) -> Self {
        Self::new(Complex64::new(0.0, 0.0), beta, vec![vec![T::default()]], radius)
    }

    /// Highest log power `K`.
    pub fn k_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Highest monomial order `N`.
    pub fn n_max(&self) -> usize {
        self.coeffs[0].len() - 1
    }

    pub fn coeff(&self, k: usize, n: usize) -> T {
        self.coeffs.get(k).and_then(|row| row.get(n)).copied().unwrap_or_default()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().flatten().all(|c| c.finite())
    }

    /// Drops trailing all-zero log rows.
    pub fn trim_logs(mut self) -> Self {
        while self.coeffs.len() > 1 && self.coeffs.last().is_some_and(|r| r.iter().all(|c| c.modulus() == 0.0)) {
            self.coeffs.pop();
        }
        self
    }

    /// Horner evaluation of the analytic factor of log column `k` at real `x`.
    pub fn column(&self, k: usize, x: f64) -> T {
        let mut acc = T::default();
        for &c in self.coeffs[k].iter().rev() {
            acc = acc.scale(x) + c;
        }
        acc
    }

    /// Evaluates at a positive real local coordinate `x`.
    pub fn eval(&self, x: f64) -> T {
        if x == 0.0 {
            if self.beta > 0.0 {
                return T::default();
            }
            return if self.beta == 0.0 { self.coeff(0, 0) } else { T::from_real(f64::INFINITY) };
        }
        let l = x.ln();
        let mut acc = T::default();
        for k in (0..self.coeffs.len()).rev() {
            acc = acc.scale(l) + self.column(k, x);
        }
        acc.scale(x.powf(self.beta))
    }

    /// Evaluates at a complex local coordinate with principal-branch logs and powers.
    pub fn eval_complex(&self, x: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let l = x.ln();
        for k in (0..self.coeffs.len()).rev() {
            let mut col = Complex64::new(0.0, 0.0);
            for &c in self.coeffs[k].iter().rev() {
                col = col * x + c.to_complex();
            }
            acc = acc * l + col;
        }
        acc * x.powf(self.beta)
    }

    /// Term-by-term derivative in the local variable.
    pub fn derivative(&self) -> Self {
        let kk = self.coeffs.len();
        let nn = self.coeffs[0].len();
        let mut out = vec![vec![T::default(); nn]; kk];
        for k in 0..kk {
            for n in 0..nn {
                let mut v = self.coeffs[k][n].scale(self.beta + n as f64);
                if k + 1 < kk {
                    v += self.coeffs[k + 1][n].scale((k + 1) as f64);
                }
                out[k][n] = v;
            }
        }
        Self { center: self.center, beta: self.beta - 1.0, coeffs: out, radius: self.radius }
    }

    /// `Σ_n |c[k][n]| rⁿ` for log column `k`.
    pub fn wiener_norm(&self, k: usize, r: f64) -> Result<f64, SeriesError> {
        if k > self.k_max() {
            return Err(SeriesError::IndexOutOfRange { k, k_max: self.k_max() });
        }
        if r > self.radius {
            return Err(SeriesError::RadiusExceeded { r, radius: self.radius });
        }
        Ok(self.coeffs[k].iter().rev().fold(0.0, |acc, c| acc * r + c.modulus()))
    }

    /// Estimated size of the neglected tail `Σ_{n>N} |c[k][n]| rⁿ`, summed over `k`,
    /// from geometric extrapolation of the last few coefficients.
    pub fn tail_bound(&self, r: f64) -> f64 {
        let nn = self.n_max();
        let mut total = 0.0;
        for row in &self.coeffs {
            let last = row[nn].modulus();
            let m = nn.clamp(1, 4);
            let prev = (nn.saturating_sub(m)..nn).map(|i| row[i].modulus()).fold(0.0, f64::max);
            if last == 0.0 && prev == 0.0 {
                continue;
            }
            let ratio = if prev > 0.0 && nn >= m { (last / prev).max(1e-300).powf(1.0 / m as f64) * r } else { 1.0 };
            let q = ratio.max(r / self.radius.max(f64::MIN_POSITIVE));
            let head = last.max(prev * ratio.powi(m as i32)) * r.powi(nn as i32);
            total += if q < 1.0 { head * q / (1.0 - q) } else { f64::INFINITY };
        }
        total
    }

    /// Shifts the offset exponent down to `beta_new` (by an integer), padding coefficients.
    fn rebase(&self, beta_new: f64) -> Self {
        let shift = (self.beta - beta_new).round() as usize;
        let coeffs = self
            .coeffs
            .iter()
            .map(|row| {
                let mut r = vec![T::default(); shift];
                r.extend_from_slice(row);
                r
            })
            .collect();
        Self::new(self.center, beta_new, coeffs, self.radius)
    }
}

/// Binary operation for [`logpow_combine`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesOp {
    Add,
    Mul,
}

/// A combined series plus the exactly known discarded part of the truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct Combined<T: Coeff = f64> {
    pub series: LogPowerSeries<T>,
    /// Terms of the exact product of the two truncated inputs beyond the kept order.
    pub discarded: LogPowerSeries<T>,
}

impl<T: Coeff> Combined<T> {
    /// Bound on `|exact − series|` at local coordinate `x > 0`.
    pub fn truncation_bound(&self, x: f64) -> f64 {
        let l = x.ln().abs();
        let mut total = 0.0;
        for (k, row) in self.discarded.coeffs.iter().enumerate() {
            let w = row.iter().rev().fold(0.0, |acc, c| acc * x + c.modulus());
            total += w * l.powi(k as i32);
        }
        total * x.powf(self.discarded.beta)
    }
}

/// Sum or product of two series with a common center.
///
/// Products keep monomial orders up to the smaller of the two inputs' orders and log
/// powers up to `K_a + K_b`; the dropped terms are returned alongside.
pub fn logpow_combine<T: Coeff>(a: &LogPowerSeries<T>, b: &LogPowerSeries<T>, op: SeriesOp) -> Result<Combined<T>, SeriesError> {
    if (a.center - b.center).norm() > 1e-14 * (1.0 + a.center.norm()) {
        return Err(SeriesError::CenterMismatch);
    }
    let radius = a.radius.min(b.radius);
    match op {
        SeriesOp::Add => {
            let diff = b.beta - a.beta;
            if (diff - diff.round()).abs() > 1e-12 {
                return Err(SeriesError::ExponentMismatch(a.beta, b.beta));
            }
            let beta = a.beta.min(b.beta);
            let (a2, b2) = (a.rebase(beta), b.rebase(beta));
            let kk = a2.coeffs.len().max(b2.coeffs.len());
            let nn = a2.coeffs[0].len().max(b2.coeffs[0].len());
            let coeffs = (0..kk).map(|k| (0..nn).map(|n| a2.coeff(k, n) + b2.coeff(k, n)).collect()).collect();
            Ok(Combined { series: LogPowerSeries::new(a.center, beta, coeffs, radius), discarded: LogPowerSeries::zero(beta, radius) })
        }
        SeriesOp::Mul => {
            let keep = a.n_max().min(b.n_max());
            let full = a.n_max() + b.n_max();
            let kk = a.k_max() + b.k_max() + 1;
            let mut prod = vec![vec![T::default(); full + 1]; kk];
            for (ka, ra) in a.coeffs.iter().enumerate() {
                for (kb, rb) in b.coeffs.iter().enumerate() {
                    for (i, &ca) in ra.iter().enumerate() {
                        if ca.modulus() == 0.0 {
                            continue;
                        }
                        for (j, &cb) in rb.iter().enumerate() {
                            prod[ka + kb][i + j] += ca * cb;
                        }
                    }
                }
            }
            let beta = a.beta + b.beta;
            let kept = prod.iter().map(|r| r[..=keep].to_vec()).collect();
            let dropped =
                prod.iter().map(|r| r.iter().enumerate().map(|(n, &c)| if n <= keep { T::default() } else { c }).collect()).collect();
            Ok(Combined {
                series: LogPowerSeries::new(a.center, beta, kept, radius),
                discarded: LogPowerSeries::new(a.center, beta, dropped, radius),
            })
        }
    }
}

/// Free-function form of [`LogPowerSeries::wiener_norm`].
pub fn wiener_norm<T: Coeff>(s: &LogPowerSeries<T>, k: usize, r: f64) -> Result<f64, SeriesError> {
    s.wiener_norm(k, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn origin() -> Complex64 {
        Complex64::new(0.0, 0.0)
    }

    #[test]
    fn constant_norm_is_one() {
        let s = LogPowerSeries::analytic(vec![1.0], 10.0);
        assert_eq!(wiener_norm(&s, 0, 3.0).unwrap(), 1.0);
    }

    #[test]
    fn geometric_norm() {
        let s = LogPowerSeries::analytic((0..200).map(|n| 0.5f64.powi(n)).collect(), 2.0);
        assert!((wiener_norm(&s, 0, 1.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn index_out_of_range() {
        let s = LogPowerSeries::analytic(vec![1.0, 2.0], 1.0);
        assert!(matches!(wiener_norm(&s, 1, 0.5), Err(SeriesError::IndexOutOfRange { .. })));
    }

    #[test]
    fn geometric_times_one_minus_z() {
        let g = LogPowerSeries::analytic(vec![1.0; 65], 1.0);
        let l = LogPowerSeries::analytic(vec![1.0, -1.0], f64::INFINITY);
        let c = logpow_combine(&g, &l, SeriesOp::Mul).unwrap();
        assert_eq!(c.series.coeffs[0], vec![1.0, 0.0]);
        // exact product is 1 − z⁶⁵
        assert!((c.truncation_bound(0.5) - 0.5f64.powi(65)).abs() < 1e-30);
    }

    #[test]
    fn add_zero_is_identity() {
        let a = LogPowerSeries::new(origin(), 0.5, vec![vec![1.0, 2.0], vec![0.0, 3.0]], 1.0);
        let z = LogPowerSeries::zero(0.5, 1.0);
        assert_eq!(logpow_combine(&a, &z, SeriesOp::Add).unwrap().series, a);
    }

    #[test]
    fn log_degrees_add_under_mul() {
        let a = LogPowerSeries::new(origin(), 0.0, vec![vec![1.0], vec![1.0], vec![2.0]], 1.0);
        let b = LogPowerSeries::new(origin(), 1.0, vec![vec![1.0], vec![3.0]], 1.0);
        let c = logpow_combine(&a, &b, SeriesOp::Mul).unwrap().series;
        assert_eq!(c.k_max(), a.k_max() + b.k_max());
        assert_eq!(c.beta, 1.0);
    }

    #[test]
    fn center_mismatch() {
        let a = LogPowerSeries::analytic(vec![1.0], 1.0);
        let mut b = a.clone();
        b.center = Complex64::new(1.0, 0.0);
        assert_eq!(logpow_combine(&a, &b, SeriesOp::Add), Err(SeriesError::CenterMismatch));
    }

    #[test]
    fn derivative_matches_closed_form() {
        // x^{1/2} (1 + 2x) log x
        let s = LogPowerSeries::new(origin(), 0.5, vec![vec![0.0, 0.0], vec![1.0, 2.0]], 1.0);
        let x: f64 = 0.3;
        let exact = 0.5 * x.powf(-0.5) * (1.0 + 2.0 * x) * x.ln() + x.sqrt() * 2.0 * x.ln() + x.sqrt() * (1.0 + 2.0 * x) / x;
        assert!((s.derivative().eval(x) - exact).abs() < 1e-13);
    }

    #[test]
    fn complex_eval_agrees_with_real() {
        let s = LogPowerSeries::new(origin(), 0.25, vec![vec![1.0, -0.5, 0.1], vec![0.3, 0.0, 0.2]], 1.0);
        let x = 0.4;
        assert!((s.eval_complex(Complex64::new(x, 0.0)).re - s.eval(x)).abs() < 1e-15);
    }

    fn series_strategy() -> impl Strategy<Value = LogPowerSeries> {
        (1usize..3, 2usize..12).prop_flat_map(|(kk, nn)| {
            proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, nn), kk)
                .prop_map(|c| LogPowerSeries::new(Complex64::new(0.0, 0.0), 0.0, c, 1.0))
        })
    }

    proptest! {
        #[test]
        fn wiener_norm_is_submultiplicative(a in series_strategy(), b in series_strategy(), r in 0.05f64..1.0) {
            let c = logpow_combine(&a, &b, SeriesOp::Mul).unwrap();
            // the exact product's norm (kept + discarded) obeys the algebra inequality per log column
            let na: f64 = (0..=a.k_max()).map(|k| a.wiener_norm(k, r).unwrap()).sum();
            let nb: f64 = (0..=b.k_max()).map(|k| b.wiener_norm(k, r).unwrap()).sum();
            let nc: f64 = (0..=c.series.k_max())
                .map(|k| c.series.wiener_norm(k, r).unwrap() + c.discarded.wiener_norm(k, r).unwrap())
                .sum();
            prop_assert!(nc <= na * nb * (1.0 + 1e-12) + 1e-300);
        }

        #[test]
        fn wiener_norm_dominates_sup(a in series_strategy(), r in 0.05f64..1.0, theta in 0.0f64..std::f64::consts::TAU) {
            let z = Complex64::from_polar(r, theta);
            let mut col = Complex64::new(0.0, 0.0);
            for &c in a.coeffs[0].iter().rev() { col = col * z + c; }
            prop_assert!(col.norm() <= a.wiener_norm(0, r).unwrap() * (1.0 + 1e-12));
        }

        #[test]
        fn product_evaluates_to_product(a in series_strategy(), b in series_strategy(), x in 0.05f64..0.9) {
            let c = logpow_combine(&a, &b, SeriesOp::Mul).unwrap();
            let err = (c.series.eval(x) - a.eval(x) * b.eval(x)).abs();
            prop_assert!(err <= c.truncation_bound(x) * (1.0 + 1e-9) + 1e-12);
        }

        #[test]
        fn horner_matches_definition(a in series_strategy(), x in 0.05f64..0.9) {
            let direct: f64 = a.coeffs.iter().enumerate().map(|(k, row)| {
                row.iter().enumerate().map(|(n, c)| c * x.powi(n as i32)).sum::<f64>() * x.ln().powi(k as i32)
            }).sum();
            prop_assert!((a.eval(x) - direct).abs() <= 1e-13 * (1.0 + direct.abs()) * 10.0);
        }
    }
}
