use super::SpectralError;
use crate::series_core::Jet2;
use gauss_quad::GaussLegendre;

/// `c = d(d−2)`, the squared scale of the ground state.
pub(crate) fn scale(d: usize) -> f64 {
    (d * (d - 2)) as f64
}

/// `K = d²(d²−4)`, so that `pW^{p−1} = K/(R²+c)²`.
pub(crate) fn coupling(d: usize) -> f64 {
    let d = d as f64;
    d * d * (d * d - 4.0)
}

/// Potential of the half-line operator `𝓛 = −∂_RR + V(R)`:
/// `V = (d−1)(d−3)/(4R²) − pW^{p−1}`.
pub fn operator_potential(d: usize, r: f64) -> f64 {
    let df = d as f64;
    let h = r * r + scale(d);
    (df - 1.0) * (df - 3.0) / (4.0 * r * r) - coupling(d) / (h * h)
}

/// `V` with its first two derivatives.
pub fn operator_potential_jet(d: usize, r: f64) -> Jet2 {
    let df = d as f64;
    let e = (df - 1.0) * (df - 3.0) / 4.0;
    let (k, c) = (coupling(d), scale(d));
    let x = r * r;
    let h = x + c;
    // −K h^{−2} as a function of x
    let p = -k / (h * h);
    let px = 2.0 * k / h.powi(3);
    let pxx = -6.0 * k / h.powi(4);
    Jet2::radial(e / x + p, -2.0 * e / (x * r) + 2.0 * r * px, 6.0 * e / (x * x) + 2.0 * px + 4.0 * x * pxx)
}

/// The zero-energy solution `φ(R) = R^{(d−1)/2}(R²−d(d−2))/(R²+d(d−2))^{d/2}`.
pub fn phi0(d: usize, r: f64) -> Jet2 {
    let m = (d as f64 - 1.0) / 2.0;
    let (g, gr, grr) = phi0_reduced(d, r);
    let rm = r.powf(m);
    let (rm1, rm2) = (m * r.powf(m - 1.0), m * (m - 1.0) * r.powf(m - 2.0));
    Jet2::radial(rm * g, rm1 * g + rm * gr, rm2 * g + 2.0 * rm1 * gr + rm * grr)
}

/// `g = φ/R^{(d−1)/2} = (R²−c)/(R²+c)^{d/2}` and its `R`-derivatives.
pub(crate) fn phi0_reduced(d: usize, r: f64) -> (f64, f64, f64) {
    let half = d as f64 / 2.0;
    let c = scale(d);
    let x = r * r;
    let h = x + c;
    // g = h^{1−d/2} − 2c h^{−d/2}
    let g = h.powf(1.0 - half) - 2.0 * c * h.powf(-half);
    let gx = (1.0 - half) * h.powf(-half) + c * 2.0 * half * h.powf(-half - 1.0);
    let gxx = (1.0 - half) * (-half) * h.powf(-half - 1.0) - 2.0 * c * half * (half + 1.0) * h.powf(-half - 2.0);
    (g, 2.0 * r * gx, 2.0 * gx + 4.0 * x * gxx)
}

/// `W₀ = [𝓛, R∂_R] − 2𝓛 = −2V − RV' = 2d²(d²−4)(d(d−2)−R²)/(d(d−2)+R²)³`.
pub fn w0_potential(d: usize, r: f64) -> Jet2 {
    let (k, c) = (coupling(d), scale(d));
    let x = r * r;
    let h = x + c;
    let w = 2.0 * k * (c - x) / h.powi(3);
    let wx = 4.0 * k * (x - 2.0 * c) / h.powi(4);
    let wxx = 12.0 * k * (3.0 * c - x) / h.powi(5);
    Jet2::radial(w, 2.0 * r * wx, 2.0 * wx + 4.0 * x * wxx)
}

/// Relative half-width of the band around `√(d(d−2))` where [`theta0`] switches to the limit formula.
pub const THETA_GUARD: f64 = 1e-3;

/// Reference point of the antiderivative in [`theta0`].
const THETA_REF: f64 = 1.0;

/// Second zero-energy solution `θ = −φ ∫_1^R ds/φ(s)²` (Hadamard finite part across the zero
/// `R₀ = √(d(d−2))` of `φ`), normalized by `W(θ, φ) = θφ' − θ'φ = 1`.
///
/// Since `φ''(R₀) = V(R₀)φ(R₀) = 0`, `1/φ² − A/(s−R₀)²` with `A = 1/φ'(R₀)²` is smooth and is
/// integrated by Gauss–Legendre panels; the double pole is integrated exactly. Inside the guard
/// band the quotient `φ/(R−R₀)` loses accuracy and the error carries the value from the limit
/// formula instead.
pub fn theta0(d: usize, r: f64) -> Result<Jet2, SpectralError> {
    if !(r > 0.0) {
        return Err(SpectralError::InvalidArgument(format!("θ needs R > 0, got {r}")));
    }
    let r0 = scale(d).sqrt();
    if (r - r0).abs() < THETA_GUARD * r0 {
        return Err(SpectralError::NearZeroCrossing { r, limit: theta0_at_zero(d) });
    }
    Ok(theta_from_g(d, r, theta_antiderivative(d, r)))
}

fn theta_from_g(d: usize, r: f64, g: f64) -> Jet2 {
    let p = phi0(d, r);
    // θ = −φG, θ' = −φ'G − 1/φ, θ'' = Vθ
    let th = -p.u * g;
    let thr = -p.u_r * g - 1.0 / p.u;
    Jet2::radial(th, thr, operator_potential(d, r) * th)
}

/// `θ` at the zero of `φ`, from `θ = −φ(G_reg − A/(R−R₀))` expanded in `R − R₀`.
pub fn theta0_at_zero(d: usize) -> Jet2 {
    let r0 = scale(d).sqrt();
    let p = phi0(d, r0);
    let a = 1.0 / (p.u_r * p.u_r);
    let greg = regular_integral(d, THETA_REF, r0) + a / (THETA_REF - r0);
    // φ = φ'₀h + φ'''₀h³/6 + …, G = −A/h + G_reg + O(h): θ = Aφ'₀ − φ'₀G_reg h + O(h²)
    let th = a * p.u_r;
    let thr = -p.u_r * greg;
    Jet2::radial(th, thr, operator_potential(d, r0) * th)
}

fn singular_weight(d: usize) -> (f64, f64) {
    let r0 = scale(d).sqrt();
    let p = phi0(d, r0);
    (r0, 1.0 / (p.u_r * p.u_r))
}

/// Below this `|s−R₀|/R₀` the smooth remainder is taken from its Taylor expansion.
const TAYLOR_BAND: f64 = 1e-3;

/// `∫_a^b (1/φ² − A/(s−R₀)²) ds` on geometric Gauss–Legendre panels.
fn regular_integral(d: usize, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (r0, aa) = singular_weight(d);
    let m = (d as f64 - 1.0) / 2.0;
    let c = scale(d);
    // φ = φ₁h(1 + a₂h² + a₃h³ + a₄h⁴ + …) with φ₂ = 0, φ₃ = Vφ₁, φ₄ = 2V'φ₁, φ₅ = (3V'' + V²)φ₁
    let v = operator_potential_jet(d, r0);
    let (a2, a3, a4) = (v.u / 6.0, v.u_r / 12.0, (3.0 * v.u_rr + v.u * v.u) / 120.0);
    let f = |s: f64| {
        let h = s - r0;
        if h.abs() < TAYLOR_BAND * r0 {
            return aa * (-2.0 * a2 - 2.0 * a3 * h + (3.0 * a2 * a2 - 2.0 * a4) * h * h);
        }
        // s² − c = h(s + R₀) without cancellation
        let phi = s.powf(m) * h * (s + r0) / (s * s + c).powf(d as f64 / 2.0);
        1.0 / (phi * phi) - aa / (h * h)
    };
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let rule = GaussLegendre::new(20).expect("valid Legendre rule");
    let mut total = 0.0;
    let mut x = lo;
    while x < hi {
        let step = (0.25 * x).clamp(1e-3, 0.5).min(hi - x);
        let nx = if x < r0 && x + step > r0 { r0 } else { x + step };
        total += rule.integrate(x, nx, f);
        x = nx;
    }
    sign * total
}

/// Hadamard-regularized `G(R) = ∫_1^R ds/φ(s)²`.
fn theta_antiderivative(d: usize, r: f64) -> f64 {
    let (r0, aa) = singular_weight(d);
    regular_integral(d, THETA_REF, r) + aa * (1.0 / (THETA_REF - r0) - 1.0 / (r - r0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{potential, BlowupConstants};

    fn slope(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        (f(b).abs().ln() - f(a).abs().ln()) / (b.ln() - a.ln())
    }

    #[test]
    fn phi0_printed_values() {
        assert!(phi0(5, 15f64.sqrt()).u.abs() < 1e-15);
        assert!((phi0(5, 1.0).u + 14.0 / 16f64.powf(2.5)).abs() < 1e-12);
        assert!((phi0(5, 1.0).u + 0.0136719).abs() < 1e-7);
        for d in [4usize, 5] {
            let m = (d as f64 - 1.0) / 2.0;
            assert!((slope(|r| phi0(d, r).u, 1e-4, 1e-3) - m).abs() < 0.05);
            assert!((slope(|r| phi0(d, r).u, 1e4, 1e5) - (3.0 - d as f64) / 2.0).abs() < 0.05);
        }
    }

    #[test]
    fn phi0_solves_the_zero_energy_equation_and_jets_match_differences() {
        for d in [4usize, 5] {
            for r in [0.3, 1.0, 2.5, 7.0, 40.0] {
                let j = phi0(d, r);
                assert!((-j.u_rr + operator_potential(d, r) * j.u).abs() <= 1e-12 * (1.0 + j.u_rr.abs()));
                let h = 1e-4 * r;
                let fd1 = (phi0(d, r + h).u - phi0(d, r - h).u) / (2.0 * h);
                let fd2 = (phi0(d, r + h).u - 2.0 * j.u + phi0(d, r - h).u) / (h * h);
                assert!((fd1 - j.u_r).abs() <= 1e-7 * (1.0 + j.u_r.abs()));
                assert!((fd2 - j.u_rr).abs() <= 1e-4 * (1.0 + j.u_rr.abs()));
            }
        }
    }

    #[test]
    fn potential_matches_the_linearized_operator() {
        for d in [4usize, 5] {
            let c = BlowupConstants::new(d, 6.0).unwrap();
            for r in [0.1, 1.0, 3.0, 20.0] {
                let df = d as f64;
                let v = (df - 1.0) * (df - 3.0) / (4.0 * r * r) - potential(&c, r);
                assert!((operator_potential(d, r) - v).abs() <= 1e-12 * v.abs().max(1.0));
                let j = operator_potential_jet(d, r);
                let h = 1e-4 * r;
                let fd = (operator_potential(d, r + h) - operator_potential(d, r - h)) / (2.0 * h);
                assert!((j.u_r - fd).abs() <= 1e-6 * (1.0 + fd.abs()));
            }
        }
    }

    #[test]
    fn w0_closed_form() {
        assert!((w0_potential(5, 0.0).u - 14.0 / 3.0).abs() < 1e-12);
        for d in [4usize, 5] {
            assert!(w0_potential(d, scale(d).sqrt()).u.abs() < 1e-12);
            for r in [0.2, 1.0, 3.0, 12.0] {
                let v = operator_potential_jet(d, r);
                let expected = -2.0 * v.u - r * v.u_r;
                let w = w0_potential(d, r);
                assert!((w.u - expected).abs() <= 1e-10 * (1.0 + expected.abs()), "d={d} R={r}");
                let h = 1e-4 * r.max(1.0);
                let fd2 = (w0_potential(d, r + h).u - 2.0 * w.u + w0_potential(d, r - h).u) / (h * h);
                assert!((w.u_rr - fd2).abs() <= 1e-4 * (1.0 + fd2.abs()));
            }
            assert!((slope(|r| w0_potential(d, r).u, 1e3, 1e4) + 4.0).abs() < 0.01);
        }
    }

    #[test]
    fn theta_wronskian_is_one() {
        for d in [4usize, 5] {
            for r in [0.1, 1.0, 10.0, 100.0] {
                let (t, p) = (theta0(d, r).unwrap(), phi0(d, r));
                let w = t.u * p.u_r - t.u_r * p.u;
                assert!((w - 1.0).abs() < 1e-8, "d={d} R={r}: W = {w}");
            }
        }
    }

    #[test]
    fn theta_asymptotics_and_zero_crossing() {
        for d in [4usize, 5] {
            let th = |r: f64| theta0(d, r).unwrap().u;
            assert!((slope(th, 1e-4, 1e-3) - (3.0 - d as f64) / 2.0).abs() < 0.05);
            assert!((slope(th, 1e3, 1e4) - (d as f64 - 1.0) / 2.0).abs() < 0.05);
            let r0 = scale(d).sqrt();
            let e = theta0(d, r0 * (1.0 + 1e-4)).unwrap_err();
            let SpectralError::NearZeroCrossing { limit, .. } = e else { panic!("{e:?}") };
            // continuity with values just outside the band
            for s in [-1.0, 1.0] {
                let r = r0 * (1.0 + s * 2e-3);
                let outside = theta0(d, r).unwrap();
                assert!((outside.u - limit.u).abs() < 1e-2 * limit.u.abs(), "d={d}");
                assert!((outside.u - (limit.u + limit.u_r * (r - r0))).abs() < 1e-4 * limit.u.abs(), "d={d}");
            }
            // θ solves 𝓛θ = 0: compare θ'' with differences of θ'
            for r in [0.5, 2.0, 8.0] {
                let h = 1e-4 * r;
                let fd = (theta0(d, r + h).unwrap().u_r - theta0(d, r - h).unwrap().u_r) / (2.0 * h);
                let j = theta0(d, r).unwrap();
                assert!((fd - j.u_rr).abs() <= 1e-6 * (1.0 + j.u_rr.abs()), "d={d} R={r}");
            }
        }
    }
}
