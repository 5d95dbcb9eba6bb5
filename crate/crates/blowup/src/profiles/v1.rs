use super::{e0_profile, potential, BlowupConstants, ProfileError};
use crate::frobenius::{fundamental_system, integrate, solve_inhomogeneous, FrobeniusSystem, ODESpec, OdeOptions};
use crate::series_core::{Bijet, LogPowerSeries};

const NEAR_ORDER: usize = 160;
const FAR_ORDER: usize = 100;
const CHEB_NODES: usize = 64;

/// Generalized binomial coefficient `binom(x, n)`.
fn binom(x: f64, n: usize) -> f64 {
    (0..n).fold(1.0, |acc, i| acc * (x - i as f64) / (i as f64 + 1.0))
}

/// Chebyshev interpolant on `[a, b]` through second-kind points, evaluated barycentrically.
#[derive(Debug, Clone)]
struct Cheb {
    a: f64,
    b: f64,
    nodes: Vec<f64>,
    vals: Vec<f64>,
}

impl Cheb {
    /// Nodes in ascending order.
    fn nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|j| a + (b - a) * 0.5 * (1.0 - (std::f64::consts::PI * j as f64 / n as f64).cos())).collect()
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.nodes.len() - 1;
        let (mut num, mut den) = (0.0, 0.0);
        for (j, (&xj, &fj)) in self.nodes.iter().zip(&self.vals).enumerate() {
            let dx = x - xj;
            if dx == 0.0 {
                return fj;
            }
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n {
                w *= 0.5;
            }
            num += w * fj / dx;
            den += w / dx;
        }
        debug_assert!(x >= self.a - 1e-12 && x <= self.b + 1e-12);
        num / den
    }
}

/// `V₁` at large `R` in the variable `z = 1/R`: particular solution plus `A u₁ + B u₂`.
#[derive(Debug, Clone)]
pub struct FarExpansion {
    pub particular: LogPowerSeries,
    pub system: FrobeniusSystem,
    pub a: f64,
    pub b: f64,
    derivs: [LogPowerSeries; 2],
}

impl FarExpansion {
    /// `(V, V_z, V_zz)` at `z > 0`.
    pub fn eval_z(&self, z: f64) -> [f64; 3] {
        let u1 = self.system.u1(z);
        let u2 = self.system.u2(z);
        let vp = [self.particular.eval(z), self.derivs[0].eval(z), self.derivs[1].eval(z)];
        let mut out = [0.0; 3];
        for i in 0..3 {
            out[i] = vp[i] + self.a * u1[i].re + self.b * u2[i].re;
        }
        out
    }

    /// Jet in `R` at `R > 0`.
    pub fn eval(&self, r: f64) -> Bijet {
        let z = 1.0 / r;
        let [v, vz, vzz] = self.eval_z(z);
        Bijet::univariate(v, -z * z * vz, z.powi(4) * vzz + 2.0 * z.powi(3) * vz)
    }

    /// Coefficients (absolute powers of `z`) of the analytic part `A(z)` and of the factor
    /// `B(z)` multiplying `log z`, so that `V = A + B log z`.
    pub fn split(&self) -> (Vec<f64>, Vec<f64>) {
        let beta = self.particular.beta.round() as usize;
        let r1 = self.system.r1.re.round() as usize;
        let r2 = self.system.r2.re.round() as usize;
        let len = FAR_ORDER + beta.max(r1) + 1;
        let mut a = vec![0.0; len];
        let mut b = vec![0.0; len];
        for (n, &c) in self.particular.coeffs[0].iter().enumerate() {
            a[n + beta] += c;
        }
        if self.particular.k_max() >= 1 {
            for (n, &c) in self.particular.coeffs[1].iter().enumerate() {
                b[n + beta] += c;
            }
        }
        for (n, c) in self.system.h1.coeffs[0].iter().enumerate() {
            if n + r1 < len {
                a[n + r1] += self.a * c.re;
                b[n + r1] += self.b * (self.system.c * c).re;
            }
        }
        for (n, c) in self.system.h2.coeffs[0].iter().enumerate() {
            if n + r2 < len {
                a[n + r2] += self.b * c.re;
            }
        }
        (a, b)
    }
}

/// Piecewise representation of `V₁`: even series at the origin, then either the printed
/// closed form (d = 5) or a Chebyshev interpolant of the integrated ODE followed by the
/// expansion at infinity (d = 4).
#[derive(Debug, Clone)]
pub struct V1Profile {
    d: usize,
    nu: f64,
    near: [LogPowerSeries; 3],
    r_near: f64,
    mid: Option<(Cheb, Cheb)>,
    r_far: f64,
    far: FarExpansion,
    consts: BlowupConstants,
}

/// Closed form of `V₁` in five dimensions, with `arccoth(1+30/R²) = ½ log(1+R²/15)`.
pub(crate) fn v1_closed_form_d5(nu: f64, r: f64) -> Bijet {
    let s15 = 15f64.sqrt();
    let rr = Bijet::univariate(r, 1.0, 0.0);
    let r2 = rr * rr;
    let r3 = r2 * rr;
    let r4 = r2 * r2;
    let r6 = r4 * r2;
    let arccoth = (r2 / 15.0).ln_1p() * 0.5;
    let t1 = (r2 - 15.0) * r3 * r2 * (-360.0);
    let t2 = (r2 - 15.0) * r3 * arccoth * (-100_800.0 * nu);
    let t3 = (r6 * 13.0 - r4 * 1397.0 + r2 * 6195.0 + 4725.0) * rr * (-75.0 * nu);
    let t4 = (r4 * r4 + r6 * 300.0 - r4 * 20250.0 + r2 * 67500.0 + 50625.0) * (rr / s15).atan() * (7.0 * s15 * nu);
    let num = (t1 + t2 + t3 + t4) * (s15 * (nu + 1.0));
    let den = r3 * (r2 + 15.0).powf(2.5) * 64.0;
    num / den
}

impl V1Profile {
    pub(crate) fn build(c: &BlowupConstants) -> Result<Self, ProfileError> {
        let d = c.d();
        let (p, cw, q, k) = (c.p(), c.w_scale(), c.q(), c.kappa());

        // near R = 0: R²V'' + (d−1)RV' + R²pW^{p−1}V = −R²E₀
        let mut qn = vec![0.0; NEAR_ORDER + 1];
        let mut gn = vec![0.0; NEAR_ORDER + 1];
        for j in 0..=NEAR_ORDER / 2 {
            if 2 + 2 * j <= NEAR_ORDER {
                qn[2 + 2 * j] = p * (-1f64).powi(j as i32) * (j as f64 + 1.0) * cw.powi(-(j as i32));
            }
            let w = binom(-q, j) * cw.powi(-(j as i32));
            let m = q + 2.0 * j as f64;
            gn[2 * j] = w * (k * k * m * m - k * m);
        }
        let ode0 = ODESpec::new(vec![d as f64 - 1.0], qn, cw.sqrt());
        let g0 = LogPowerSeries::analytic(gn, cw.sqrt());
        let near0 = solve_inhomogeneous(&ode0, 2.0, &g0, 0)?.trim_logs();
        let near1 = near0.derivative();
        let near2 = near1.derivative();

        // at infinity in z = 1/R: z²V'' − (d−3)zV' + z^{−2}pW^{p−1}V = −z^{−2}E₀(1/z)
        let mut qf = vec![0.0; FAR_ORDER + 1];
        let mut gf = vec![0.0; FAR_ORDER + 1];
        for j in 0..=FAR_ORDER / 2 {
            if 2 + 2 * j <= FAR_ORDER {
                qf[2 + 2 * j] = p * cw * cw * (-1f64).powi(j as i32) * (j as f64 + 1.0) * cw.powi(j as i32);
            }
            let b = binom(-q, j) * cw.powi(j as i32);
            let m = -q - 2.0 * j as f64;
            gf[2 * j] = cw.powf(q) * b * (k * k * m * m - k * m);
        }
        let rad = 1.0 / cw.sqrt();
        let ode_inf = ODESpec::new(vec![-(d as f64 - 3.0)], qf, rad);
        let particular = solve_inhomogeneous(&ode_inf, d as f64 - 4.0, &LogPowerSeries::analytic(gf, rad), 0)?.trim_logs();
        let system = fundamental_system(&ode_inf, FAR_ORDER)?;
        let d1 = particular.derivative();
        let d2 = d1.derivative();
        let mut far = FarExpansion { particular, system, a: 0.0, b: 0.0, derivs: [d1, d2] };

        let (r_near, r_far) = if d == 5 { (1.0, 12.0) } else { (2.0, 8.0) };
        let near_jet = |r: f64| Bijet::univariate(near0.eval(r), near1.eval(r), near2.eval(r));

        let mut mid = None;
        let matched = if d == 5 {
            v1_closed_form_d5(c.nu(), r_far)
        } else {
            let xs = Cheb::nodes(r_near, r_far, CHEB_NODES);
            let start = near_jet(r_near);
            let rhs = |r: f64, y: &[f64], dy: &mut [f64]| {
                dy[0] = y[1];
                dy[1] = -(d as f64 - 1.0) / r * y[1] - potential(c, r) * y[0] - e0_profile(c, r).v;
            };
            let traj = integrate(rhs, r_near, &[start.v, start.dx], &xs, &OdeOptions::tol(1e-14, 1e-15))?;
            let vals: Vec<f64> = traj.ys.iter().map(|y| y[0]).collect();
            let ders: Vec<f64> = traj.ys.iter().map(|y| y[1]).collect();
            let last = traj.last().to_vec();
            mid = Some((Cheb { a: r_near, b: r_far, nodes: xs.clone(), vals }, Cheb { a: r_near, b: r_far, nodes: xs, vals: ders }));
            Bijet::univariate(last[0], last[1], 0.0)
        };
        // match (V, V_z) at z = 1/r_far
        let z = 1.0 / r_far;
        let target = [matched.v, -r_far * r_far * matched.dx];
        let base = far.eval_z(z);
        let u1 = far.system.u1(z);
        let u2 = far.system.u2(z);
        let (m11, m12, m21, m22) = (u1[0].re, u2[0].re, u1[1].re, u2[1].re);
        let (b1, b2) = (target[0] - base[0], target[1] - base[1]);
        let det = m11 * m22 - m12 * m21;
        far.a = (b1 * m22 - m12 * b2) / det;
        far.b = (m11 * b2 - m21 * b1) / det;

        Ok(Self { d, nu: c.nu(), near: [near0, near1, near2], r_near, mid, r_far, far, consts: c.clone() })
    }

    /// Jet of `V₁` in `R`.
    pub fn eval(&self, r: f64) -> Bijet {
        let r = r.abs();
        if r < self.r_near {
            return Bijet::univariate(self.near[0].eval(r), self.near[1].eval(r), self.near[2].eval(r));
        }
        if self.d == 5 {
            return v1_closed_form_d5(self.nu, r);
        }
        if r < self.r_far {
            if let Some((v, dv)) = &self.mid {
                let (val, der) = (v.eval(r), dv.eval(r));
                let c = &self.consts;
                let dd = -(self.d as f64 - 1.0) / r * der - potential(c, r) * val - e0_profile(c, r).v;
                return Bijet::univariate(val, der, dd);
            }
        }
        self.far.eval(r)
    }

    /// Even Taylor expansion at the origin (starts at `R²`).
    pub fn near_series(&self) -> &LogPowerSeries {
        &self.near[0]
    }

    pub fn far(&self) -> &FarExpansion {
        &self.far
    }

    /// Radii separating the near series, the middle representation and the far expansion.
    pub fn switch_radii(&self) -> (f64, f64) {
        (self.r_near, self.r_far)
    }
}
