use super::tableau::{A, B, C, E3, E5, N_STAGES};
use super::FrobeniusError;
use crate::series_core::Jet2;

/// Tolerances and limits for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; chosen automatically when `None`.
    pub h0: Option<f64>,
    /// Largest step magnitude.
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-14, h0: None, h_max: f64::INFINITY, max_steps: 2_000_000 }
    }
}

impl OdeOptions {
    pub fn tol(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, ..Self::default() }
    }
}

/// States at the requested output abscissae.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub xs: Vec<f64>,
    pub ys: Vec<Vec<f64>>,
    pub steps: usize,
    pub rejected: usize,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.ys.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
// PI controller exponents for an order-8 method (error estimate of order 7).
const ALPHA: f64 = 0.7 / 8.0;
const BETA: f64 = 0.4 / 8.0;

fn rms_scaled(v: &[f64], y0: &[f64], y1: &[f64], o: &OdeOptions) -> f64 {
    let mut acc = 0.0;
    for i in 0..v.len() {
        let sc = o.atol + o.rtol * y0[i].abs().max(y1[i].abs());
        acc += (v[i] / sc).powi(2);
    }
    acc
}

/// Adaptive Dormand–Prince 8(5,3) integration of `y' = f(x, y)` from `x0`, reporting the
/// state at every abscissa of `x_out` (monotone, all on the same side of `x0`).
pub fn integrate<F>(mut f: F, x0: f64, y0: &[f64], x_out: &[f64], opts: &OdeOptions) -> Result<Trajectory, FrobeniusError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let mut traj = Trajectory { xs: Vec::with_capacity(x_out.len()), ys: Vec::with_capacity(x_out.len()), steps: 0, rejected: 0 };
    if x_out.is_empty() {
        return Ok(traj);
    }
    let dir = if x_out[x_out.len() - 1] >= x0 { 1.0 } else { -1.0 };
    let mut x = x0;
    let mut y = y0.to_vec();
    let mut k = vec![vec![0.0; n]; N_STAGES + 1];
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut err3 = vec![0.0; n];
    let mut err5 = vec![0.0; n];
    f(x, &y, &mut k[0]);

    let span = (x_out[x_out.len() - 1] - x0).abs();
    let mut h = match opts.h0 {
        Some(h) => h.abs(),
        None => {
            // Hairer's starting-step heuristic
            let d0 = rms_scaled(&y, &y, &y, opts).sqrt() / (n as f64).sqrt();
            let d1 = rms_scaled(&k[0], &y, &y, opts).sqrt() / (n as f64).sqrt();
            let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
            h0.min(span.max(1e-300))
        }
    }
    .min(opts.h_max);
    let mut err_prev: f64 = 1e-4;
    let mut reject_streak = false;

    for &target in x_out {
        if (target - x) * dir < 0.0 {
            return Err(FrobeniusError::StepFailure { x, h });
        }
        while (target - x) * dir > 0.0 {
            if traj.steps + traj.rejected >= opts.max_steps {
                return Err(FrobeniusError::StepFailure { x, h });
            }
            let remaining = (target - x).abs();
            let mut hs = h.min(remaining);
            // avoid a sliver step right before an output point
            if remaining - hs < 1e-3 * hs {
                hs = remaining;
            }
            if hs <= 1e-14 * x.abs().max(1e-300) && hs < remaining {
                return Err(FrobeniusError::StepFailure { x, h: hs });
            }
            let hd = hs * dir;
            for s in 1..N_STAGES {
                for i in 0..n {
                    let mut acc = 0.0;
                    for j in 0..s {
                        acc += A[s][j] * k[j][i];
                    }
                    ytmp[i] = y[i] + hd * acc;
                }
                f(x + C[s] * hd, &ytmp, &mut k[s]);
            }
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..N_STAGES {
                    acc += B[j] * k[j][i];
                }
                ynew[i] = y[i] + hd * acc;
            }
            let xnew = if hs == remaining { target } else { x + hd };
            f(xnew, &ynew, &mut k[N_STAGES]);
            for i in 0..n {
                let (mut e3, mut e5) = (0.0, 0.0);
                for j in 0..=N_STAGES {
                    e3 += E3[j] * k[j][i];
                    e5 += E5[j] * k[j][i];
                }
                err3[i] = e3;
                err5[i] = e5;
            }
            let e5n = rms_scaled(&err5, &y, &ynew, opts);
            let e3n = rms_scaled(&err3, &y, &ynew, opts);
            let err = if e5n == 0.0 && e3n == 0.0 { 0.0 } else { hs * e5n / ((e5n + 0.01 * e3n) * n as f64).sqrt() };
            if !err.is_finite() {
                h = hs * MIN_FACTOR;
                traj.rejected += 1;
                reject_streak = true;
                continue;
            }
            if err <= 1.0 {
                let fac =
                    if err == 0.0 { MAX_FACTOR } else { (SAFETY * err.powf(-ALPHA) * err_prev.powf(BETA)).clamp(MIN_FACTOR, MAX_FACTOR) };
                let fac = if reject_streak { fac.min(1.0) } else { fac };
                x = xnew;
                std::mem::swap(&mut y, &mut ynew);
                let last = k.pop().unwrap_or_default();
                k.insert(0, last);
                // k[0] now holds f(x_new, y_new) (first-same-as-last)
                h = (hs * fac).min(opts.h_max);
                err_prev = err.max(1e-4);
                traj.steps += 1;
                reject_streak = false;
            } else {
                h = hs * (SAFETY * err.powf(-1.0 / 8.0)).clamp(MIN_FACTOR, 1.0);
                traj.rejected += 1;
                reject_streak = true;
                // stage 0 is unchanged on rejection
            }
        }
        traj.xs.push(x);
        traj.ys.push(y.clone());
    }
    Ok(traj)
}

/// Coefficients of `u'' + a(x)u' + b(x)u = f(x)` at one abscissa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearCoeffs {
    pub a: f64,
    pub b: f64,
    pub f: f64,
}

/// Integrates a second-order linear ODE from Cauchy data `(u, u')` at `x0`, returning jets
/// (`u`, `u'`, `u''`) at `x_out`; the second derivative is read off the equation.
pub fn integrate_ode_numeric<F>(coeffs: F, x0: f64, init: (f64, f64), x_out: &[f64], opts: &OdeOptions) -> Result<Vec<Jet2>, FrobeniusError>
where
    F: Fn(f64) -> LinearCoeffs,
{
    let traj = integrate(
        |x, y, dy| {
            let c = coeffs(x);
            dy[0] = y[1];
            dy[1] = c.f - c.a * y[1] - c.b * y[0];
        },
        x0,
        &[init.0, init.1],
        x_out,
        opts,
    )?;
    Ok(traj
        .xs
        .iter()
        .zip(&traj.ys)
        .map(|(&x, y)| {
            let c = coeffs(x);
            Jet2::radial(y[0], y[1], c.f - c.a * y[1] - c.b * y[0])
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_half_period() {
        let out = integrate_ode_numeric(
            |_| LinearCoeffs { a: 0.0, b: 1.0, f: 0.0 },
            0.0,
            (1.0, 0.0),
            &[std::f64::consts::PI],
            &OdeOptions::tol(1e-12, 1e-14),
        )
        .unwrap();
        assert!((out[0].u + 1.0).abs() < 1e-11 && out[0].u_r.abs() < 1e-11);
    }

    #[test]
    fn backward_and_many_outputs() {
        let xs: Vec<f64> = (0..50).map(|i| 2.0 - 0.04 * i as f64).collect();
        let tr = integrate(|_, y, dy| dy[0] = -2.0 * y[0], 2.0, &[1.0], &xs, &OdeOptions::tol(1e-13, 1e-15)).unwrap();
        for (x, y) in tr.xs.iter().zip(&tr.ys) {
            assert!((y[0] - (-2.0 * (x - 2.0)).exp()).abs() < 1e-12 * y[0]);
        }
    }

    #[test]
    fn eighth_order_convergence_with_fixed_steps() {
        // Loose tolerance must still yield small global error thanks to the high order.
        let tr = integrate(|x, y, dy| dy[0] = y[0] * x.cos(), 0.0, &[1.0], &[10.0], &OdeOptions::tol(1e-8, 1e-10)).unwrap();
        let exact = (10f64).sin().exp();
        assert!((tr.last()[0] - exact).abs() < 1e-7 * exact);
        assert!(tr.steps < 200);
    }
}
