use super::ode::{integrate, OdeOptions};
use super::FrobeniusError;
use crate::series_core::Jet2;

/// Particular solution of `u'' + a(x)u' + b(x)u = f(x)` by variation of parameters.
///
/// `pair` gives Cauchy data `(y, y')` at `x0` of two independent homogeneous solutions;
/// `start` fixes the particular solution's own Cauchy data at `x0` (e.g. from a series
/// expansion at a singular endpoint). The pair and the integrals
/// `I₁' = −y₂f/W`, `I₂' = y₁f/W` are integrated together so that `u = I₁y₁ + I₂y₂`.
#[allow(clippy::too_many_arguments)]
pub fn variation_of_parameters<C, F>(
    coeffs: C,
    forcing: F,
    x0: f64,
    pair: [(f64, f64); 2],
    start: (f64, f64),
    x_out: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<Jet2>, FrobeniusError>
where
    C: Fn(f64) -> (f64, f64),
    F: Fn(f64) -> f64,
{
    let [(y1, d1), (y2, d2)] = pair;
    let w0 = y1 * d2 - d1 * y2;
    if w0 == 0.0 || !w0.is_finite() {
        return Err(FrobeniusError::QuadratureFailure { x: x0, reason: "degenerate fundamental pair".into() });
    }
    let i1 = (start.0 * d2 - start.1 * y2) / w0;
    let i2 = (start.1 * y1 - start.0 * d1) / w0;
    let traj = integrate(
        |x, s, ds| {
            let (a, b) = coeffs(x);
            let f = forcing(x);
            let w = s[0] * s[3] - s[1] * s[2];
            ds[0] = s[1];
            ds[1] = -a * s[1] - b * s[0];
            ds[2] = s[3];
            ds[3] = -a * s[3] - b * s[2];
            ds[4] = -s[2] * f / w;
            ds[5] = s[0] * f / w;
        },
        x0,
        &[y1, d1, y2, d2, i1, i2],
        x_out,
        opts,
    )
    .map_err(|e| match e {
        FrobeniusError::StepFailure { x, .. } => FrobeniusError::QuadratureFailure { x, reason: "step size underflow".into() },
        other => other,
    })?;
    Ok(traj
        .xs
        .iter()
        .zip(&traj.ys)
        .map(|(&x, s)| {
            let (a, b) = coeffs(x);
            let u = s[4] * s[0] + s[5] * s[2];
            let du = s[4] * s[1] + s[5] * s[3];
            let ddu = s[4] * (-a * s[1] - b * s[0]) + s[5] * (-a * s[3] - b * s[2]) + forcing(x);
            Jet2::radial(u, du, ddu)
        })
        .collect())
}
