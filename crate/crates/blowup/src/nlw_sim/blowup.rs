use super::{energies, Energies, SimError, WaveState};

/// `−(1+ν)(d−2)/2`, the slope of `log λ(t)^{(d−2)/2}` against `log t`.
pub fn expected_amplitude_slope(d: usize, nu: f64) -> f64 {
    -(1.0 + nu) * (d as f64 - 2.0) / 2.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Steps between recorded samples.
    pub sample_every: usize,
    /// Stop once `max|u|` exceeds this.
    pub detector: f64,
    /// A sample is trusted while the half-maximum width of the peak spans this many cells.
    pub min_cells: f64,
    /// Fewer trusted samples than this is [`SimError::ResolutionExhausted`].
    pub min_samples: usize,
    /// Split radius of the energy series as a fraction of `|t|`.
    pub cone_fraction: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { sample_every: 20, detector: 1e8, min_cells: 8.0, min_samples: 6, cone_fraction: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub max_u: f64,
    /// Half-maximum width of the peak in cells.
    pub width_cells: f64,
    pub energy: Energies,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    ReachedEnd,
    Resolution,
    Detector,
    NonFinite,
    Dispersed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupFit {
    /// Least-squares slope of `log max|u|` against `log t` over the trusted samples.
    pub slope: f64,
    /// `(t_last_trusted, t_first)`.
    pub window: (f64, f64),
    pub trusted: usize,
    pub series: Vec<Sample>,
    pub stop: StopReason,
}

/// Half-maximum width of `|u|` around its peak, in cells.
fn peak_width(s: &WaveState) -> f64 {
    let (imax, top) = s.u.iter().enumerate().fold((0, 0.0), |m, (i, x)| if x.abs() > m.1 { (i, x.abs()) } else { m });
    let half = 0.5 * top;
    let right = (imax..s.len()).find(|&i| s.u[i].abs() < half).unwrap_or(s.len() - 1);
    let left = (0..=imax).rev().find(|&i| s.u[i].abs() < half);
    // a peak at the origin is mirrored
    let cells = match left {
        Some(l) => (right - l) as f64 / 2.0,
        None => (right - imax) as f64 + imax as f64,
    };
    cells.max(0.0)
}

fn sample(s: &WaveState, opts: &FitOptions) -> Sample {
    Sample { t: s.time, max_u: s.max_abs(), width_cells: peak_width(s), energy: energies(s, opts.cone_fraction) }
}

/// Least-squares slope of `y` against `x`.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

struct Run {
    series: Vec<Sample>,
    trusted: usize,
    stop: StopReason,
}

/// The march shared by the plain fit and the shooting runs; `disperse_below` stops a run once
/// `max|u|` falls under that value.
fn march(state: &mut WaveState, t_end: f64, opts: &FitOptions, disperse_below: Option<f64>) -> Result<Run, SimError> {
    if !(t_end > 0.0 && t_end < state.time) || state.direction != -1.0 {
        return Err(SimError::InvalidArgument(format!("need 0 < t_end < t = {} and a backward march", state.time)));
    }
    let mut series = vec![sample(state, opts)];
    let mut trusted = usize::from(series[0].width_cells >= opts.min_cells);
    let stop = 'run: loop {
        for _ in 0..opts.sample_every.max(1) {
            let dt = state.dt.min(state.time - t_end);
            if dt <= 0.0 {
                break 'run StopReason::ReachedEnd;
            }
            match state.step(dt) {
                Ok(()) => {}
                Err(SimError::NonFinite { .. }) => break 'run StopReason::NonFinite,
                Err(e) => return Err(e),
            }
        }
        let s = sample(state, opts);
        series.push(s);
        if s.width_cells >= opts.min_cells && trusted + 1 == series.len() {
            trusted += 1;
        }
        if s.max_u > opts.detector {
            break StopReason::Detector;
        }
        if disperse_below.is_some_and(|m| s.max_u < m) {
            break StopReason::Dispersed;
        }
        if trusted < series.len() {
            break StopReason::Resolution;
        }
    };
    Ok(Run { series, trusted, stop })
}

fn fit_window(series: &[Sample], trusted: usize, opts: &FitOptions) -> Result<f64, SimError> {
    if trusted < opts.min_samples {
        let last_trusted = if trusted == 0 { series[0].t } else { series[trusted - 1].t };
        return Err(SimError::ResolutionExhausted { last_trusted, samples: trusted });
    }
    let x: Vec<f64> = series[..trusted].iter().map(|s| s.t.ln()).collect();
    let y: Vec<f64> = series[..trusted].iter().map(|s| s.max_u.ln()).collect();
    Ok(slope(&x, &y))
}

/// Marches `state` towards `t_end` (closer to the blow-up time `t = 0`), recording
/// `max|u|` and the energy split, and fits the amplitude exponent while the peak stays resolved.
pub fn run_blowup_fit(state: &mut WaveState, t_end: f64, opts: &FitOptions) -> Result<BlowupFit, SimError> {
    let t_start = state.time;
    let Run { series, trusted, stop } = march(state, t_end, opts, None)?;
    let slope = fit_window(&series, trusted, opts)?;
    Ok(BlowupFit { slope, window: (series[trusted - 1].t, t_start), trusted, series, stop })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShootOptions {
    /// Initial bracket of the amplitude shift `a` in `(1+a)(u, ∂_t u)`.
    pub bracket: (f64, f64),
    pub iterations: usize,
    /// The bracketing runs agree while `|log(max|u|_hi / max|u|_lo)|` stays below this.
    pub agreement: f64,
    /// A run has dispersed once `max|u|` drops below this fraction of its initial value.
    pub dispersal: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self { bracket: (-1e-2, 1e-2), iterations: 48, agreement: 1e-2, dispersal: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShotFit {
    /// Final bracket of the amplitude shift.
    pub shift: (f64, f64),
    /// Fit of the focusing bracket, restricted to the samples where both brackets agree.
    pub fit: BlowupFit,
    pub dispersed: Vec<Sample>,
}

/// Codimension-one shooting: the data are rescaled by `1 + a` and `a` is bisected between
/// runs that disperse and runs that focus faster. The negative eigenvalue of the linearized
/// operator amplifies any residual of the data like `e^{√|ξ_d| τ}`, so an unshot run leaves the
/// blow-up envelope within a few units of `τ = ∫λ dt`; the shot trajectory is trusted only
/// where the two bracketing runs coincide.
pub fn shoot_blowup(initial: &WaveState, t_end: f64, opts: &FitOptions, shoot: &ShootOptions) -> Result<ShotFit, SimError> {
    let floor = shoot.dispersal * initial.max_abs();
    let run = |a: f64| -> Result<Run, SimError> {
        let mut st = initial.clone();
        st.scale_data(1.0 + a);
        march(&mut st, t_end, opts, Some(floor))
    };
    let focuses = |r: &Run| r.stop != StopReason::Dispersed;
    let (mut lo, mut hi) = shoot.bracket;
    let (mut r_lo, mut r_hi) = (run(lo)?, run(hi)?);
    // widen a bracket that misses the threshold, up to 2⁶ times
    for _ in 0..6 {
        if !focuses(&r_lo) && focuses(&r_hi) {
            break;
        }
        let w = hi - lo;
        if focuses(&r_lo) {
            lo -= w;
            r_lo = run(lo)?;
        }
        if !focuses(&r_hi) {
            hi += w;
            r_hi = run(hi)?;
        }
    }
    if focuses(&r_lo) || !focuses(&r_hi) {
        return Err(SimError::InvalidArgument(format!("no shift in [{lo}, {hi}] separates dispersal from focusing")));
    }
    for _ in 0..shoot.iterations {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let r = run(mid)?;
        if focuses(&r) {
            (hi, r_hi) = (mid, r);
        } else {
            (lo, r_lo) = (mid, r);
        }
    }
    let agree = r_hi.series.iter().zip(&r_lo.series).take_while(|(h, l)| (h.max_u / l.max_u).ln().abs() <= shoot.agreement).count();
    let trusted = agree.min(r_hi.trusted);
    let t_start = initial.time;
    let slope = fit_window(&r_hi.series, trusted, opts)?;
    let fit = BlowupFit { slope, window: (r_hi.series[trusted - 1].t, t_start), trusted, series: r_hi.series, stop: r_hi.stop };
    Ok(ShotFit { shift: (lo, hi), fit, dispersed: r_lo.series })
}

#[cfg(test)]
mod tests {
    use super::super::{init_from_profile, ProfileSlice, SimOptions};
    use super::*;
    use crate::profiles::BlowupConstants;

    #[test]
    fn slope_of_a_power_law() {
        let x: Vec<f64> = (1..10).map(|i| (i as f64).ln()).collect();
        let y: Vec<f64> = x.iter().map(|l| 2.0 - 10.5 * l).collect();
        assert!((slope(&x, &y) + 10.5).abs() < 1e-12);
        assert_eq!(expected_amplitude_slope(5, 6.0), -10.5);
        assert_eq!(expected_amplitude_slope(4, 2.0), -3.0);
    }

    #[test]
    fn peak_width_of_a_gaussian() {
        let n = 1000;
        let u: Vec<f64> = (0..=n).map(|i| (-(i as f64 / 100.0).powi(2)).exp()).collect();
        let s = WaveState::new(5, 10.0, u, vec![0.0; n + 1], 1.0, 0.001, -1.0).unwrap();
        // e^{−x²} = ½ at x = 0.83: 84 cells
        assert!((peak_width(&s) - 84.0).abs() <= 1.0, "{}", peak_width(&s));
    }

    #[test]
    fn rejects_bad_windows() {
        let c = BlowupConstants::new(5, 6.0).unwrap().with_t0(0.6).unwrap();
        let mut st = init_from_profile(&ProfileSlice::u0_only(&c, 0.6), &SimOptions { n_r: 500, ..Default::default() }).unwrap();
        assert!(matches!(run_blowup_fit(&mut st, 0.7, &FitOptions::default()), Err(SimError::InvalidArgument(_))));
    }

    #[test]
    fn coarse_grids_exhaust_resolution() {
        let c = BlowupConstants::new(5, 6.0).unwrap().with_t0(0.6).unwrap();
        let mut st = init_from_profile(&ProfileSlice::u0_only(&c, 0.6), &SimOptions { n_r: 200, ..Default::default() }).unwrap();
        assert!(matches!(run_blowup_fit(&mut st, 0.5, &FitOptions::default()), Err(SimError::ResolutionExhausted { .. })));
    }

    #[test]
    fn shooting_brackets_the_threshold_and_outlasts_the_plain_run() {
        let c = BlowupConstants::new(5, 6.0).unwrap().with_t0(0.5).unwrap();
        let st = init_from_profile(&ProfileSlice::u0_only(&c, 0.5), &SimOptions { n_r: 2500, ..Default::default() }).unwrap();
        let fo = FitOptions::default();
        let plain = run_blowup_fit(&mut st.clone(), 0.2, &fo).unwrap();
        let shot = shoot_blowup(&st, 0.2, &fo, &ShootOptions { iterations: 40, ..Default::default() }).unwrap();
        let (lo, hi) = shot.shift;
        assert!(lo < hi && hi - lo < 1e-12);
        assert_ne!(shot.fit.stop, StopReason::Dispersed);
        assert!(shot.dispersed.last().unwrap().max_u < 0.5 * st.max_abs());
        // the unshot run already leaves the envelope; the shot one stays longer
        assert!(shot.fit.series.len() > plain.series.len(), "{} vs {}", shot.fit.series.len(), plain.series.len());
    }

    #[test]
    fn finer_grids_trust_longer_windows() {
        let c = BlowupConstants::new(5, 6.0).unwrap().with_t0(0.6).unwrap();
        let sl = ProfileSlice::u0_only(&c, 0.6);
        let mut last = f64::INFINITY;
        for n_r in [2000, 4000] {
            let mut st = init_from_profile(&sl, &SimOptions { n_r, ..Default::default() }).unwrap();
            let fit = run_blowup_fit(&mut st, 0.3, &FitOptions { min_cells: 16.0, ..Default::default() }).unwrap();
            assert!(fit.window.0 < last, "n_r = {n_r}: {:?}", fit.window);
            last = fit.window.0;
        }
    }
}
