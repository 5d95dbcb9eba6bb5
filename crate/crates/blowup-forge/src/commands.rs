use crate::config::RunConfig;
use crate::output::{Invariant, Sink, Table};
use crate::ForgeError;
use blowup::nlw_sim::{
    expected_amplitude_slope, init_from_profile, run_blowup_fit, shoot_blowup, FitOptions, ProfileSlice, ShootOptions, SimOptions,
};
use blowup::parametrix::{
    inversion_defect, linear_contraction_factor, ContractionOptions, FourierGrid, InversionOptions, Parametrix, SeparableSource,
    TransferenceMatrix,
};
use blowup::profiles::BlowupConstants;
use blowup::renorm::{approximate_solution_on, select_m, Approximation, ConeGrid, ProfileField};
use blowup::spectral::{f_kernel_with, KernelOptions, SpectralTable};
use serde::Serialize;
use serde_json::json;
use std::path::PathBuf;

/// What a command wrote and which of its checks held.
#[derive(Debug)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub invariants: Vec<Invariant>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.invariants.iter().all(|i| i.passed)
    }
}

fn numerics(e: impl std::fmt::Display) -> ForgeError {
    ForgeError::Numerics(e.to_string())
}

#[derive(Serialize)]
struct Constants {
    d: usize,
    nu: f64,
    t0: f64,
    eps: f64,
    n0: usize,
    p: f64,
    q: f64,
    kappa: f64,
    c1: f64,
    c2: f64,
}

fn constants_json(c: &BlowupConstants) -> Constants {
    Constants { d: c.d(), nu: c.nu(), t0: c.t0(), eps: c.eps(), n0: c.n0(), p: c.p(), q: c.q(), kappa: c.kappa(), c1: c.c1(), c2: c.c2() }
}

fn approximation(c: &BlowupConstants, cfg: &RunConfig) -> Result<(Approximation, f64), ForgeError> {
    let m = if c.d() == 5 { select_m(c).map_err(numerics)?.m } else { 1.0 };
    let grid = ConeGrid::new(c, cfg.n_a, cfg.n_t, cfg.delta_a, m);
    Ok((approximate_solution_on(grid, cfg.k).map_err(numerics)?, m))
}

/// Columns `(a, t, R, u, u_R, u_RR, u_t, u_tt)`, slice by slice.
fn field_table(f: &ProfileField) -> Table {
    let g = &f.grid;
    let mut t = Table::new(&["a", "t", "R", "u", "u_R", "u_RR", "u_t", "u_tt"]);
    for j in 0..g.n_t() {
        for i in 0..g.n_a() {
            let jet = f.at(i, j);
            t.push(vec![g.a_nodes[i], g.t_nodes[j], g.r_big(i, j), jet.u, jet.u_r, jet.u_rr, jet.u_t, jet.u_tt]);
        }
    }
    t
}

fn fits_table(ap: &Approximation) -> Table {
    let mut t = Table::new(&["k", "exponent", "r2", "slices", "reference"]);
    for (k, (fit, e)) in ap.fits.iter().zip(&ap.e).enumerate() {
        let (x, r2, n) = fit.as_ref().map_or((f64::NAN, f64::NAN, 0.0), |f| (f.exponent, f.r2, f.slices as f64));
        t.push(vec![k as f64, x, r2, n, e.smallness_ref]);
    }
    t
}

/// Gains per odd-even round: `2.0 ± 0.2` for d = 4, at least `2/3 − 2ε − 0.1` for d = 5.
fn decay_invariants(ap: &Approximation, c: &BlowupConstants) -> Vec<Invariant> {
    let mut out = vec![Invariant::new("fields finite", ap.u.iter().chain(&ap.v).chain(&ap.e).all(ProfileField::is_finite), "")];
    for k in (2..ap.e.len()).step_by(2) {
        let gain = ap.improvement(k - 2, k);
        let ok = gain.is_some_and(|g| if c.d() == 4 { (g - 2.0).abs() <= 0.2 } else { g >= 2.0 / 3.0 - 2.0 * c.eps() - 0.1 });
        out.push(Invariant::new(&format!("round e_{} -> e_{k}", k - 2), ok, format!("gain {gain:?}")));
    }
    out
}

/// Tables of `u_k`, `v_k`, `e_k` and a manifest with the constants and fitted decay exponents.
pub fn cmd_profile(cfg: &RunConfig) -> Result<Report, ForgeError> {
    let c = cfg.constants()?;
    let (ap, m) = approximation(&c, cfg)?;
    let mut sink = Sink::new(&cfg.out_dir)?;
    for (k, u) in ap.u.iter().enumerate() {
        sink.table(&format!("u_{k}.csv"), &field_table(u))?;
    }
    for (k, v) in ap.v.iter().enumerate() {
        sink.table(&format!("v_{}.csv", k + 1), &field_table(v))?;
    }
    for (k, e) in ap.e.iter().enumerate() {
        sink.table(&format!("e_{k}.csv"), &field_table(e))?;
    }
    sink.table("decay_fits.csv", &fits_table(&ap))?;
    let invariants = vec![Invariant::new("fields finite", ap.u.iter().chain(&ap.v).chain(&ap.e).all(ProfileField::is_finite), "")];
    let fits: Vec<_> =
        ap.fits.iter().map(|f| f.as_ref().map(|f| json!({"exponent": f.exponent, "r2": f.r2, "slices": f.slices}))).collect();
    sink.json(
        "profile_manifest.json",
        &json!({
            "command": "profile",
            "constants": constants_json(&c),
            "m": m,
            "k": cfg.k,
            "decay_fits": fits,
            "min_u_over_lambda_q": ap.min_u,
            "invariants": invariants,
        }),
    )?;
    Ok(Report { files: sink.files, invariants })
}

/// The errors `t²e_k` and their decay fits.
pub fn cmd_residual(cfg: &RunConfig) -> Result<Report, ForgeError> {
    let c = cfg.constants()?;
    let (ap, m) = approximation(&c, cfg)?;
    let mut sink = Sink::new(&cfg.out_dir)?;
    for (k, e) in ap.e.iter().enumerate() {
        sink.table(&format!("e_{k}.csv"), &field_table(e))?;
    }
    sink.table("decay_fits.csv", &fits_table(&ap))?;
    let invariants = decay_invariants(&ap, &c);
    let gains: Vec<_> = (1..ap.e.len()).map(|k| ap.improvement(k - 1, k)).collect();
    sink.json(
        "residual_manifest.json",
        &json!({
            "command": "residual",
            "constants": constants_json(&c),
            "m": m,
            "k": cfg.k,
            "improvements": gains,
            "projection_residual": ap.projection.as_ref().map(|p| p.residual),
            "invariants": invariants,
        }),
    )?;
    Ok(Report { files: sink.files, invariants })
}

fn log_nodes(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

/// `ρ(ξ)`, `a(ξ)`, the kernel `F(ξ, η)` and power-law fits of `ρ`.
pub fn cmd_spectral(cfg: &RunConfig) -> Result<Report, ForgeError> {
    let d = cfg.d;
    let decades = (cfg.xi_max / cfg.xi_min).log10();
    let n = (decades * cfg.xi_per_decade as f64).round() as usize + 1;
    if n < 2 {
        return Err(ForgeError::Config(format!("ξ grid [{}, {}] holds fewer than two nodes", cfg.xi_min, cfg.xi_max)));
    }
    let table = SpectralTable::log_spaced(d, cfg.xi_min, cfg.xi_max, n, vec![]).map_err(numerics)?;
    let mut sink = Sink::new(&cfg.out_dir)?;
    let mut rho = Table::new(&["xi", "rho", "a_re", "a_im", "wronskian_variation"]);
    for j in 0..table.xi_nodes.len() {
        rho.push(vec![table.xi_nodes[j], table.rho[j], table.a_coef[j].re, table.a_coef[j].im, table.matching[j].variation]);
    }
    sink.table("rho.csv", &rho)?;

    let mut invariants = vec![];
    let mut slopes = Table::new(&["lo", "hi", "log_power", "slope", "expected", "r2"]);
    let half = d as f64 / 2.0;
    let log_power = if d == 4 { 2.0 } else { 0.0 };
    for (lo, hi, lp, expected, name) in [
        (cfg.xi_min.max(1e2), cfg.xi_max, 0.0, half - 1.0, "large-ξ slope"),
        (cfg.xi_min, cfg.xi_max.min(1e-3), log_power, half - 3.0, "small-ξ slope"),
    ] {
        if let Ok((s, r2)) = table.slope_fit(lo, hi, lp) {
            slopes.push(vec![lo, hi, lp, s, expected, r2]);
            invariants.push(Invariant::new(name, (s - expected).abs() <= cfg.slope_tol, format!("{s} vs {expected} on [{lo:e}, {hi:e}]")));
        }
    }
    sink.table("rho_slopes.csv", &slopes)?;

    let nodes = log_nodes(cfg.kernel_xi_min, cfg.kernel_xi_max, cfg.kernel_points);
    let k = nodes.len();
    let opts = KernelOptions::default();
    let vals = blowup::par::try_map_range(k * k, |n| f_kernel_with(d, nodes[n / k], nodes[n % k], &opts)).map_err(numerics)?;
    let mut asym: f64 = 0.0;
    for i in 0..k {
        for j in 0..i {
            let (a, b) = (vals[i * k + j].value, vals[j * k + i].value);
            asym = asym.max((a - b).abs() / a.abs().max(b.abs()).max(1.0));
        }
    }
    let symmetric = asym <= cfg.symmetry_tol;
    invariants.push(Invariant::new("F symmetric", symmetric, format!("max asymmetry {asym:e}")));
    if symmetric {
        let mut f = Table::new(&["xi", "eta", "F", "estimate"]);
        for (n, v) in vals.iter().enumerate() {
            f.push(vec![nodes[n / k], nodes[n % k], v.value, v.estimate]);
        }
        sink.table("kernel_f.csv", &f)?;
    }
    sink.json("spectral_manifest.json", &json!({"command": "spectral", "d": d, "xi_nodes": n, "invariants": invariants}))?;
    Ok(Report { files: sink.files, invariants })
}

/// Contraction factors at three `τ₀` and inversion defects on a fixed source.
pub fn cmd_parametrix(cfg: &RunConfig) -> Result<Report, ForgeError> {
    let c = cfg.constants()?;
    let par = Parametrix::new(&c).map_err(numerics)?;
    let grid = FourierGrid::new(cfg.d, cfg.fourier_xi_min, cfg.fourier_xi_max, cfg.fourier_per_decade).map_err(numerics)?;
    let km = TransferenceMatrix::build(&grid, &KernelOptions::default()).map_err(numerics)?;
    let mut sink = Sink::new(&cfg.out_dir)?;

    let mut kappa = Table::new(&["tau0", "kappa", "tail"]);
    for j in 0..3 {
        let opts = ContractionOptions {
            alpha: cfg.alpha,
            order: cfg.order,
            tau0: cfg.tau0_first * 10f64.powi(j),
            samples: cfg.contraction_samples,
            seed: cfg.seed,
            ..Default::default()
        };
        let r = linear_contraction_factor(&par, &grid, &km, &opts).map_err(numerics)?;
        kappa.push(vec![opts.tau0, r.kappa, r.tail]);
    }
    sink.table("kappa.csv", &kappa)?;
    let ks = kappa.column("kappa").unwrap_or_default();
    let mut invariants = vec![
        Invariant::new("κ decreases with τ₀", ks.windows(2).all(|w| w[1] < w[0]), format!("{ks:?}")),
        Invariant::new("κ < 1 at the largest τ₀", ks.last().is_some_and(|&k| k < 1.0), format!("{:?}", ks.last())),
    ];

    let bump = |x: f64| (-(x.ln() + 1.0).powi(2) / 4.0).exp();
    let src = SeparableSource { order: cfg.order, start: 10.0, profile: bump, f_d: 0.7, f_0: -0.4 };
    let mut defects = Table::new(&["tau", "xi", "relative", "derivative_mismatch"]);
    let io = InversionOptions::default();
    for (tau, xi) in [(20.0, 1e-3), (20.0, 0.3), (300.0, 2.0), (1e4, 50.0)] {
        let r = inversion_defect(&par, &src, tau, xi, &io).map_err(numerics)?;
        defects.push(vec![tau, xi, r.relative, r.derivative_mismatch]);
    }
    sink.table("defects.csv", &defects)?;
    let worst = defects.rows.iter().map(|r| r[2].max(r[3])).fold(0.0, f64::max);
    invariants.push(Invariant::new("inversion defect", worst <= cfg.defect_tol, format!("{worst:e}")));
    sink.json(
        "parametrix_manifest.json",
        &json!({
            "command": "parametrix",
            "constants": constants_json(&c),
            "xi_d": par.xi_d,
            "k_d0": km.k_d0,
            "alpha": cfg.alpha,
            "order": cfg.order,
            "seed": cfg.seed,
            "invariants": invariants,
        }),
    )?;
    Ok(Report { files: sink.files, invariants })
}

/// Simulation from `u_K` data towards `t = 0`: amplitude, energy and its split at the cone.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<Report, ForgeError> {
    let mut c = cfg.constants()?;
    if let Some(t) = cfg.sim_t0 {
        c = c.with_t0(t).map_err(|e| ForgeError::Config(e.to_string()))?;
    }
    let (ap, _) = approximation(&c, cfg)?;
    let slice = ProfileSlice::from_approximation(&ap, cfg.k.min(ap.u.len() - 1), None).map_err(numerics)?;
    let t_start = slice.t;
    let lam = c.lambda(t_start);
    let sim = SimOptions { n_r: (4.0 * t_start * lam / cfg.sim_lambda_dr).ceil() as usize, box_factor: 4.0, cfl: cfg.sim_cfl };
    let mut state = init_from_profile(&slice, &sim).map_err(numerics)?;
    let fo = FitOptions { sample_every: cfg.sim_sample_every, ..Default::default() };
    let t_end = cfg.sim_t_end_fraction * t_start;
    let (fit, shift) = if cfg.sim_shoot {
        let shot = shoot_blowup(&state, t_end, &fo, &ShootOptions::default()).map_err(numerics)?;
        (shot.fit, Some(shot.shift))
    } else {
        (run_blowup_fit(&mut state, t_end, &fo).map_err(numerics)?, None)
    };
    let mut series = Table::new(&["t", "max_u", "energy", "energy_in", "energy_out", "kinetic", "potential", "width_cells"]);
    for s in &fit.series {
        let e = &s.energy;
        series.push(vec![s.t, s.max_u, e.total, e.inside, e.outside, e.kinetic, e.potential, s.width_cells]);
    }
    let mut sink = Sink::new(&cfg.out_dir)?;
    sink.table("series.csv", &series)?;
    let e0 = fit.series[0].energy.total;
    let drift = fit.series[..fit.trusted].iter().map(|s| ((s.energy.total - e0) / e0).abs()).fold(0.0, f64::max);
    let expected = expected_amplitude_slope(c.d(), c.nu());
    let rel = ((fit.slope - expected) / expected).abs();
    let invariants = vec![
        Invariant::new("energy drift", drift <= cfg.energy_drift_tol, format!("{drift:e}")),
        Invariant::new("amplitude exponent", rel <= cfg.amplitude_tol, format!("{} vs {expected}", fit.slope)),
    ];
    sink.json(
        "simulate_manifest.json",
        &json!({
            "command": "simulate",
            "constants": constants_json(&c),
            "k": slice.k,
            "n_r": sim.n_r,
            "t_start": t_start,
            "t_end": t_end,
            "slope": fit.slope,
            "expected_slope": expected,
            "window": [fit.window.0, fit.window.1],
            "trusted_samples": fit.trusted,
            "stop": format!("{:?}", fit.stop),
            "shift": shift.map(|(a, b)| [a, b]),
            "energy_drift": drift,
            "invariants": invariants,
        }),
    )?;
    Ok(Report { files: sink.files, invariants })
}
