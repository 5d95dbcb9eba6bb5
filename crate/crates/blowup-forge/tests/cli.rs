use blowup_forge::{RunConfig, Table};
use std::path::{Path, PathBuf};
use std::process::Command;

fn forge(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_blowup-forge")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn write_config(dir: &Path, json: &str) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, json).unwrap();
    p
}

const SMALL_PROFILE: &str = r#"{"k": 1, "n_a": 48, "n_t": 6}"#;

fn csvs(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<_> =
        std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).filter(|p| p.extension().is_some_and(|x| x == "csv")).collect();
    v.sort();
    v
}

#[test]
fn config_round_trips() {
    let c = RunConfig { d: 4, nu: 2.75, t0: Some(0.3), seed: 99, sim_t0: None, ..Default::default() };
    assert_eq!(RunConfig::parse(&c.to_json()).unwrap(), c);
    assert_eq!(RunConfig::parse(&RunConfig::default().to_json()).unwrap(), RunConfig::default());
}

#[test]
fn k1_profile_emits_fields_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_PROFILE);
    let out = dir.path().join("out");
    let (code, _) = forge(&["profile", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    for f in ["u_0.csv", "u_1.csv", "v_1.csv", "e_0.csv", "e_1.csv", "decay_fits.csv", "profile_manifest.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    assert!(!out.join("e_2.csv").exists());
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("profile_manifest.json")).unwrap()).unwrap();
    for key in ["c1", "c2"] {
        assert!(m["constants"][key].as_f64().is_some_and(f64::is_finite));
    }
    assert!(m["m"].as_f64().is_some_and(|x| x > 0.0));
    assert_eq!(m["decay_fits"].as_array().unwrap().len(), 2);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_PROFILE);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for o in [&a, &b] {
        assert_eq!(forge(&["profile", "--config", cfg.to_str().unwrap(), "--out", o.to_str().unwrap(), "--seed", "5"]).0, 0);
    }
    let (fa, fb) = (csvs(&a), csvs(&b));
    assert_eq!(fa.len(), fb.len());
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap(), "{}", x.display());
    }
}

#[test]
fn emitted_files_parse_back_with_their_column_invariants() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"k": 1, "n_a": 48, "n_t": 6, "xi_min": 1e-2, "xi_max": 1e3, "kernel_points": 3}"#);
    let out = dir.path().join("out");
    let c = cfg.to_str().unwrap();
    assert_eq!(forge(&["profile", "--config", c, "--out", out.to_str().unwrap()]).0, 0);
    // The 1e-2 lower end is above the small-ξ window, so only the large-ξ fit is reported.
    assert_eq!(forge(&["spectral", "--config", c, "--out", out.to_str().unwrap()]).0, 0);

    let u0 = Table::read(&out.join("u_0.csv")).unwrap();
    assert_eq!(u0.header, ["a", "t", "R", "u", "u_R", "u_RR", "u_t", "u_tt"]);
    assert_eq!(u0.rows.len(), 48 * 6);
    for r in &u0.rows {
        assert!(r.iter().all(|x| x.is_finite()));
        assert!(r[0] >= 0.0 && r[1] > 0.0 && r[2] >= 0.0);
        // u₀ = λ^q W(R) is positive
        assert!(r[3] > 0.0);
    }

    let rho = Table::read(&out.join("rho.csv")).unwrap();
    let xi = rho.column("xi").unwrap();
    assert!(xi.windows(2).all(|w| w[1] > w[0]));
    assert!(rho.column("rho").unwrap().iter().all(|&r| r > 0.0));

    let f = Table::read(&out.join("kernel_f.csv")).unwrap();
    assert_eq!(f.rows.len(), 9);
    for r in &f.rows {
        let mirror = f.rows.iter().find(|s| s[0] == r[1] && s[1] == r[0]).unwrap();
        assert!((r[2] - mirror[2]).abs() <= 1e-8 * r[2].abs().max(1.0));
    }
    let slopes = Table::read(&out.join("rho_slopes.csv")).unwrap();
    assert_eq!(slopes.rows.len(), 1);
    assert!((slopes.rows[0][3] - 1.5).abs() < 0.05);
}

#[test]
fn empty_xi_grid_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"xi_min": 10, "xi_max": 1}"#);
    let (code, _) = forge(&["spectral", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn bad_arguments_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{}");
    let c = cfg.to_str().unwrap();
    assert_eq!(forge(&["spectral", "--config", c, "--d", "6"]).0, 2);
    assert_eq!(forge(&["explode", "--config", c]).0, 2);
    assert_eq!(forge(&["profile"]).0, 2);
    assert_eq!(forge(&["profile", "--config", dir.path().join("missing.json").to_str().unwrap()]).0, 2);
    assert_eq!(forge(&["profile", "--config", c, "--d", "5", "--nu", "1.0"]).0, 2);
    std::fs::write(&cfg, r#"{"unknown_knob": 1}"#).unwrap();
    assert_eq!(forge(&["profile", "--config", c]).0, 2);
}

#[test]
fn failed_invariants_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"xi_min": 1e2, "xi_max": 1e4, "kernel_points": 1, "slope_tol": 1e-12}"#);
    let (code, stdout) = forge(&["spectral", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stdout.contains("FAIL large-ξ slope"));
}

#[test]
fn parametrix_reports_three_monotone_contraction_factors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg =
        write_config(dir.path(), r#"{"fourier_xi_min": 1e-4, "fourier_xi_max": 10, "fourier_per_decade": 2, "contraction_samples": 3}"#);
    let out = dir.path().join("o");
    let (code, stdout) = forge(&["parametrix", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}");
    let k = Table::read(&out.join("kappa.csv")).unwrap();
    let tau = k.column("tau0").unwrap();
    assert_eq!(tau, [1e2, 1e3, 1e4]);
    let kappa = k.column("kappa").unwrap();
    assert!(kappa.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn simulate_emits_a_time_series() {
    let dir = tempfile::tempdir().unwrap();
    // Too coarse to pass the amplitude check; only the file contract is tested here.
    let cfg = write_config(dir.path(), r#"{"sim_shoot": false, "sim_lambda_dr": 0.1, "sim_sample_every": 5, "n_a": 96, "n_t": 8}"#);
    let out = dir.path().join("o");
    let (code, _) = forge(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(code == 0 || code == 1);
    let s = Table::read(&out.join("series.csv")).unwrap();
    assert_eq!(&s.header[..5], ["t", "max_u", "energy", "energy_in", "energy_out"]);
    assert!(s.rows.len() > 2);
    assert!(s.rows.windows(2).all(|w| w[1][0] < w[0][0]));
    for r in &s.rows {
        assert!((r[3] + r[4] - r[2]).abs() <= 1e-9 * r[2].abs());
    }
}
