use blowup::profiles::BlowupConstants;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::ForgeError;

/// Every knob of every command, as one flat JSON object. Missing keys take the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub d: usize,
    pub nu: f64,
    /// Cone height; `null` picks `t₀λ(t₀) = 10³` (d = 5) or `10` (d = 4).
    pub t0: Option<f64>,
    pub eps: f64,
    pub n0: usize,
    /// Renormalization steps.
    pub k: usize,

    pub n_a: usize,
    pub n_t: usize,
    pub delta_a: f64,

    pub xi_min: f64,
    pub xi_max: f64,
    pub xi_per_decade: usize,
    /// `F(ξ, η)` is tabulated on this many log-spaced nodes in `[kernel_xi_min, kernel_xi_max]`.
    pub kernel_points: usize,
    pub kernel_xi_min: f64,
    pub kernel_xi_max: f64,
    pub symmetry_tol: f64,
    pub slope_tol: f64,

    pub fourier_xi_min: f64,
    pub fourier_xi_max: f64,
    pub fourier_per_decade: usize,
    pub alpha: f64,
    pub order: f64,
    /// κ is reported at `tau0_first·10^j`, `j = 0, 1, 2`.
    pub tau0_first: f64,
    pub contraction_samples: usize,
    pub defect_tol: f64,

    /// Start of the simulation; `null` uses the profile's cone height.
    pub sim_t0: Option<f64>,
    /// Simulation stops at `sim_t_end_fraction·t_start`.
    pub sim_t_end_fraction: f64,
    /// `λ(t_start)·δr`.
    pub sim_lambda_dr: f64,
    pub sim_cfl: f64,
    pub sim_sample_every: usize,
    pub sim_shoot: bool,
    pub energy_drift_tol: f64,
    /// Relative tolerance on the amplitude exponent.
    pub amplitude_tol: f64,

    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            d: 5,
            nu: 6.0,
            t0: None,
            eps: 0.05,
            n0: 10,
            k: 2,
            n_a: 256,
            n_t: 12,
            delta_a: 1e-4,
            xi_min: 1e-6,
            xi_max: 1e4,
            xi_per_decade: 4,
            kernel_points: 6,
            kernel_xi_min: 1e-3,
            kernel_xi_max: 1e1,
            symmetry_tol: 1e-8,
            slope_tol: 0.05,
            fourier_xi_min: 1e-6,
            fourier_xi_max: 1e2,
            fourier_per_decade: 3,
            alpha: 1.0,
            order: 40.0,
            tau0_first: 1e2,
            contraction_samples: 8,
            defect_tol: 1e-4,
            sim_t0: Some(0.4),
            sim_t_end_fraction: 0.3,
            sim_lambda_dr: 0.05,
            sim_cfl: 0.4,
            sim_sample_every: 20,
            sim_shoot: true,
            energy_drift_tol: 1e-3,
            amplitude_tol: 0.15,
            out_dir: PathBuf::from("out"),
            seed: 11,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<(), ForgeError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ForgeError::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ForgeError> {
        let text = std::fs::read_to_string(path).map_err(|e| ForgeError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ForgeError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| ForgeError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    /// The constants of the construction; rejects everything [`BlowupConstants`] rejects.
    pub fn constants(&self) -> Result<BlowupConstants, ForgeError> {
        let mut c = BlowupConstants::new(self.d, self.nu).map_err(|e| ForgeError::Config(e.to_string()))?;
        if let Some(t0) = self.t0 {
            c = c.with_t0(t0).map_err(|e| ForgeError::Config(e.to_string()))?;
        }
        c = c.with_eps(self.eps).map_err(|e| ForgeError::Config(e.to_string()))?;
        Ok(c.with_n0(self.n0))
    }

    pub fn validate(&self) -> Result<(), ForgeError> {
        self.constants()?;
        for (name, v) in [
            ("delta_a", self.delta_a),
            ("xi_min", self.xi_min),
            ("xi_max", self.xi_max),
            ("kernel_xi_min", self.kernel_xi_min),
            ("kernel_xi_max", self.kernel_xi_max),
            ("symmetry_tol", self.symmetry_tol),
            ("slope_tol", self.slope_tol),
            ("fourier_xi_min", self.fourier_xi_min),
            ("fourier_xi_max", self.fourier_xi_max),
            ("alpha", self.alpha),
            ("order", self.order),
            ("tau0_first", self.tau0_first),
            ("defect_tol", self.defect_tol),
            ("sim_t_end_fraction", self.sim_t_end_fraction),
            ("sim_lambda_dr", self.sim_lambda_dr),
            ("sim_cfl", self.sim_cfl),
            ("energy_drift_tol", self.energy_drift_tol),
            ("amplitude_tol", self.amplitude_tol),
        ] {
            positive(name, v)?;
        }
        if let Some(t) = self.sim_t0 {
            if !(t > 0.0 && t < 1.0) {
                return Err(ForgeError::Config(format!("sim_t0 must lie in (0, 1), got {t}")));
            }
        }
        if self.sim_t_end_fraction >= 1.0 {
            return Err(ForgeError::Config("sim_t_end_fraction must be below 1".into()));
        }
        if self.n_a < 4 || self.n_t < 2 {
            return Err(ForgeError::Config("profile grid needs n_a ≥ 4 and n_t ≥ 2".into()));
        }
        if self.xi_per_decade == 0 || self.xi_min >= self.xi_max {
            return Err(ForgeError::Config(format!(
                "empty ξ grid [{}, {}] with {} per decade",
                self.xi_min, self.xi_max, self.xi_per_decade
            )));
        }
        if self.kernel_points == 0 || self.kernel_xi_min > self.kernel_xi_max {
            return Err(ForgeError::Config("empty F grid".into()));
        }
        if self.fourier_per_decade == 0 || self.fourier_xi_min >= self.fourier_xi_max {
            return Err(ForgeError::Config("empty Fourier grid".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn partial_objects_fill_in_defaults() {
        let c = RunConfig::parse(r#"{"d": 4, "nu": 2.5}"#).unwrap();
        assert_eq!(c.d, 4);
        assert_eq!(c.nu, 2.5);
        assert_eq!(c.k, RunConfig::default().k);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_constants() {
        assert!(matches!(RunConfig::parse(r#"{"dim": 5}"#), Err(ForgeError::Config(_))));
        assert!(matches!(RunConfig::parse(r#"{"d": 5, "nu": 2.0}"#), Err(ForgeError::Config(_))));
        assert!(matches!(RunConfig::parse(r#"{"d": 6}"#), Err(ForgeError::Config(_))));
        assert!(matches!(RunConfig::parse(r#"{"symmetry_tol": 0}"#), Err(ForgeError::Config(_))));
        assert!(matches!(RunConfig::parse(r#"{"xi_per_decade": 0}"#), Err(ForgeError::Config(_))));
    }
}
