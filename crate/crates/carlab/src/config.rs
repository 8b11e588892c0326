//! Experiment configuration: a flat TOML table. Every key is optional and
//! falls back to the default preset.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: String,
    pub seed: u64,
    /// Grid points for the dense identity suites.
    pub grid_points: usize,
    /// Length of the half-line window `[0, x_max)`.
    pub x_max: f64,
    /// Mode count for suites that assemble Choi matrices.
    pub choi_modes: usize,
    /// Picard horizon in grid cells.
    pub time_horizon: usize,
    /// Coarsest grid of the convergence sweeps.
    pub sweep_base_points: usize,
    /// Number of h-halvings in convergence sweeps.
    pub halvings: usize,
    pub kraus_n: Vec<usize>,
    pub picard_steps: usize,
    pub random_cases: usize,
    pub car_samples: usize,
    pub determinant_cases: usize,
    pub negative_cases: usize,
    pub no_event_dim: usize,
    pub no_event_couplings: usize,
    pub excessivity_times: Vec<f64>,
    pub tol_identity: f64,
    pub tol_determinant: f64,
    pub tol_covariance: f64,
    pub tol_cp: f64,
    pub tol_theta: f64,
    pub tol_closed_form: f64,
    pub tol_ratio: f64,
    /// Relative level below which a sweep error counts as exact.
    pub exact_floor: f64,
    pub negative_factor: f64,
    pub out_dir: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            preset: "default".into(),
            seed: 20_240_601,
            grid_points: 8,
            x_max: 1.0,
            choi_modes: 4,
            time_horizon: 4,
            sweep_base_points: 16,
            halvings: 3,
            kraus_n: vec![4, 8, 16, 32],
            picard_steps: 20,
            random_cases: 200,
            car_samples: 50,
            determinant_cases: 100,
            negative_cases: 20,
            no_event_dim: 4,
            no_event_couplings: 2,
            excessivity_times: vec![0.1, 0.5, 1.0, 2.0],
            tol_identity: 1e-10,
            tol_determinant: 1e-12,
            tol_covariance: 1e-12,
            tol_cp: 1e-10,
            tol_theta: 1e-8,
            tol_closed_form: 1e-10,
            tol_ratio: 1.7,
            exact_floor: 1e-12,
            negative_factor: 100.0,
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let config: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |msg: String| Err(HarnessError::Config(msg));
        if !(4..=12).contains(&self.grid_points) {
            return fail(format!("grid_points = {} must lie in 4..=12", self.grid_points));
        }
        // dense superoperators need 2^M ≤ 16 and grids need M ≥ 4
        if self.choi_modes != 4 {
            return fail(format!("choi_modes = {} must be 4", self.choi_modes));
        }
        if self.time_horizon == 0 || self.time_horizon > self.choi_modes {
            return fail(format!("time_horizon = {} must lie in 1..={}", self.time_horizon, self.choi_modes));
        }
        if !(self.x_max > 0.0 && self.x_max.is_finite()) {
            return fail(format!("x_max = {} must be positive", self.x_max));
        }
        if self.halvings < 2 {
            return fail(format!("halvings = {} gives fewer than 3 sweep levels", self.halvings));
        }
        if self.sweep_base_points < 8 || self.sweep_base_points << self.halvings > 128 {
            return fail(format!(
                "sweep_base_points = {} with {} halvings must stay within 8..=128 points",
                self.sweep_base_points, self.halvings
            ));
        }
        if self.kraus_n.len() < 3 || self.kraus_n.iter().any(|&n| n == 0 || 64 % n != 0) {
            return fail(format!("kraus_n = {:?} needs at least 3 divisors of 64", self.kraus_n));
        }
        if !(1..=16).contains(&self.no_event_dim) {
            return fail(format!("no_event_dim = {} must lie in 1..=16", self.no_event_dim));
        }
        if self.excessivity_times.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
            return fail("excessivity_times must be non-negative".into());
        }
        for (name, v) in [
            ("tol_identity", self.tol_identity),
            ("tol_determinant", self.tol_determinant),
            ("tol_covariance", self.tol_covariance),
            ("tol_cp", self.tol_cp),
            ("tol_theta", self.tol_theta),
            ("tol_closed_form", self.tol_closed_form),
            ("tol_ratio", self.tol_ratio),
            ("exact_floor", self.exact_floor),
            ("negative_factor", self.negative_factor),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} = {v} must be positive"));
            }
        }
        Ok(())
    }

    /// Grid point counts of a convergence sweep: the base grid and its halvings.
    pub fn sweep_grid(&self) -> Vec<usize> {
        (0..=self.halvings).map(|k| self.sweep_base_points << k).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), c);
        assert_eq!(c.sweep_grid(), vec![16, 32, 64, 128]);
    }

    #[test]
    fn partial_files_use_defaults() {
        let c = ExperimentConfig::from_toml_str("seed = 7\ngrid_points = 6\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.grid_points, 6);
        assert_eq!(c.picard_steps, 20);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ExperimentConfig::from_toml_str("grid_points = 40").is_err());
        assert!(ExperimentConfig::from_toml_str("choi_modes = 5").is_err());
        assert!(ExperimentConfig::from_toml_str("halvings = 1").is_err());
        assert!(ExperimentConfig::from_toml_str("kraus_n = [3, 6, 12]").is_err());
        assert!(ExperimentConfig::from_toml_str("unknown_key = 1").is_err());
        assert!(ExperimentConfig::from_toml_str("seed = \"x\"").is_err());
    }
}
