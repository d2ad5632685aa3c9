//! Experiment configuration: JSON file plus flag overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

/// Environment variable supplying the default output directory.
pub const OUTPUT_DIR_ENV: &str = "OTMSIM_OUTPUT_DIR";

/// All knobs of the experiment battery. Field names are the wire format:
/// the config file is a JSON object with exactly these keys, and flags use
/// the same names with hyphens.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub n_values: Vec<usize>,
    pub restarts: u64,
    pub generations_max: u64,
    pub grid_step: f64,
    pub trials: u64,
    pub constraint_threshold: f64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            n_values: (20..=200).step_by(20).collect(),
            restarts: 1000,
            generations_max: 10_000,
            grid_step: 0.05,
            trials: 100_000,
            constraint_threshold: 0.83,
            output_dir: default_output_dir(),
        }
    }
}

fn default_output_dir() -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Flag-level overrides; `None` keeps the file (or default) value.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub seed: Option<u64>,
    pub n_values: Option<Vec<usize>>,
    pub restarts: Option<u64>,
    pub generations_max: Option<u64>,
    pub grid_step: Option<f64>,
    pub trials: Option<u64>,
    pub constraint_threshold: Option<f64>,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: Self = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(config)
    }

    pub fn apply(mut self, overrides: &ConfigOverrides) -> Self {
        if let Some(v) = overrides.seed {
            self.seed = v;
        }
        if let Some(v) = &overrides.n_values {
            self.n_values = v.clone();
        }
        if let Some(v) = overrides.restarts {
            self.restarts = v;
        }
        if let Some(v) = overrides.generations_max {
            self.generations_max = v;
        }
        if let Some(v) = overrides.grid_step {
            self.grid_step = v;
        }
        if let Some(v) = overrides.trials {
            self.trials = v;
        }
        if let Some(v) = overrides.constraint_threshold {
            self.constraint_threshold = v;
        }
        if let Some(v) = &overrides.output_dir {
            self.output_dir = v.clone();
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() || self.n_values.iter().any(|&n| n == 0) {
            bail!("n_values must be nonempty positive counts");
        }
        if self.restarts == 0 || self.generations_max == 0 || self.trials == 0 {
            bail!("restarts, generations_max, and trials must be at least 1");
        }
        if !(self.grid_step > 0.0 && self.grid_step <= 0.25) {
            bail!("grid_step must lie in (0, 0.25]");
        }
        if !(self.constraint_threshold > 0.5 && self.constraint_threshold < 0.854) {
            bail!("constraint_threshold must lie in (0.5, 0.854)");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn bad_values_are_rejected() {
        let mut c = ExperimentConfig::default();
        c.grid_step = 0.3;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.constraint_threshold = 0.9;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.n_values = vec![];
        assert!(c.validate().is_err());
    }

    #[test]
    fn file_round_trip_preserves_field_names() {
        let config = ExperimentConfig::default();
        let json = serde_json::to_string(&config).unwrap();
        for key in [
            "seed",
            "n_values",
            "restarts",
            "generations_max",
            "grid_step",
            "trials",
            "constraint_threshold",
            "output_dir",
        ] {
            assert!(json.contains(&format!("\"{key}\"")), "missing {key}");
        }
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back.seed, config.seed);
        assert_eq!(back.n_values, config.n_values);
    }
}
