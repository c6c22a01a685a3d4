//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use skewflow::presets;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemSection,
    #[serde(default)]
    pub driving: DrivingSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub outputs: OutputSection,
}

/// Discretization fields fall back to the preset defaults.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub preset: String,
    /// Segment grid `m` for delay systems, node count `n` for parabolic ones.
    pub size: Option<usize>,
    pub steps_per_unit: Option<usize>,
    pub watchdog: Option<bool>,
}

/// Seed of the random Fourier coefficients; the driving kind is fixed by
/// the preset.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrivingSection {
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub horizon: usize,
    pub burn_in: usize,
    pub omega_seed: u64,
    /// Random draws for duality, Harnack and focusing checks.
    pub samples: usize,
    pub agreement_tol: f64,
    pub oracle_tol: f64,
    pub temperedness_tol: f64,
    pub duality_tol: f64,
    pub pullback_tol: f64,
    pub pullback_depth: usize,
    pub refresh: usize,
    pub orbit_back: usize,
    pub orbit_times: Vec<i64>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            horizon: 200,
            burn_in: 10,
            omega_seed: 0,
            samples: 20,
            agreement_tol: 1e-3,
            oracle_tol: 1e-3,
            temperedness_tol: 0.01,
            duality_tol: 1e-10,
            pullback_tol: 1e-10,
            pullback_depth: 200,
            refresh: 10,
            orbit_back: 5,
            orbit_times: (-5..=5).collect(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub csv: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            csv: true,
        }
    }
}

impl ExperimentConfig {
    pub fn for_preset(preset: &str) -> Self {
        Self {
            system: SystemSection {
                preset: preset.to_string(),
                size: None,
                steps_per_unit: None,
                watchdog: None,
            },
            driving: DrivingSection::default(),
            run: RunSection::default(),
            outputs: OutputSection::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), String> {
        presets::default_discretization(&self.system.preset).map_err(|e| e.to_string())?;
        let r = &self.run;
        let tols = [
            ("agreement_tol", r.agreement_tol),
            ("oracle_tol", r.oracle_tol),
            ("temperedness_tol", r.temperedness_tol),
            ("duality_tol", r.duality_tol),
            ("pullback_tol", r.pullback_tol),
        ];
        if let Some((name, _)) = tols.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(format!("run.{name} must be positive"));
        }
        if r.horizon <= r.burn_in {
            return Err("run.horizon must exceed run.burn_in".into());
        }
        if r.samples == 0 || r.refresh == 0 {
            return Err("run.samples and run.refresh must be positive".into());
        }
        if self.system.size == Some(0) || self.system.steps_per_unit == Some(0) {
            return Err("system.size and system.steps_per_unit must be positive".into());
        }
        Ok(())
    }

    pub fn discretization(&self) -> presets::Discretization {
        let mut d = presets::default_discretization(&self.system.preset).expect("validated preset");
        if let Some(size) = self.system.size {
            d.size = size;
        }
        if let Some(spu) = self.system.steps_per_unit {
            d.steps_per_unit = spu;
        }
        if let Some(w) = self.system.watchdog {
            d.watchdog = w;
        }
        d
    }
}
