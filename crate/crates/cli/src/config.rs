//! Run configuration: a single JSON document with unit-suffixed field
//! names. Every field has a default replicating the reference setup, so an
//! empty object (or no config file at all) runs the standard analysis.

use std::path::PathBuf;

use backflow_core::experiment::CountingConfig;
use backflow_core::{ExperimentParams, ProcessModel, Spectrum};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub spectrum: SpectrumSection,
    pub setup: SetupSection,
    pub counting: CountingSection,
    pub pair: PairSection,
    pub trajectory: TrajectorySection,
    pub sweep_delay: SweepDelaySection,
    pub sweep_angles: SweepAnglesSection,
    pub measure: MeasureSection,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            spectrum: SpectrumSection::default(),
            setup: SetupSection::default(),
            counting: CountingSection::default(),
            pair: PairSection::default(),
            trajectory: TrajectorySection::default(),
            sweep_delay: SweepDelaySection::default(),
            sweep_angles: SweepAnglesSection::default(),
            measure: MeasureSection::default(),
            seed: 1,
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    pub inv_delta_omega_ps: f64,
    pub lambda0_nm: f64,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self { inv_delta_omega_ps: 35.8, lambda0_nm: 946.3 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SetupSection {
    pub x0_mm: f64,
    pub fiber_length_m: f64,
    pub delta_n: f64,
    pub n_bar: f64,
}

impl Default for SetupSection {
    fn default() -> Self {
        Self { x0_mm: 19.15, fiber_length_m: 100.0, delta_n: 3.83e-4, n_bar: 1.45 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CountingSection {
    pub signal_rate_per_s: f64,
    pub integration_time_s: f64,
    pub dark_rate_per_s: f64,
}

impl Default for CountingSection {
    fn default() -> Self {
        Self { signal_rate_per_s: 7000.0, integration_time_s: 4.0, dark_rate_per_s: 150.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PairSection {
    pub theta_deg: f64,
    pub xi_deg: f64,
}

impl Default for PairSection {
    fn default() -> Self {
        Self { theta_deg: 135.0, xi_deg: 45.0 }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectorySection {
    /// Sampling step; `null` means the span divided into 20000 cells.
    pub time_step_ps: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepDelaySection {
    pub x0_start_mm: f64,
    pub x0_stop_mm: f64,
    pub x0_step_mm: f64,
    /// Add counting noise (one seeded tomography realization per point,
    /// raw and dark-corrected), plus a Monte Carlo ΔD summary at the
    /// configured `setup.x0_mm`.
    pub noise: bool,
    pub ensemble_trials: u32,
}

impl Default for SweepDelaySection {
    fn default() -> Self {
        Self {
            x0_start_mm: 0.0,
            x0_stop_mm: 40.0,
            x0_step_mm: 0.05,
            noise: false,
            ensemble_trials: 1000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepAnglesSection {
    pub theta_start_deg: f64,
    pub theta_stop_deg: f64,
    pub theta_step_deg: f64,
    pub xi_start_deg: f64,
    pub xi_stop_deg: f64,
    pub xi_step_deg: f64,
}

impl Default for SweepAnglesSection {
    fn default() -> Self {
        Self {
            theta_start_deg: 0.0,
            theta_stop_deg: 175.0,
            theta_step_deg: 5.0,
            xi_start_deg: 0.0,
            xi_stop_deg: 175.0,
            xi_step_deg: 5.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasureSection {
    pub coarse_step_deg: f64,
    pub refine_step_deg: f64,
    /// Sampling step for the distance series; `null` means the span
    /// divided into 20000 cells.
    pub time_step_ps: Option<f64>,
}

impl Default for MeasureSection {
    fn default() -> Self {
        Self { coarse_step_deg: 5.0, refine_step_deg: 0.5, time_step_ps: None }
    }
}

impl RunConfig {
    pub fn load(path: Option<&std::path::Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    /// Builds the validated physics objects. Every parameter invariant is
    /// checked here, before any computation starts.
    pub fn model(&self) -> Result<ProcessModel, CliError> {
        let omega0 = Spectrum::omega_from_wavelength_nm(self.spectrum.lambda0_nm);
        if !(self.spectrum.lambda0_nm > 0.0) {
            return Err(CliError::Config("spectrum.lambda0_nm must be positive".into()));
        }
        let spectrum = Spectrum::from_coherence_time(self.spectrum.inv_delta_omega_ps, omega0)
            .map_err(|e| CliError::Config(format!("spectrum.inv_delta_omega_ps: {e}")))?;
        Ok(ProcessModel::new(spectrum, self.params()?))
    }

    pub fn params(&self) -> Result<ExperimentParams, CliError> {
        ExperimentParams::new(
            self.setup.x0_mm,
            self.setup.fiber_length_m,
            self.setup.delta_n,
            self.setup.n_bar,
        )
        .map_err(|e| CliError::Config(format!("setup: {e}")))
    }

    pub fn counting(&self) -> Result<CountingConfig, CliError> {
        let counting = CountingConfig {
            signal_rate_per_s: self.counting.signal_rate_per_s,
            integration_time_s: self.counting.integration_time_s,
            dark_rate_per_s: self.counting.dark_rate_per_s,
            rng_seed: self.seed,
        };
        counting.validate().map_err(|e| CliError::Config(format!("counting: {e}")))?;
        Ok(counting)
    }

    /// Default sampling step: the process span divided into 20000 cells.
    pub fn resolved_time_step(&self, requested: Option<f64>, model: &ProcessModel) -> f64 {
        requested.unwrap_or(model.final_time() / 20_000.0)
    }
}
