//! Photon-counting state tomography: Poisson count simulation for the
//! four-projector polarization set {H, V, +45°, right-circular}, linear
//! inversion, positivity repair, and dark-count correction.

use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::dynamics::{DynamicsError, apply_map};
use crate::numeric::derive_seed;
use crate::process::ProcessModel;
use crate::qubit::{DensityMatrix, PolarizationAngle, trace_distance};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TomographyError {
    /// Rates must be non-negative and the integration time positive.
    InvalidConfig { reason: &'static str },
    /// No counts in the {H, V} basis; the state cannot be normalized.
    ZeroTotalCounts,
    Dynamics(DynamicsError),
}

impl fmt::Display for TomographyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidConfig { reason } => write!(f, "invalid counting config: {reason}"),
            Self::ZeroTotalCounts => {
                write!(f, "zero total counts in the H/V basis; reconstruction impossible")
            }
            Self::Dynamics(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for TomographyError {}

impl From<DynamicsError> for TomographyError {
    fn from(e: DynamicsError) -> Self {
        Self::Dynamics(e)
    }
}

/// Detector and integration settings of one tomography acquisition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountingConfig {
    /// Signal count rate at unit projection overlap (counts/s).
    pub signal_rate_per_s: f64,
    pub integration_time_s: f64,
    /// Dark and background rate, identical across projectors (counts/s).
    pub dark_rate_per_s: f64,
    pub rng_seed: u64,
}

impl CountingConfig {
    pub fn validate(&self) -> Result<(), TomographyError> {
        if !(self.signal_rate_per_s >= 0.0) || !self.signal_rate_per_s.is_finite() {
            return Err(TomographyError::InvalidConfig { reason: "signal rate must be >= 0" });
        }
        if !(self.dark_rate_per_s >= 0.0) || !self.dark_rate_per_s.is_finite() {
            return Err(TomographyError::InvalidConfig { reason: "dark rate must be >= 0" });
        }
        if !(self.integration_time_s > 0.0) || !self.integration_time_s.is_finite() {
            return Err(TomographyError::InvalidConfig {
                reason: "integration time must be > 0",
            });
        }
        Ok(())
    }

    /// Expected dark counts per projector over the integration window.
    pub fn dark_counts(&self) -> f64 {
        self.dark_rate_per_s * self.integration_time_s
    }
}

/// Projection operators of the tomography set, as density matrices:
/// |H⟩⟨H|, |V⟩⟨V|, |+45°⟩⟨+45°|, and |R⟩⟨R| with |R⟩ = (|H⟩ − i|V⟩)/√2.
fn projectors() -> [[[C64; 2]; 2]; 4] {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let half = C64::new(0.5, 0.0);
    let half_i = C64::new(0.0, 0.5);
    [
        [[one, z], [z, z]],
        [[z, z], [z, one]],
        [[half, half], [half, half]],
        [[half, half_i], [-half_i, half]],
    ]
}

/// Re tr(Πρ) for Hermitian Π and ρ.
fn expectation(proj: &[[C64; 2]; 2], rho: &DensityMatrix) -> f64 {
    let m = rho.entries();
    let mut tr = C64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            tr += proj[i][j] * m[j][i];
        }
    }
    tr.re
}

/// One simulated tomography acquisition of a single state.
#[derive(Debug, Clone, PartialEq)]
pub struct TomographyRecord {
    /// Ideal projection probabilities tr(Πρ) of the true state.
    pub probabilities: [f64; 4],
    /// Expected counts per projector, signal plus dark.
    pub expected_counts: [f64; 4],
    /// Counts per projector. Integers as sampled; dark-count correction
    /// replaces them with clamped differences.
    pub counts: [f64; 4],
    pub reconstructed: DensityMatrix,
    /// Count-statistics standard error of each projection probability.
    pub std_errors: [f64; 4],
    /// Whether the linear inversion left the eigenvalue range and the
    /// state was projected back to positivity.
    pub positivity_projected: bool,
}

/// Samples projector counts from Poisson statistics and reconstructs the
/// state by linear inversion. The RNG is seeded from `cfg.rng_seed`, so a
/// record is bit-reproducible for a given configuration.
pub fn simulate_tomography(
    rho_true: &DensityMatrix,
    cfg: &CountingConfig,
) -> Result<TomographyRecord, TomographyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    simulate_with_rng(rho_true, cfg, &mut rng)
}

fn simulate_with_rng<R: Rng>(
    rho_true: &DensityMatrix,
    cfg: &CountingConfig,
    rng: &mut R,
) -> Result<TomographyRecord, TomographyError> {
    cfg.validate()?;
    let mut probabilities = [0.0; 4];
    let mut expected_counts = [0.0; 4];
    let mut counts = [0.0; 4];
    for (k, proj) in projectors().iter().enumerate() {
        probabilities[k] = expectation(proj, rho_true);
        expected_counts[k] = cfg.signal_rate_per_s * cfg.integration_time_s * probabilities[k]
            + cfg.dark_counts();
        counts[k] = if expected_counts[k] > 0.0 {
            let poisson = Poisson::new(expected_counts[k])
                .map_err(|_| TomographyError::InvalidConfig { reason: "count mean overflow" })?;
            libm::round(poisson.sample(rng))
        } else {
            0.0
        };
    }
    let (reconstructed, positivity_projected) = reconstruct(&counts)?;
    let std_errors = probability_errors(&counts, &counts);
    Ok(TomographyRecord {
        probabilities,
        expected_counts,
        counts,
        reconstructed,
        std_errors,
        positivity_projected,
    })
}

/// Subtracts the expected dark counts from every projector (clamping at
/// zero) and re-runs the reconstruction.
pub fn correct_dark_counts(
    record: &TomographyRecord,
    cfg: &CountingConfig,
) -> Result<TomographyRecord, TomographyError> {
    cfg.validate()?;
    let dark = cfg.dark_counts();
    let corrected = record.counts.map(|c| (c - dark).max(0.0));
    let (reconstructed, positivity_projected) = reconstruct(&corrected)?;
    let std_errors = probability_errors(&record.counts, &corrected);
    Ok(TomographyRecord {
        probabilities: record.probabilities,
        expected_counts: record.expected_counts,
        counts: corrected,
        reconstructed,
        std_errors,
        positivity_projected,
    })
}

/// Per-projector probability standard errors: Poisson variance of the raw
/// counts, normalized by the {H, V} total actually used for inversion.
fn probability_errors(raw: &[f64; 4], used: &[f64; 4]) -> [f64; 4] {
    let total = used[0] + used[1];
    if total <= 0.0 {
        return [0.0; 4];
    }
    core::array::from_fn(|k| libm::sqrt(raw[k].max(0.0)) / total)
}

/// Linear inversion of the four-projector counts. The Bloch components
/// follow from count ratios; a Bloch vector outside the unit ball is the
/// linear-inversion signature of a negative eigenvalue and is clipped back
/// to unit length (equivalent to zeroing the negative eigenvalue and
/// renormalizing the trace).
fn reconstruct(counts: &[f64; 4]) -> Result<(DensityMatrix, bool), TomographyError> {
    let total = counts[0] + counts[1];
    if total <= 0.0 {
        return Err(TomographyError::ZeroTotalCounts);
    }
    let z = (counts[0] - counts[1]) / total;
    let x = 2.0 * counts[2] / total - 1.0;
    let y = 1.0 - 2.0 * counts[3] / total;
    let norm = libm::sqrt(x * x + y * y + z * z);
    let (x, y, z, projected) =
        if norm > 1.0 { (x / norm, y / norm, z / norm, true) } else { (x, y, z, false) };
    let rho = DensityMatrix::new_unchecked([
        [C64::new(0.5 * (1.0 + z), 0.0), C64::new(0.5 * x, -0.5 * y)],
        [C64::new(0.5 * x, 0.5 * y), C64::new(0.5 * (1.0 - z), 0.0)],
    ]);
    debug_assert!(rho.validate().is_ok());
    Ok((rho, projected))
}

/// Raw and dark-corrected trace-distance results of one simulated
/// measurement run: tomography of both states at t₀ and at t_f.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuredGains {
    pub raw_gain: f64,
    pub raw_final: f64,
    pub corrected_gain: f64,
    pub corrected_final: f64,
    pub positivity_projections: u32,
}

/// Simulates the four tomographies of one ΔD measurement (both states,
/// both times). The four acquisitions draw independent seeds derived from
/// `(cfg.rng_seed, salt)`.
pub fn measured_distance_gain(
    model: &ProcessModel,
    rho1_0: &DensityMatrix,
    rho2_0: &DensityMatrix,
    cfg: &CountingConfig,
    salt: u64,
) -> Result<MeasuredGains, TomographyError> {
    let t0 = model.delay_time();
    let tf = model.final_time();
    let states = [
        apply_map(model, rho1_0, t0)?,
        apply_map(model, rho2_0, t0)?,
        apply_map(model, rho1_0, tf)?,
        apply_map(model, rho2_0, tf)?,
    ];
    let mut raw = Vec::with_capacity(4);
    let mut corrected = Vec::with_capacity(4);
    let mut projections = 0u32;
    for (k, state) in states.iter().enumerate() {
        let acquisition =
            CountingConfig { rng_seed: derive_seed(cfg.rng_seed, salt * 4 + k as u64), ..*cfg };
        let record = simulate_tomography(state, &acquisition)?;
        let fixed = correct_dark_counts(&record, &acquisition)?;
        projections += u32::from(record.positivity_projected);
        projections += u32::from(fixed.positivity_projected);
        raw.push(record.reconstructed);
        corrected.push(fixed.reconstructed);
    }
    Ok(MeasuredGains {
        raw_gain: trace_distance(&raw[2], &raw[3]) - trace_distance(&raw[0], &raw[1]),
        raw_final: trace_distance(&raw[2], &raw[3]),
        corrected_gain: trace_distance(&corrected[2], &corrected[3])
            - trace_distance(&corrected[0], &corrected[1]),
        corrected_final: trace_distance(&corrected[2], &corrected[3]),
        positivity_projections: projections,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleStats {
    pub mean: f64,
    /// Sample standard deviation (n − 1 in the denominator).
    pub std_dev: f64,
}

fn stats(values: &[f64]) -> EnsembleStats {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    EnsembleStats { mean, std_dev: libm::sqrt(var) }
}

/// Monte Carlo summary of the measured ΔD for one state pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainEnsemble {
    pub n_trials: u32,
    pub seed: u64,
    /// Noise-free ΔD of the pair.
    pub theory_gain: f64,
    pub raw: EnsembleStats,
    pub corrected: EnsembleStats,
    pub positivity_projections: u32,
}

/// Repeats the full ΔD measurement `n_trials` times with per-trial derived
/// seeds. Trials are independent of evaluation order, so the summary is
/// reproducible for a given `cfg.rng_seed`.
pub fn distance_gain_ensemble(
    model: &ProcessModel,
    theta: PolarizationAngle,
    xi: PolarizationAngle,
    cfg: &CountingConfig,
    n_trials: u32,
) -> Result<GainEnsemble, TomographyError> {
    if n_trials == 0 {
        return Err(TomographyError::InvalidConfig { reason: "n_trials must be > 0" });
    }
    cfg.validate()?;
    let rho1 = DensityMatrix::pure(theta);
    let rho2 = DensityMatrix::pure(xi);
    let theory_gain = crate::measure::distance_gain(model, theta, xi)?;
    let mut raw = Vec::with_capacity(n_trials as usize);
    let mut corrected = Vec::with_capacity(n_trials as usize);
    let mut projections = 0u32;
    for trial in 0..n_trials {
        let gains = measured_distance_gain(model, &rho1, &rho2, cfg, trial as u64)?;
        raw.push(gains.raw_gain);
        corrected.push(gains.corrected_gain);
        projections += gains.positivity_projections;
    }
    Ok(GainEnsemble {
        n_trials,
        seed: cfg.rng_seed,
        theory_gain,
        raw: stats(&raw),
        corrected: stats(&corrected),
        positivity_projections: projections,
    })
}
