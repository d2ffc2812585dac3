//! Synthetic reproduction of the measured curves: delay sweeps, angle
//! sweeps, the photon-counting tomography chain, and coherence-time fits.

pub mod fit;
pub mod tomography;

use alloc::vec::Vec;

pub use fit::{FitError, FitResult, fit_coherence_time, fit_spectrum};
pub use tomography::{CountingConfig, EnsembleStats, GainEnsemble, TomographyError,
                     TomographyRecord, correct_dark_counts, distance_gain_ensemble,
                     simulate_tomography};

use crate::dynamics::{DynamicsError, apply_decoherence};
use crate::measure::distance_gain;
use crate::process::{ExperimentParams, ProcessModel, Spectrum};
use crate::qubit::{DensityMatrix, PolarizationAngle, trace_distance};

/// One noise-free delay-sweep sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelaySweepPoint {
    pub x0_mm: f64,
    /// ΔD(θ, ξ, x₀) = D(t_f) − D(t₀).
    pub delta_d: f64,
    /// Final trace distance D(t_f).
    pub d_tf: f64,
}

/// Theory-mode delay sweep: ΔD and D(t_f) for the given pair at each delay.
pub fn sweep_delay(
    spectrum: &Spectrum,
    base: &ExperimentParams,
    x0_list: &[f64],
    theta: PolarizationAngle,
    xi: PolarizationAngle,
) -> Result<Vec<DelaySweepPoint>, DynamicsError> {
    let rho1 = DensityMatrix::pure(theta);
    let rho2 = DensityMatrix::pure(xi);
    x0_list
        .iter()
        .map(|&x0_mm| {
            let model = ProcessModel::new(*spectrum, base.with_x0_mm(x0_mm)?);
            let d_at = |t: f64| -> Result<f64, DynamicsError> {
                let kappa = model.decoherence(t)?;
                Ok(trace_distance(
                    &apply_decoherence(&rho1, kappa),
                    &apply_decoherence(&rho2, kappa),
                ))
            };
            let d_t0 = d_at(model.delay_time())?;
            let d_tf = d_at(model.final_time())?;
            Ok(DelaySweepPoint { x0_mm, delta_d: d_tf - d_t0, d_tf })
        })
        .collect()
}

/// One counting-noise delay-sweep sample: a single seeded tomography
/// realization per state and time, reconstructed raw and dark-corrected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisyDelaySweepPoint {
    pub x0_mm: f64,
    pub delta_d_raw: f64,
    pub d_tf_raw: f64,
    pub delta_d_corrected: f64,
    pub d_tf_corrected: f64,
}

/// Counting-noise delay sweep. Each sweep point draws its own tomography
/// seeds from `counting.rng_seed` and the point index, so the table is
/// reproducible point by point.
pub fn sweep_delay_noisy(
    spectrum: &Spectrum,
    base: &ExperimentParams,
    x0_list: &[f64],
    theta: PolarizationAngle,
    xi: PolarizationAngle,
    counting: &CountingConfig,
) -> Result<Vec<NoisyDelaySweepPoint>, TomographyError> {
    let rho1 = DensityMatrix::pure(theta);
    let rho2 = DensityMatrix::pure(xi);
    x0_list
        .iter()
        .enumerate()
        .map(|(index, &x0_mm)| {
            let params = base.with_x0_mm(x0_mm).map_err(DynamicsError::from)?;
            let model = ProcessModel::new(*spectrum, params);
            let gains =
                tomography::measured_distance_gain(&model, &rho1, &rho2, counting, index as u64)?;
            Ok(NoisyDelaySweepPoint {
                x0_mm,
                delta_d_raw: gains.raw_gain,
                d_tf_raw: gains.raw_final,
                delta_d_corrected: gains.corrected_gain,
                d_tf_corrected: gains.corrected_final,
            })
        })
        .collect()
}

/// ΔD surface over a (θ, ξ) grid at fixed delay.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSweep {
    pub theta_deg: Vec<f64>,
    pub xi_deg: Vec<f64>,
    /// `gain[i][j]` = ΔD(θᵢ, ξⱼ); rows follow `theta_deg`.
    pub gain: Vec<Vec<f64>>,
    pub argmax: (f64, f64),
    pub max_gain: f64,
}

/// Evaluates ΔD(θ, ξ) over the grid and reports the maximum location
/// (ties resolved toward the lowest θ, then ξ).
pub fn sweep_angles(
    model: &ProcessModel,
    theta_list: &[f64],
    xi_list: &[f64],
) -> Result<AngleSweep, DynamicsError> {
    let mut gain = Vec::with_capacity(theta_list.len());
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for &theta in theta_list {
        let mut row = Vec::with_capacity(xi_list.len());
        for &xi in xi_list {
            let g = distance_gain(
                model,
                PolarizationAngle::new(theta),
                PolarizationAngle::new(xi),
            )?;
            if g > best.0 || (g == best.0 && (theta, xi) < (best.1, best.2)) {
                best = (g, theta, xi);
            }
            row.push(g);
        }
        gain.push(row);
    }
    Ok(AngleSweep {
        theta_deg: theta_list.to_vec(),
        xi_deg: xi_list.to_vec(),
        gain,
        argmax: (best.1, best.2),
        max_gain: best.0,
    })
}

/// Uniform inclusive range with the given step (last point clipped to
/// `stop` when the step does not divide the range exactly).
pub fn range_inclusive(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || stop < start {
        return Vec::new();
    }
    let n = libm::round((stop - start) / step) as i64;
    let n = n.max(0) as usize;
    let mut out: Vec<f64> = (0..=n).map(|i| start + i as f64 * step).collect();
    if let Some(last) = out.last_mut()
        && *last > stop
    {
        *last = stop;
    }
    out
}
