//! Trace-distance revival intervals and the BLP non-Markovianity measure:
//! the total trace-distance increase over all revival intervals, maximized
//! over pairs of initial polarization states.

use alloc::vec::Vec;
use core::fmt;

use crate::dynamics::{DynamicsError, apply_decoherence, time_grid};
use crate::process::ProcessModel;
use crate::qubit::{DensityMatrix, PolarizationAngle, trace_distance};

/// Hysteresis for revival detection on noise-free, closed-form distance
/// series. Tomography-reconstructed series need a threshold tied to their
/// counting noise instead.
pub const EXACT_HYSTERESIS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureError {
    Dynamics(DynamicsError),
    /// Needs at least two samples to detect an increase.
    TooFewSamples { len: usize },
    /// Time and distance series must be the same length.
    LengthMismatch { times: usize, values: usize },
    /// The angle grid contains no pairs.
    EmptyGrid,
}

impl fmt::Display for MeasureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Dynamics(e) => write!(f, "{e}"),
            Self::TooFewSamples { len } => {
                write!(f, "need at least 2 samples, got {len}")
            }
            Self::LengthMismatch { times, values } => {
                write!(f, "times ({times}) and values ({values}) differ in length")
            }
            Self::EmptyGrid => write!(f, "angle grid contains no pairs"),
        }
    }
}

impl core::error::Error for MeasureError {}

impl From<DynamicsError> for MeasureError {
    fn from(e: DynamicsError) -> Self {
        Self::Dynamics(e)
    }
}

/// A maximal run of consecutive grid cells on which the trace distance
/// increases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncreaseInterval {
    pub t_start: f64,
    pub t_end: f64,
    /// `D(t_end) − D(t_start)`, equal to ∫σ dt over the interval by
    /// telescoping.
    pub delta_d: f64,
}

/// Maximal runs of rising cells in a sampled distance series. A cell
/// counts as rising when `D[i+1] > D[i] + hysteresis`.
pub fn increase_intervals(
    times: &[f64],
    distance: &[f64],
    hysteresis: f64,
) -> Result<Vec<IncreaseInterval>, MeasureError> {
    if times.len() != distance.len() {
        return Err(MeasureError::LengthMismatch { times: times.len(), values: distance.len() });
    }
    if distance.len() < 2 {
        return Err(MeasureError::TooFewSamples { len: distance.len() });
    }
    let mut intervals = Vec::new();
    let mut run_start: Option<usize> = None;
    for i in 0..distance.len() - 1 {
        let rising = distance[i + 1] > distance[i] + hysteresis;
        if rising && run_start.is_none() {
            run_start = Some(i);
        }
        if !rising && let Some(start) = run_start.take() {
            intervals.push(IncreaseInterval {
                t_start: times[start],
                t_end: times[i],
                delta_d: distance[i] - distance[start],
            });
        }
    }
    if let Some(start) = run_start {
        let last = distance.len() - 1;
        intervals.push(IncreaseInterval {
            t_start: times[start],
            t_end: times[last],
            delta_d: distance[last] - distance[start],
        });
    }
    Ok(intervals)
}

/// ΔD(θ, ξ): the difference of the trace distances at the end of the fiber
/// and the end of the delay, `D(t_f) − D(t₀)`, for the initial pair of pure
/// states at the given angles. This is the two-point quantity a tomography
/// measurement sees; it may be negative.
pub fn distance_gain(
    model: &ProcessModel,
    theta: PolarizationAngle,
    xi: PolarizationAngle,
) -> Result<f64, DynamicsError> {
    let rho1 = DensityMatrix::pure(theta);
    let rho2 = DensityMatrix::pure(xi);
    let d_at = |t: f64| -> Result<f64, DynamicsError> {
        let kappa = model.decoherence(t)?;
        Ok(trace_distance(&apply_decoherence(&rho1, kappa), &apply_decoherence(&rho2, kappa)))
    };
    Ok(d_at(model.final_time())? - d_at(model.delay_time())?)
}

/// Angle grid for the pair maximization: a coarse scan of
/// `[0°, 180°) × [0°, 180°)` followed by one refinement pass around the
/// best coarse cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairGrid {
    pub coarse_step_deg: f64,
    pub refine_step_deg: f64,
}

impl Default for PairGrid {
    fn default() -> Self {
        Self { coarse_step_deg: 5.0, refine_step_deg: 0.5 }
    }
}

impl PairGrid {
    fn validate(&self) -> Result<(), MeasureError> {
        let valid = self.coarse_step_deg > 0.0
            && self.coarse_step_deg <= 180.0
            && self.refine_step_deg > 0.0
            && self.coarse_step_deg.is_finite()
            && self.refine_step_deg.is_finite();
        if valid { Ok(()) } else { Err(MeasureError::EmptyGrid) }
    }
}

/// Result of the BLP maximization.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureResult {
    /// N(Φ): total trace-distance gain over the revival intervals of the
    /// maximizing pair.
    pub value: f64,
    pub best_pair: (PolarizationAngle, PolarizationAngle),
    pub intervals: Vec<IncreaseInterval>,
    /// Angle resolution of the final (refined) search grid, degrees.
    pub grid_resolution_deg: f64,
}

/// Evaluates the BLP measure: for every pair on the grid, samples
/// `D(ρ₁(t), ρ₂(t))` over the full process and sums the gains of its
/// revival intervals; returns the maximizing pair after refinement.
///
/// Ties break deterministically toward the lowest θ, then the lowest ξ, so
/// the result is independent of evaluation order.
pub fn blp_measure(
    model: &ProcessModel,
    grid: &PairGrid,
    time_step_ps: f64,
) -> Result<MeasureResult, MeasureError> {
    grid.validate()?;
    let times = time_grid(model, model.final_time(), time_step_ps)?;
    let kappas: Vec<_> = times
        .iter()
        .map(|&t| model.decoherence(t))
        .collect::<Result<_, _>>()
        .map_err(DynamicsError::from)?;

    // (gain, theta, xi); ties fall to the lexicographically smallest pair.
    let mut best: Option<(f64, f64, f64)> = None;
    fn consider(best: &mut Option<(f64, f64, f64)>, theta: f64, xi: f64, gain: f64) {
        let better = match *best {
            None => true,
            Some((g, bt, bx)) => gain > g || (gain == g && (theta, xi) < (bt, bx)),
        };
        if better {
            *best = Some((gain, theta, xi));
        }
    }

    let coarse_count = libm::ceil(180.0 / grid.coarse_step_deg - 1e-9) as usize;
    if coarse_count == 0 {
        return Err(MeasureError::EmptyGrid);
    }
    for i in 0..coarse_count {
        let theta = i as f64 * grid.coarse_step_deg;
        for j in 0..coarse_count {
            let xi = j as f64 * grid.coarse_step_deg;
            consider(&mut best, theta, xi, pair_gain(theta, xi, &kappas));
        }
    }
    let (_, coarse_theta, coarse_xi) = best.ok_or(MeasureError::EmptyGrid)?;

    // Refinement pass: one coarse cell in every direction around the best
    // coarse pair, wrapped into the 180° period of the state family.
    let span = (2.0 * grid.coarse_step_deg / grid.refine_step_deg) as usize;
    for i in 0..=span {
        let theta = wrap_180(coarse_theta - grid.coarse_step_deg + i as f64 * grid.refine_step_deg);
        for j in 0..=span {
            let xi = wrap_180(coarse_xi - grid.coarse_step_deg + j as f64 * grid.refine_step_deg);
            consider(&mut best, theta, xi, pair_gain(theta, xi, &kappas));
        }
    }

    let (value, theta, xi) = best.expect("grid verified non-empty");
    let distance = pair_distance_series(theta, xi, &kappas);
    let intervals = increase_intervals(&times, &distance, EXACT_HYSTERESIS)?;
    debug_assert!((intervals.iter().map(|iv| iv.delta_d).sum::<f64>() - value).abs() <= 1e-9);
    Ok(MeasureResult {
        value,
        best_pair: (PolarizationAngle::new(theta), PolarizationAngle::new(xi)),
        intervals,
        grid_resolution_deg: grid.refine_step_deg,
    })
}

fn wrap_180(deg: f64) -> f64 {
    let d = deg - 180.0 * libm::floor(deg / 180.0);
    if d >= 180.0 { 0.0 } else { d }
}

/// Total revival gain for one pair, streamed over the precomputed κ series.
fn pair_gain(theta_deg: f64, xi_deg: f64, kappas: &[num_complex::Complex64]) -> f64 {
    let rho1 = DensityMatrix::pure(PolarizationAngle::new(theta_deg));
    let rho2 = DensityMatrix::pure(PolarizationAngle::new(xi_deg));
    let mut gain = 0.0;
    let mut prev = f64::NAN;
    for &kappa in kappas {
        let d =
            trace_distance(&apply_decoherence(&rho1, kappa), &apply_decoherence(&rho2, kappa));
        if !prev.is_nan() && d > prev + EXACT_HYSTERESIS {
            gain += d - prev;
        }
        prev = d;
    }
    gain
}

fn pair_distance_series(
    theta_deg: f64,
    xi_deg: f64,
    kappas: &[num_complex::Complex64],
) -> Vec<f64> {
    let rho1 = DensityMatrix::pure(PolarizationAngle::new(theta_deg));
    let rho2 = DensityMatrix::pure(PolarizationAngle::new(xi_deg));
    kappas
        .iter()
        .map(|&kappa| {
            trace_distance(&apply_decoherence(&rho1, kappa), &apply_decoherence(&rho2, kappa))
        })
        .collect()
}
