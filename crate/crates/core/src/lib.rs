//! Simulation and analysis of a non-Markovian pure-dephasing process for a
//! polarization qubit.
//!
//! A single photon's polarization state dephases through two stages: a
//! variable delay line and a polarization-maintaining fiber whose
//! birefringence partially rewinds the dephasing. This crate provides
//!
//! - exact 2×2 density-matrix algebra ([`qubit`]),
//! - the staged decoherence process with its decoherence function, decay
//!   rate, and energy shift in closed form plus an independent quadrature
//!   route ([`process`]),
//! - the dynamical map and a fixed-step master-equation integrator
//!   ([`dynamics`]),
//! - trace-distance revival detection and the BLP non-Markovianity measure
//!   ([`measure`]),
//! - synthetic measurement chains: delay/angle sweeps, photon-counting
//!   tomography with dark-count correction, and coherence-time curve
//!   fitting ([`experiment`]).
//!
//! The crate is `no_std` (with `alloc`); all I/O lives in the companion CLI
//! crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod dynamics;
pub mod experiment;
pub mod measure;
mod numeric;
pub mod process;
pub mod qubit;

pub use dynamics::{DistanceTrajectory, Trajectory, apply_decoherence, apply_map,
                   integrate_master_equation, time_grid, trace_distance_trajectory};
pub use measure::{IncreaseInterval, MeasureResult, PairGrid, blp_measure, distance_gain,
                  increase_intervals};
pub use process::{ExperimentParams, ProcessModel, SPEED_OF_LIGHT_MM_PER_PS, Spectrum,
                  decoherence_quadrature};
pub use qubit::{DensityMatrix, PolarizationAngle, trace_distance};
