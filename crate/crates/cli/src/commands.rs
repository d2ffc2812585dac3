//! The five analysis commands. Each builds its inputs from the validated
//! config, writes its artifacts into the output directory, and finishes
//! with a manifest of content hashes.

use std::path::Path;

use backflow_core::experiment::{
    FitError, distance_gain_ensemble, fit_coherence_time, fit_spectrum, range_inclusive,
    sweep_angles, sweep_delay, sweep_delay_noisy,
};
use backflow_core::{PairGrid, PolarizationAngle, blp_measure, trace_distance_trajectory};
use serde_json::json;

use crate::CliError;
use crate::config::RunConfig;
use crate::output::{RunWriter, read_csv_columns};

fn pair(config: &RunConfig) -> (PolarizationAngle, PolarizationAngle) {
    (
        PolarizationAngle::new(config.pair.theta_deg),
        PolarizationAngle::new(config.pair.xi_deg),
    )
}

pub fn cmd_trajectory(config: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    let model = config.model()?;
    let (theta, xi) = pair(config);
    let step = config.resolved_time_step(config.trajectory.time_step_ps, &model);
    let traj = trace_distance_trajectory(
        &model,
        &backflow_core::DensityMatrix::pure(theta),
        &backflow_core::DensityMatrix::pure(xi),
        step,
    )
    .map_err(|e| CliError::Compute(e.to_string()))?;

    let mut writer = RunWriter::new(out_dir, "trajectory")?;
    let rows = traj
        .times()
        .iter()
        .zip(traj.distance())
        .zip(traj.rate())
        .map(|((&t, &d), &sigma)| -> Result<Vec<f64>, CliError> {
            let kappa =
                model.decoherence(t).map_err(|e| CliError::Compute(e.to_string()))?;
            let gamma = model.decay_rate(t).map_err(|e| CliError::Compute(e.to_string()))?;
            Ok(vec![t, d, sigma, kappa.norm(), gamma])
        })
        .collect::<Result<Vec<_>, _>>()?;
    writer.write_csv(
        "trajectory.csv",
        &["t_ps", "D", "sigma", "abs_kappa", "gamma"],
        rows.into_iter(),
    )?;
    writer.finish(config)
}

pub fn cmd_sweep_delay(config: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    let model = config.model()?; // validates spectrum + setup up front
    let section = &config.sweep_delay;
    let x0s = range_inclusive(section.x0_start_mm, section.x0_stop_mm, section.x0_step_mm);
    if x0s.is_empty() {
        return Err(CliError::Config("sweep_delay: empty x0 range".into()));
    }
    let (theta, xi) = pair(config);
    let spectrum = *model.spectrum();
    let base = *model.params();

    let mut writer = RunWriter::new(out_dir, "sweep-delay")?;
    if section.noise {
        let counting = config.counting()?;
        let table = sweep_delay_noisy(&spectrum, &base, &x0s, theta, xi, &counting)
            .map_err(|e| CliError::Compute(e.to_string()))?;
        writer.write_csv(
            "sweep_delay.csv",
            &["x0_mm", "delta_D", "D_tf", "delta_D_corrected", "D_tf_corrected"],
            table.iter().map(|p| {
                vec![p.x0_mm, p.delta_d_raw, p.d_tf_raw, p.delta_d_corrected, p.d_tf_corrected]
            }),
        )?;

        // Monte Carlo ΔD summary at the configured base delay.
        let ensemble =
            distance_gain_ensemble(&model, theta, xi, &counting, section.ensemble_trials)
                .map_err(|e| CliError::Compute(e.to_string()))?;
        writer.write_json(
            "delta_d_ensemble.json",
            &json!({
                "n_trials": ensemble.n_trials,
                "seed": ensemble.seed,
                "theory_delta_D": ensemble.theory_gain,
                "raw": { "mean": ensemble.raw.mean, "std": ensemble.raw.std_dev },
                "corrected": {
                    "mean": ensemble.corrected.mean,
                    "std": ensemble.corrected.std_dev,
                },
                "positivity_projections": ensemble.positivity_projections,
            }),
        )?;
    } else {
        let table = sweep_delay(&spectrum, &base, &x0s, theta, xi)
            .map_err(|e| CliError::Compute(e.to_string()))?;
        writer.write_csv(
            "sweep_delay.csv",
            &["x0_mm", "delta_D", "D_tf"],
            table.iter().map(|p| vec![p.x0_mm, p.delta_d, p.d_tf]),
        )?;
    }
    writer.finish(config)
}

pub fn cmd_sweep_angles(config: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    let model = config.model()?;
    let section = &config.sweep_angles;
    let thetas =
        range_inclusive(section.theta_start_deg, section.theta_stop_deg, section.theta_step_deg);
    let xis = range_inclusive(section.xi_start_deg, section.xi_stop_deg, section.xi_step_deg);
    if thetas.is_empty() || xis.is_empty() {
        return Err(CliError::Config("sweep_angles: empty angle grid".into()));
    }
    let sweep =
        sweep_angles(&model, &thetas, &xis).map_err(|e| CliError::Compute(e.to_string()))?;

    let mut writer = RunWriter::new(out_dir, "sweep-angles")?;
    let mut columns: Vec<String> = vec!["theta_deg".into()];
    columns.extend(sweep.xi_deg.iter().map(|xi| format!("xi_{xi}")));
    let column_refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    writer.write_csv(
        "sweep_angles.csv",
        &column_refs,
        sweep.theta_deg.iter().zip(&sweep.gain).map(|(&theta, row)| {
            let mut out = Vec::with_capacity(row.len() + 1);
            out.push(theta);
            out.extend_from_slice(row);
            out
        }),
    )?;
    writer.write_json(
        "sweep_angles.json",
        &json!({
            "argmax_theta_deg": sweep.argmax.0,
            "argmax_xi_deg": sweep.argmax.1,
            "max_delta_D": sweep.max_gain,
        }),
    )?;
    writer.finish(config)
}

pub fn cmd_measure(config: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    let model = config.model()?;
    let section = &config.measure;
    let grid = PairGrid {
        coarse_step_deg: section.coarse_step_deg,
        refine_step_deg: section.refine_step_deg,
    };
    let step = config.resolved_time_step(section.time_step_ps, &model);
    let result =
        blp_measure(&model, &grid, step).map_err(|e| CliError::Compute(e.to_string()))?;

    let intervals: Vec<_> = result
        .intervals
        .iter()
        .map(|iv| {
            json!({
                "t_start_ps": iv.t_start,
                "t_end_ps": iv.t_end,
                "delta_D": iv.delta_d,
            })
        })
        .collect();
    let mut writer = RunWriter::new(out_dir, "measure")?;
    writer.write_json(
        "measure.json",
        &json!({
            "value": result.value,
            "best_theta_deg": result.best_pair.0.degrees(),
            "best_xi_deg": result.best_pair.1.degrees(),
            "intervals": intervals,
            "grid_resolution_deg": result.grid_resolution_deg,
        }),
    )?;
    writer.finish(config)
}

pub fn cmd_fit(
    config: &RunConfig,
    out_dir: &Path,
    data: &Path,
    spectrum_mode: bool,
) -> Result<(), CliError> {
    let outcome = if spectrum_mode {
        let samples = read_csv_columns(data, "lambda_nm", "intensity")?;
        fit_spectrum(&samples)
    } else {
        let points = read_csv_columns(data, "x0_mm", "D_tf")?;
        fit_coherence_time(&points)
    };

    let mut writer = RunWriter::new(out_dir, "fit")?;
    match outcome {
        Ok(fit) => {
            writer.write_json(
                "fit.json",
                &json!({
                    "failed": false,
                    "inv_delta_omega_ps": fit.inv_delta_omega_ps,
                    "std_error_ps": fit.std_error_ps,
                    "residual_norm": fit.residual_norm,
                }),
            )?;
            writer.finish(config)
        }
        // Nonphysical or ill-posed optima produce a diagnostic artifact and
        // a computation-error exit; malformed inputs fail above as config
        // errors.
        Err(err @ (FitError::NonPhysical { .. } | FitError::Singular)) => {
            writer.write_json(
                "fit.json",
                &json!({ "failed": true, "reason": err.to_string() }),
            )?;
            writer.finish(config)?;
            Err(CliError::Compute(format!("fit failed: {err}")))
        }
        Err(err) => Err(CliError::Config(format!("fit input: {err}"))),
    }
}
