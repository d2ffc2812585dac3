//! Nonlinear least-squares extraction of the coherence time 1/δω, from the
//! final-trace-distance curve over delay length or from a measured
//! wavelength spectrum. Damped (Levenberg-Marquardt style) normal
//! equations with analytic Jacobians; deterministic, no random restarts.

use alloc::vec::Vec;
use core::fmt;

use crate::process::SPEED_OF_LIGHT_MM_PER_PS;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitError {
    /// Need at least one more point than parameters.
    TooFewPoints { len: usize, needed: usize },
    /// Inputs violate the model preconditions (named in the reason).
    InvalidData { reason: &'static str },
    /// All abscissas coincide; the model is unidentifiable.
    DegenerateAbscissas,
    /// The normal equations became singular.
    Singular,
    /// The optimum has a non-positive width parameter.
    NonPhysical { inv_delta_omega_ps: f64 },
}

impl fmt::Display for FitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TooFewPoints { len, needed } => {
                write!(f, "need at least {needed} data points, got {len}")
            }
            Self::InvalidData { reason } => write!(f, "invalid fit data: {reason}"),
            Self::DegenerateAbscissas => write!(f, "all abscissas equal; nothing to fit"),
            Self::Singular => write!(f, "normal equations singular"),
            Self::NonPhysical { inv_delta_omega_ps } => {
                write!(f, "fitted width is non-physical: 1/delta_omega = {inv_delta_omega_ps} ps")
            }
        }
    }
}

impl core::error::Error for FitError {}

/// Fitted coherence time with its covariance-based uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    /// 1/δω in ps.
    pub inv_delta_omega_ps: f64,
    /// One-sigma standard error of `inv_delta_omega_ps`, from the residual
    /// variance and the Jacobian at the optimum.
    pub std_error_ps: f64,
    /// Euclidean norm of the residual vector at the optimum.
    pub residual_norm: f64,
}

struct LmOutcome<const P: usize> {
    params: [f64; P],
    ssr: f64,
    /// (JᵀJ)⁻¹ at the optimum, undamped.
    jtj_inv: [[f64; P]; P],
    n_points: usize,
}

/// Solves `A x = b` for small `P` by Gaussian elimination with partial
/// pivoting.
fn solve<const P: usize>(mut a: [[f64; P]; P], mut b: [f64; P]) -> Option<[f64; P]> {
    for col in 0..P {
        let pivot = (col..P).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..P {
            let factor = a[row][col] / a[col][col];
            for k in col..P {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; P];
    for col in (0..P).rev() {
        let mut acc = b[col];
        for k in col + 1..P {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}

fn invert<const P: usize>(a: [[f64; P]; P]) -> Option<[[f64; P]; P]> {
    let mut inv = [[0.0; P]; P];
    for col in 0..P {
        let mut e = [0.0; P];
        e[col] = 1.0;
        let column = solve(a, e)?;
        for row in 0..P {
            inv[row][col] = column[row];
        }
    }
    Some(inv)
}

/// Damped least squares on `P` parameters. `eval(params, i)` returns the
/// i-th residual and its gradient.
fn levenberg_marquardt<const P: usize, F>(
    eval: &F,
    n_points: usize,
    init: [f64; P],
) -> Result<LmOutcome<P>, FitError>
where
    F: Fn(&[f64; P], usize) -> (f64, [f64; P]),
{
    let ssr_of = |params: &[f64; P]| -> Result<f64, FitError> {
        let mut ssr = 0.0;
        for i in 0..n_points {
            let (r, _) = eval(params, i);
            if !r.is_finite() {
                return Err(FitError::InvalidData { reason: "non-finite residual" });
            }
            ssr += r * r;
        }
        Ok(ssr)
    };

    let mut params = init;
    let mut ssr = ssr_of(&params)?;
    let mut damping = 1e-3;
    for _ in 0..200 {
        let mut jtj = [[0.0; P]; P];
        let mut jtr = [0.0; P];
        for i in 0..n_points {
            let (r, grad) = eval(&params, i);
            for a in 0..P {
                jtr[a] += grad[a] * r;
                for b in 0..P {
                    jtj[a][b] += grad[a] * grad[b];
                }
            }
        }
        let mut improved = false;
        for _ in 0..40 {
            let mut damped = jtj;
            for d in 0..P {
                damped[d][d] += damping * jtj[d][d].max(1e-300);
            }
            let Some(step) = solve(damped, jtr.map(|v| -v)) else {
                return Err(FitError::Singular);
            };
            let mut trial = params;
            for d in 0..P {
                trial[d] += step[d];
            }
            let trial_ssr = ssr_of(&trial)?;
            if trial_ssr < ssr {
                let step_small = step
                    .iter()
                    .zip(&params)
                    .all(|(s, p)| s.abs() <= 1e-12 * (1.0 + p.abs()));
                let ssr_small = ssr - trial_ssr <= 1e-15 * ssr.max(1e-300);
                params = trial;
                ssr = trial_ssr;
                damping = (damping / 3.0).max(1e-12);
                improved = true;
                if step_small || ssr_small {
                    let jtj_inv = invert(jtj).ok_or(FitError::Singular)?;
                    return Ok(LmOutcome { params, ssr, jtj_inv, n_points });
                }
                break;
            }
            damping *= 10.0;
            if damping > 1e14 {
                // Cannot improve further at any damping: converged.
                let jtj_inv = invert(jtj).ok_or(FitError::Singular)?;
                return Ok(LmOutcome { params, ssr, jtj_inv, n_points });
            }
        }
        if !improved {
            break;
        }
    }
    // Max iterations: report the best point found.
    let mut jtj = [[0.0; P]; P];
    for i in 0..n_points {
        let (_, grad) = eval(&params, i);
        for a in 0..P {
            for b in 0..P {
                jtj[a][b] += grad[a] * grad[b];
            }
        }
    }
    let jtj_inv = invert(jtj).ok_or(FitError::Singular)?;
    Ok(LmOutcome { params, ssr, jtj_inv, n_points })
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Residual variance scale for parameter uncertainties.
fn sigma_sq<const P: usize>(out: &LmOutcome<P>) -> f64 {
    if out.n_points > P { out.ssr / (out.n_points - P) as f64 } else { 0.0 }
}

/// Fits `D(x₀) = exp(−δω |m − 2 x₀| / c)` over (δω, m = Δn·l) to a set of
/// `(x0_mm, D_tf)` points and returns the coherence time 1/δω.
///
/// Initialization is deterministic: `m` from the abscissa of the largest
/// ordinate, δω from the log-slope between the points farthest from and
/// closest to the peak.
pub fn fit_coherence_time(points: &[(f64, f64)]) -> Result<FitResult, FitError> {
    if points.len() < 3 {
        return Err(FitError::TooFewPoints { len: points.len(), needed: 3 });
    }
    for &(x, y) in points {
        if !x.is_finite() || !y.is_finite() {
            return Err(FitError::InvalidData { reason: "non-finite point" });
        }
        if y <= 0.0 || y > 1.0 + 1e-9 {
            return Err(FitError::InvalidData { reason: "D_tf must lie in (0, 1]" });
        }
    }
    let x_min = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let x_max = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if x_max - x_min <= 0.0 {
        return Err(FitError::DegenerateAbscissas);
    }

    let c = SPEED_OF_LIGHT_MM_PER_PS;
    let peak = points.iter().max_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty");
    let m0 = 2.0 * peak.0;
    let u_of = |m: f64, x: f64| (m - 2.0 * x).abs() / c;
    let far = points
        .iter()
        .max_by(|a, b| u_of(m0, a.0).total_cmp(&u_of(m0, b.0)))
        .expect("non-empty");
    let du = u_of(m0, far.0) - u_of(m0, peak.0);
    let d_log = libm::log(peak.1) - libm::log(far.1);
    let dw0 = if du > 0.0 && d_log > 0.0 { d_log / du } else { 1e-2 };

    let eval = |params: &[f64; 2], i: usize| -> (f64, [f64; 2]) {
        let [dw, m] = *params;
        let (x, y) = points[i];
        let u = (m - 2.0 * x).abs() / c;
        let model = libm::exp(-dw * u);
        (model - y, [-u * model, -dw * sign(m - 2.0 * x) / c * model])
    };
    let out = levenberg_marquardt(&eval, points.len(), [dw0, m0])?;
    let dw = out.params[0];
    if !(dw > 0.0) || !dw.is_finite() {
        return Err(FitError::NonPhysical { inv_delta_omega_ps: 1.0 / dw });
    }
    // Var(1/δω) = Var(δω)/δω⁴.
    let var_dw = sigma_sq(&out) * out.jtj_inv[0][0].max(0.0);
    Ok(FitResult {
        inv_delta_omega_ps: 1.0 / dw,
        std_error_ps: libm::sqrt(var_dw) / (dw * dw),
        residual_norm: libm::sqrt(out.ssr),
    })
}

/// Fits a Lorentzian to a measured intensity spectrum sampled against
/// wavelength, after the change of variables ω = 2πc/λ, and returns the
/// width as a coherence time 1/δω. The overall intensity scale is a free
/// parameter.
pub fn fit_spectrum(samples: &[(f64, f64)]) -> Result<FitResult, FitError> {
    if samples.len() < 4 {
        return Err(FitError::TooFewPoints { len: samples.len(), needed: 4 });
    }
    for &(lambda, intensity) in samples {
        if !(lambda > 0.0) || !lambda.is_finite() || !intensity.is_finite() {
            return Err(FitError::InvalidData { reason: "wavelengths must be positive" });
        }
        if intensity < 0.0 {
            return Err(FitError::InvalidData { reason: "intensities must be >= 0" });
        }
    }
    let points: Vec<(f64, f64)> = samples
        .iter()
        .map(|&(lambda_nm, i)| {
            (crate::process::Spectrum::omega_from_wavelength_nm(lambda_nm), i)
        })
        .collect();
    let w_min = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let w_max = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if w_max - w_min <= 0.0 {
        return Err(FitError::DegenerateAbscissas);
    }
    let peak = points.iter().max_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty");
    if peak.1 <= 0.0 {
        return Err(FitError::InvalidData { reason: "all intensities are zero" });
    }

    // Half-maximum crossings bracket the initial width.
    let half = 0.5 * peak.1;
    let mut dw0 = (w_max - w_min) / 10.0;
    let above: Vec<f64> =
        points.iter().filter(|p| p.1 >= half).map(|p| (p.0 - peak.0).abs()).collect();
    if let Some(spread) = above.iter().copied().fold(None::<f64>, |acc, v| {
        Some(acc.map_or(v, |a| a.max(v)))
    }) && spread > 0.0
    {
        dw0 = spread;
    }
    let a0 = peak.1 * core::f64::consts::PI * dw0;

    let eval = |params: &[f64; 3], i: usize| -> (f64, [f64; 3]) {
        let [a, w0, dw] = *params;
        let (w, y) = points[i];
        let u = w - w0;
        let denom = u * u + dw * dw;
        let shape = dw / (core::f64::consts::PI * denom);
        let model = a * shape;
        (
            model - y,
            [
                shape,
                a * dw * 2.0 * u / (core::f64::consts::PI * denom * denom),
                a * (u * u - dw * dw) / (core::f64::consts::PI * denom * denom),
            ],
        )
    };
    let out = levenberg_marquardt(&eval, points.len(), [a0, peak.0, dw0])?;
    let dw = out.params[2];
    if !(dw > 0.0) || !dw.is_finite() {
        return Err(FitError::NonPhysical { inv_delta_omega_ps: 1.0 / dw });
    }
    let var_dw = sigma_sq(&out) * out.jtj_inv[2][2].max(0.0);
    Ok(FitResult {
        inv_delta_omega_ps: 1.0 / dw,
        std_error_ps: libm::sqrt(var_dw) / (dw * dw),
        residual_norm: libm::sqrt(out.ssr),
    })
}
