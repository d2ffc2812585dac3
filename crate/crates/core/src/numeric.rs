//! Small numerical routines shared across the crate: adaptive Simpson
//! quadrature, the sine integral, and deterministic seed derivation.

use num_complex::Complex64 as C64;

/// Adaptive Simpson quadrature for a complex-valued integrand.
///
/// The interval is first split into `min_panels` uniform panels so that an
/// oscillatory integrand cannot alias through the coarse error estimate;
/// each panel is then refined recursively until its contribution to the
/// absolute error estimate is below its share of `abs_tol`.
pub(crate) fn integrate_complex<F>(f: &F, a: f64, b: f64, abs_tol: f64, min_panels: usize) -> C64
where
    F: Fn(f64) -> C64,
{
    let n = min_panels.max(1);
    let h = (b - a) / n as f64;
    let panel_tol = abs_tol / n as f64;
    let mut total = C64::new(0.0, 0.0);
    for i in 0..n {
        let left = a + i as f64 * h;
        let right = if i == n - 1 { b } else { left + h };
        let mid = 0.5 * (left + right);
        let (fl, fm, fr) = (f(left), f(mid), f(right));
        let whole = simpson(left, right, fl, fm, fr);
        total += adapt(f, left, right, fl, fm, fr, whole, panel_tol, 48);
    }
    total
}

fn simpson(a: f64, b: f64, fa: C64, fm: C64, fb: C64) -> C64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt<F>(f: &F, a: f64, b: f64, fa: C64, fm: C64, fb: C64, whole: C64, tol: f64, depth: u32) -> C64
where
    F: Fn(f64) -> C64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let refined = left + right;
    let err = (refined - whole).norm();
    if depth == 0 || err <= 15.0 * tol {
        // Richardson extrapolation of the two estimates
        refined + (refined - whole) / 15.0
    } else {
        adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Sine integral `Si(x) = ∫₀ˣ sin(s)/s ds` for `x ≥ 0`.
///
/// Power series below the crossover, asymptotic expansion of the auxiliary
/// functions above it; both branches are accurate to better than 1e-7 near
/// the crossover and improve away from it.
pub(crate) fn sine_integral(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    const CROSSOVER: f64 = 20.0;
    if x < CROSSOVER {
        // Si(x) = Σ (-1)^k x^(2k+1) / ((2k+1)·(2k+1)!)
        let x2 = x * x;
        let mut term = x; // x^(2k+1)/(2k+1)!, starting at k = 0
        let mut sum = x;
        for k in 1..=60u32 {
            let n = (2 * k + 1) as f64;
            term *= -x2 / ((n - 1.0) * n);
            let summand = term / n;
            sum += summand;
            if summand.abs() < 1e-17 * sum.abs().max(1.0) {
                break;
            }
        }
        sum
    } else {
        // Si(x) = π/2 − f(x)cos(x) − g(x)sin(x)
        let inv2 = 1.0 / (x * x);
        let f = (1.0 - inv2 * (2.0 - inv2 * (24.0 - inv2 * 720.0))) / x;
        let g = (1.0 - inv2 * (6.0 - inv2 * (120.0 - inv2 * 5040.0))) * inv2;
        let (s, c) = libm::sincos(x);
        core::f64::consts::FRAC_PI_2 - f * c - g * s
    }
}

/// Derives a per-trial seed from a master seed and a trial index
/// (SplitMix64 finalizer), so that Monte Carlo trials are reproducible and
/// independent of evaluation order.
pub(crate) fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
