//! The staged decoherence process: a polarization-dependent delay followed
//! by a birefringent fiber.
//!
//! The environment is the photon's frequency distribution, a Lorentzian of
//! half width `delta_omega` centered on `omega0`. Tracing it out leaves a
//! pure dephasing channel whose decoherence function is known in closed form
//! for both stages. During the delay the coherences decay exponentially; in
//! the fiber the birefringence rewinds the accumulated dephasing, so the
//! effective dephasing time runs backwards at rate `delta_n / n_bar` and the
//! decay rate of the master equation turns negative. If the fiber is long
//! enough the rewind passes through zero (full recoherence) and dephasing
//! resumes with a positive rate.
//!
//! Units: times in ps, rates in 1/ps, angular frequencies in rad/ps, delay
//! lengths in mm, fiber lengths in m.

use core::f64::consts::TAU;
use core::fmt;

use num_complex::Complex64 as C64;

use crate::numeric::{integrate_complex, sine_integral};

/// Speed of light in mm/ps.
pub const SPEED_OF_LIGHT_MM_PER_PS: f64 = 0.299792458;

/// Half width of the quadrature window in units of `delta_omega`.
const QUADRATURE_WINDOW_WIDTHS: f64 = 200.0;
/// Absolute tolerance of the adaptive quadrature.
const QUADRATURE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelError {
    /// Spectrum width must be positive.
    NonPositiveWidth { delta_omega: f64 },
    /// Delay length must be non-negative and finite.
    InvalidDelay { x0_mm: f64 },
    /// Fiber length must be non-negative and finite.
    InvalidFiberLength { fiber_length_m: f64 },
    /// Birefringence must satisfy `0 < delta_n < n_bar`.
    InvalidBirefringence { delta_n: f64, n_bar: f64 },
    /// Time outside the process domain `[0, t_f]`.
    OutOfDomain { t: f64, t_final: f64 },
    /// The decay rate and energy shift are undefined exactly at a stage
    /// breakpoint; evaluate one-sided instead.
    Breakpoint { t: f64 },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NonPositiveWidth { delta_omega } => {
                write!(f, "spectrum width must be positive, got {delta_omega}")
            }
            Self::InvalidDelay { x0_mm } => {
                write!(f, "delay length must be finite and >= 0, got {x0_mm} mm")
            }
            Self::InvalidFiberLength { fiber_length_m } => {
                write!(f, "fiber length must be finite and >= 0, got {fiber_length_m} m")
            }
            Self::InvalidBirefringence { delta_n, n_bar } => {
                write!(f, "birefringence must satisfy 0 < delta_n < n_bar, got delta_n = {delta_n}, n_bar = {n_bar}")
            }
            Self::OutOfDomain { t, t_final } => {
                write!(f, "time {t} ps outside the process domain [0, {t_final}] ps")
            }
            Self::Breakpoint { t } => {
                write!(f, "rate undefined exactly at stage breakpoint t = {t} ps")
            }
        }
    }
}

impl core::error::Error for ModelError {}

/// Lorentzian frequency distribution of the photon,
/// `G(ω) = (δω/π) / ((ω − ω₀)² + δω²)`, normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spectrum {
    omega0: f64,
    delta_omega: f64,
}

impl Spectrum {
    /// `omega0`: central angular frequency (rad/ps); `delta_omega`: half
    /// width at half maximum (rad/ps), so the FWHM is `2 * delta_omega`.
    pub fn new(omega0: f64, delta_omega: f64) -> Result<Self, ModelError> {
        if !(delta_omega > 0.0) || !delta_omega.is_finite() {
            return Err(ModelError::NonPositiveWidth { delta_omega });
        }
        Ok(Self { omega0, delta_omega })
    }

    /// Builds the spectrum from the coherence time `1/δω` in ps.
    pub fn from_coherence_time(inv_delta_omega_ps: f64, omega0: f64) -> Result<Self, ModelError> {
        if !(inv_delta_omega_ps > 0.0) || !inv_delta_omega_ps.is_finite() {
            return Err(ModelError::NonPositiveWidth { delta_omega: inv_delta_omega_ps });
        }
        Self::new(omega0, 1.0 / inv_delta_omega_ps)
    }

    /// Angular frequency (rad/ps) of light with the given vacuum wavelength.
    pub fn omega_from_wavelength_nm(lambda_nm: f64) -> f64 {
        TAU * SPEED_OF_LIGHT_MM_PER_PS / (lambda_nm * 1e-6)
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn delta_omega(&self) -> f64 {
        self.delta_omega
    }

    /// Coherence time `1/δω` in ps.
    pub fn coherence_time(&self) -> f64 {
        1.0 / self.delta_omega
    }

    /// The spectral density `G(ω)`.
    pub fn density(&self, omega: f64) -> f64 {
        let u = omega - self.omega0;
        self.delta_omega / (core::f64::consts::PI * (u * u + self.delta_omega * self.delta_omega))
    }
}

/// Geometry and material parameters of the two evolution stages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentParams {
    x0_mm: f64,
    fiber_length_m: f64,
    delta_n: f64,
    n_bar: f64,
}

impl ExperimentParams {
    /// `x0_mm`: maximal delay length; `fiber_length_m`: fiber length;
    /// `delta_n`: real birefringence; `n_bar`: mean refractive index.
    ///
    /// A zero fiber length gives the delay-only (Markovian) process.
    pub fn new(
        x0_mm: f64,
        fiber_length_m: f64,
        delta_n: f64,
        n_bar: f64,
    ) -> Result<Self, ModelError> {
        if !x0_mm.is_finite() || x0_mm < 0.0 {
            return Err(ModelError::InvalidDelay { x0_mm });
        }
        if !fiber_length_m.is_finite() || fiber_length_m < 0.0 {
            return Err(ModelError::InvalidFiberLength { fiber_length_m });
        }
        if !(delta_n > 0.0 && delta_n < n_bar) || !delta_n.is_finite() || !n_bar.is_finite() {
            return Err(ModelError::InvalidBirefringence { delta_n, n_bar });
        }
        Ok(Self { x0_mm, fiber_length_m, delta_n, n_bar })
    }

    pub fn x0_mm(&self) -> f64 {
        self.x0_mm
    }

    pub fn fiber_length_m(&self) -> f64 {
        self.fiber_length_m
    }

    pub fn delta_n(&self) -> f64 {
        self.delta_n
    }

    pub fn n_bar(&self) -> f64 {
        self.n_bar
    }

    /// Returns a copy with a different delay length (for delay sweeps).
    pub fn with_x0_mm(&self, x0_mm: f64) -> Result<Self, ModelError> {
        Self::new(x0_mm, self.fiber_length_m, self.delta_n, self.n_bar)
    }

    /// End of the delay stage, `t₀ = 2 x₀ / c` (ps).
    pub fn delay_time(&self) -> f64 {
        2.0 * self.x0_mm / SPEED_OF_LIGHT_MM_PER_PS
    }

    /// Time at which the fiber has rewound the delay dephasing completely
    /// and the decay rate flips sign: `t₁ = (1 + n̄/Δn) t₀` (ps).
    pub fn sign_flip_time(&self) -> f64 {
        (1.0 + self.n_bar / self.delta_n) * self.delay_time()
    }

    /// Termination time of the process (photon exits the fiber):
    /// `t_f = t₀ + l n̄ / c` (ps).
    pub fn final_time(&self) -> f64 {
        self.delay_time() + self.fiber_transit_time()
    }

    /// Time spent in the fiber, `l n̄ / c` (ps).
    pub fn fiber_transit_time(&self) -> f64 {
        self.fiber_length_m * 1e3 * self.n_bar / SPEED_OF_LIGHT_MM_PER_PS
    }

    /// Delay at which the fiber exactly compensates the delay-stage
    /// dephasing, `x₀ = Δn l / 2` (mm).
    pub fn compensation_delay_mm(&self) -> f64 {
        0.5 * self.delta_n * self.fiber_length_m * 1e3
    }
}

/// Side from which to take a one-sided limit at a stage breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Below,
    Above,
}

/// Stage piece of the piecewise-constant master-equation coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Piece {
    Delay,
    FiberRewind,
    FiberDephase,
}

/// The full two-stage decoherence process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessModel {
    spectrum: Spectrum,
    params: ExperimentParams,
}

impl ProcessModel {
    pub fn new(spectrum: Spectrum, params: ExperimentParams) -> Self {
        Self { spectrum, params }
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn params(&self) -> &ExperimentParams {
        &self.params
    }

    pub fn delay_time(&self) -> f64 {
        self.params.delay_time()
    }

    pub fn sign_flip_time(&self) -> f64 {
        self.params.sign_flip_time()
    }

    pub fn final_time(&self) -> f64 {
        self.params.final_time()
    }

    /// Breakpoints of the piecewise decay rate inside `(0, t_f)`: the stage
    /// boundary `t₀`, and the sign-flip time `t₁` when the fiber is long
    /// enough to reach it.
    pub fn breakpoints(&self) -> (f64, Option<f64>) {
        let t0 = self.delay_time();
        let t1 = self.sign_flip_time();
        let interior = t0 < t1 && t1 < self.final_time();
        (t0, interior.then_some(t1))
    }

    fn check_domain(&self, t: f64) -> Result<(), ModelError> {
        let t_final = self.final_time();
        if !t.is_finite() || t < 0.0 || t > t_final {
            return Err(ModelError::OutOfDomain { t, t_final });
        }
        Ok(())
    }

    /// Effective dephasing time: `t` during the delay stage, then rewound
    /// by the fiber at rate `Δn/n̄`.
    fn effective_time(&self, t: f64) -> f64 {
        let t0 = self.delay_time();
        if t < t0 {
            t
        } else {
            t0 - self.params.delta_n / self.params.n_bar * (t - t0)
        }
    }

    /// The decoherence function κ(t) multiplying the coherences of the
    /// dynamical map. `κ(0) = 1` and `|κ(t)| ≤ 1` throughout.
    pub fn decoherence(&self, t: f64) -> Result<C64, ModelError> {
        self.check_domain(t)?;
        let tau = self.effective_time(t);
        let (s, c) = libm::sincos(self.spectrum.omega0 * tau);
        let magnitude = libm::exp(-self.spectrum.delta_omega * tau.abs());
        Ok(C64::new(magnitude * c, magnitude * s))
    }

    fn piece(&self, t: f64, side: Side) -> Piece {
        let t0 = self.delay_time();
        let (_, t1_interior) = self.breakpoints();
        if t < t0 || (t == t0 && side == Side::Below) {
            return Piece::Delay;
        }
        match t1_interior {
            Some(t1) if t > t1 || (t == t1 && side == Side::Above) => Piece::FiberDephase,
            _ => Piece::FiberRewind,
        }
    }

    fn is_breakpoint(&self, t: f64) -> bool {
        let (t0, t1) = self.breakpoints();
        t == t0 || t1 == Some(t)
    }

    /// Dephasing rate γ(t) of the master equation (1/ps), piecewise
    /// constant: `δω` during the delay, `−δω Δn/n̄` while the fiber rewinds
    /// the dephasing, `+δω Δn/n̄` after full recoherence.
    ///
    /// Undefined exactly at the breakpoints `t₀` and `t₁`; use
    /// [`Self::decay_rate_one_sided`] there.
    pub fn decay_rate(&self, t: f64) -> Result<f64, ModelError> {
        self.check_domain(t)?;
        if self.is_breakpoint(t) {
            return Err(ModelError::Breakpoint { t });
        }
        Ok(self.decay_rate_of(self.piece(t, Side::Below)))
    }

    /// One-sided evaluation of γ, defined at breakpoints.
    pub fn decay_rate_one_sided(&self, t: f64, side: Side) -> Result<f64, ModelError> {
        self.check_domain(t)?;
        Ok(self.decay_rate_of(self.piece(t, side)))
    }

    fn decay_rate_of(&self, piece: Piece) -> f64 {
        let dw = self.spectrum.delta_omega;
        let ratio = self.params.delta_n / self.params.n_bar;
        match piece {
            Piece::Delay => dw,
            Piece::FiberRewind => -dw * ratio,
            Piece::FiberDephase => dw * ratio,
        }
    }

    /// Energy shift ε(t) of the master equation (rad/ps): the rate of change
    /// of the κ phase, `ω₀` during the delay and `−ω₀ Δn/n̄` in the fiber.
    ///
    /// Undefined exactly at breakpoints, like [`Self::decay_rate`].
    pub fn energy_shift(&self, t: f64) -> Result<f64, ModelError> {
        self.check_domain(t)?;
        if self.is_breakpoint(t) {
            return Err(ModelError::Breakpoint { t });
        }
        Ok(self.energy_shift_of(self.piece(t, Side::Below)))
    }

    /// One-sided evaluation of ε, defined at breakpoints.
    pub fn energy_shift_one_sided(&self, t: f64, side: Side) -> Result<f64, ModelError> {
        self.check_domain(t)?;
        Ok(self.energy_shift_of(self.piece(t, side)))
    }

    fn energy_shift_of(&self, piece: Piece) -> f64 {
        let w0 = self.spectrum.omega0;
        match piece {
            Piece::Delay => w0,
            _ => -w0 * self.params.delta_n / self.params.n_bar,
        }
    }
}

/// Decoherence function from first principles: the Fourier integral
/// `κ(t) = ∫ dω G(ω) e^{iωt}` evaluated numerically over
/// `ω₀ ± 200 δω`, with the truncated Lorentzian tails restored by an
/// analytic `1/u²` correction. Independent of the closed forms in
/// [`ProcessModel::decoherence`]; serves as their oracle.
pub fn decoherence_quadrature(spectrum: &Spectrum, t: f64) -> C64 {
    debug_assert!(t >= 0.0);
    let dw = spectrum.delta_omega;
    let half_width = QUADRATURE_WINDOW_WIDTHS * dw;
    // Shifted variable u = ω − ω₀; the e^{iω₀t} carrier factors out.
    let integrand = |u: f64| {
        let g = dw / (core::f64::consts::PI * (u * u + dw * dw));
        C64::new(0.0, u * t).exp() * g
    };
    // Seed the subdivision at the oscillation scale of e^{iut}.
    let oscillations = half_width * t / core::f64::consts::PI;
    let min_panels = (4.0 * oscillations).min(200_000.0) as usize + 64;
    let window = integrate_complex(&integrand, -half_width, half_width, QUADRATURE_TOL, min_panels);
    let tail = 2.0 * dw / core::f64::consts::PI * tail_cos_integral(half_width, t);
    let (s, c) = libm::sincos(spectrum.omega0 * t);
    (window + tail) * C64::new(c, s)
}

/// `∫_R^∞ cos(ut)/u² du`, the symmetric-tail remainder of the Lorentzian
/// Fourier integral after dropping the δω² term (relative size (δω/R)² at
/// the window edge). Equal to `t·F(Rt)` with
/// `F(x) = cos(x)/x − (π/2 − Si(x))`.
fn tail_cos_integral(r: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 1.0 / r;
    }
    let x = r * t;
    let f = libm::cos(x) / x - (core::f64::consts::FRAC_PI_2 - sine_integral(x));
    t * f
}
