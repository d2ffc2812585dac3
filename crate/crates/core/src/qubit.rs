//! Exact linear algebra for 2×2 density matrices in the {H, V} polarization
//! basis: construction from polarization angles, invariant checking, trace
//! distance, and purity.

use core::fmt;

use num_complex::Complex64 as C64;

/// Tolerance on Hermiticity and unit trace.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Tolerance on unit trace.
pub const TRACE_TOL: f64 = 1e-12;
/// Tolerance on positive semidefiniteness (smallest admissible eigenvalue).
pub const POSITIVITY_TOL: f64 = -1e-10;

/// Violation of a [`DensityMatrix`] invariant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateError {
    /// `entries[i][j] != conj(entries[j][i])` beyond tolerance.
    NotHermitian { defect: f64 },
    /// `|tr - 1|` beyond tolerance.
    TraceNotOne { trace: f64 },
    /// An eigenvalue below the positivity tolerance.
    NotPositive { eigenvalue: f64 },
}

impl fmt::Display for StateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NotHermitian { defect } => {
                write!(f, "matrix is not Hermitian (defect {defect:.3e})")
            }
            Self::TraceNotOne { trace } => {
                write!(f, "matrix trace is {trace:.15} instead of 1")
            }
            Self::NotPositive { eigenvalue } => {
                write!(f, "matrix has negative eigenvalue {eigenvalue:.3e}")
            }
        }
    }
}

impl core::error::Error for StateError {}

/// Polarization direction, measured in degrees from horizontal.
///
/// Stored normalized to `[0, 360)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PolarizationAngle {
    degrees: f64,
}

impl PolarizationAngle {
    pub fn new(degrees: f64) -> Self {
        let mut d = degrees - 360.0 * libm::floor(degrees / 360.0);
        // rounding can land exactly on 360.0 for tiny negative inputs
        if d >= 360.0 {
            d = 0.0;
        }
        Self { degrees: d }
    }

    pub fn degrees(self) -> f64 {
        self.degrees
    }

    pub fn radians(self) -> f64 {
        self.degrees.to_radians()
    }
}

impl From<f64> for PolarizationAngle {
    fn from(degrees: f64) -> Self {
        Self::new(degrees)
    }
}

/// Eigenvalues of a 2×2 Hermitian matrix `[[a, b], [conj(b), d]]`, computed
/// by the closed-form quadratic formula. Returned in ascending order.
pub fn hermitian_eigenvalues(a: f64, b: C64, d: f64) -> (f64, f64) {
    let mean = 0.5 * (a + d);
    let half_gap = 0.5 * (a - d);
    let radius = libm::sqrt(half_gap * half_gap + b.norm_sqr());
    (mean - radius, mean + radius)
}

/// A 2×2 complex density matrix over the {H, V} basis.
///
/// Values constructed through [`DensityMatrix::new`] are Hermitian
/// ([`HERMITICITY_TOL`]), unit-trace ([`TRACE_TOL`]), and positive
/// semidefinite ([`POSITIVITY_TOL`]). The type is an immutable value; all
/// operations on it are pure functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    entries: [[C64; 2]; 2],
}

impl DensityMatrix {
    /// Validates the invariants and wraps the entries.
    pub fn new(entries: [[C64; 2]; 2]) -> Result<Self, StateError> {
        let rho = Self { entries };
        rho.validate()?;
        Ok(rho)
    }

    /// Wraps the entries without validation. The caller guarantees the
    /// invariants hold.
    pub fn new_unchecked(entries: [[C64; 2]; 2]) -> Self {
        Self { entries }
    }

    /// The pure state `|Ψ⟩⟨Ψ|` with `|Ψ⟩ = cos(φ)|H⟩ + sin(φ)|V⟩`.
    pub fn pure(angle: PolarizationAngle) -> Self {
        let (s, c) = libm::sincos(angle.radians());
        Self {
            entries: [
                [C64::new(c * c, 0.0), C64::new(c * s, 0.0)],
                [C64::new(c * s, 0.0), C64::new(s * s, 0.0)],
            ],
        }
    }

    /// Checks Hermiticity, unit trace, and positivity.
    pub fn validate(&self) -> Result<(), StateError> {
        let m = &self.entries;
        let defect = (m[0][1] - m[1][0].conj())
            .norm()
            .max(m[0][0].im.abs())
            .max(m[1][1].im.abs());
        if defect > HERMITICITY_TOL {
            return Err(StateError::NotHermitian { defect });
        }
        let trace = m[0][0].re + m[1][1].re;
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(StateError::TraceNotOne { trace });
        }
        let (lo, _) = hermitian_eigenvalues(m[0][0].re, m[0][1], m[1][1].re);
        if lo < POSITIVITY_TOL {
            return Err(StateError::NotPositive { eigenvalue: lo });
        }
        Ok(())
    }

    pub fn entries(&self) -> &[[C64; 2]; 2] {
        &self.entries
    }

    /// ⟨H|ρ|H⟩, the horizontal population.
    pub fn hh(&self) -> C64 {
        self.entries[0][0]
    }

    /// ⟨H|ρ|V⟩, the coherence.
    pub fn hv(&self) -> C64 {
        self.entries[0][1]
    }

    /// ⟨V|ρ|H⟩.
    pub fn vh(&self) -> C64 {
        self.entries[1][0]
    }

    /// ⟨V|ρ|V⟩, the vertical population.
    pub fn vv(&self) -> C64 {
        self.entries[1][1]
    }

    /// tr ρ², in `[1/2, 1]` for a valid state; 1 exactly for pure states.
    pub fn purity(&self) -> f64 {
        debug_assert!(self.validate().is_ok());
        let m = &self.entries;
        m[0][0].norm_sqr() + m[1][1].norm_sqr() + 2.0 * m[0][1].norm_sqr()
    }
}

/// Trace distance `D(ρ₁, ρ₂) = ½ tr|ρ₁ − ρ₂|`: half the sum of the absolute
/// eigenvalues of the Hermitian difference. Symmetric in its arguments, zero
/// iff the states are equal, and at most 1.
///
/// Inputs constructed through [`DensityMatrix::new`] are already validated;
/// unchecked inputs are rejected here in debug builds.
pub fn trace_distance(rho1: &DensityMatrix, rho2: &DensityMatrix) -> f64 {
    debug_assert!(rho1.validate().is_ok(), "left state violates invariants");
    debug_assert!(rho2.validate().is_ok(), "right state violates invariants");
    let a = rho1.entries();
    let b = rho2.entries();
    let (lo, hi) = hermitian_eigenvalues(
        a[0][0].re - b[0][0].re,
        a[0][1] - b[0][1],
        a[1][1].re - b[1][1].re,
    );
    0.5 * (lo.abs() + hi.abs())
}
