use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);

/// Which half-line a quantity belongs to. Edge one carries the `a`-row of the
/// coupling matrix, edge two the `d`-row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Edge {
    One,
    Two,
}

impl Edge {
    pub fn index(self) -> u8 {
        match self {
            Edge::One => 1,
            Edge::Two => 2,
        }
    }
}

/// Spectral parameter `zeta` with `Im zeta >= 0`; the energy is `zeta^2`.
///
/// The closed upper half-plane is enforced at construction: everything
/// downstream (Jost asymptotics, contour integrals, determinant branch
/// choices) silently assumes it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wavenumber(C64);

impl Wavenumber {
    pub fn new(z: C64) -> Result<Self> {
        if z.im < -1e-14 {
            return Err(Error::LowerHalfPlane { im: z.im });
        }
        Ok(Wavenumber(C64::new(z.re, z.im.max(0.0))))
    }

    /// Real scattering momentum `zeta = k` (may be negative for contour work).
    pub fn real(k: f64) -> Self {
        Wavenumber(C64::new(k, 0.0))
    }

    /// Bound-state ray `zeta = i*kappa`, `kappa >= 0`.
    pub fn imag(kappa: f64) -> Self {
        Wavenumber(C64::new(0.0, kappa))
    }

    pub fn zero() -> Self {
        Wavenumber(C64::new(0.0, 0.0))
    }

    pub fn value(self) -> C64 {
        self.0
    }

    /// Energy `z = zeta^2`.
    pub fn energy(self) -> C64 {
        self.0 * self.0
    }
}

/// Shared numerical tolerances and controls.
///
/// Defaults are the contract values; scenarios may override individual knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NumericOptions {
    /// Relative tolerance of the adaptive ODE stepper.
    pub ode_rtol: f64,
    /// Absolute floor of the adaptive ODE stepper.
    pub ode_atol: f64,
    /// Absolute tolerance of adaptive quadrature for potential moments.
    pub quad_tol: f64,
    /// Tail estimates above this bound mark a potential as non-integrable.
    pub divergence_bound: f64,
    /// Acceptable change in `w` when the integration box grows by 50%.
    pub tol_tail: f64,
    /// Verify the tail criterion on every Jost evaluation (costs a second
    /// integration; grid sweeps may disable it after spot checks).
    pub verify_tail: bool,
    /// Override for the integration box; `None` selects the default rule
    /// `support_hint + 10 / max(Im zeta, 0.1)`.
    pub x_max_override: Option<f64>,
    /// Exact-zero threshold for classifier quantities.
    pub zero_tol: f64,
    /// Upper edge of the indeterminate band: classifier magnitudes in
    /// `(zero_tol, warn_tol)` are flagged, not silently classified.
    pub warn_tol: f64,
    /// `|w_j(0)|` below this marks a zero-energy resonance candidate.
    pub resonance_tol: f64,
    /// Floor for quotient denominators (`w_j` in L, determinant denominator).
    pub division_floor: f64,
    /// Bisection target on `|D|` at an eigenvalue.
    pub bisect_tol: f64,
    /// Local `|D|` minima below this, without a sign change, are probed as
    /// tangential (even-order) zeros.
    pub tangential_tol: f64,
    /// Maximum allowed distance of a rounded winding number from the raw
    /// contour integral.
    pub winding_residue_max: f64,
}

impl Default for NumericOptions {
    fn default() -> Self {
        NumericOptions {
            ode_rtol: 1e-10,
            ode_atol: 1e-13,
            quad_tol: 1e-10,
            divergence_bound: 1e8,
            tol_tail: 1e-8,
            verify_tail: true,
            x_max_override: None,
            zero_tol: 1e-12,
            warn_tol: 1e-6,
            resonance_tol: 1e-8,
            division_floor: 1e-13,
            bisect_tol: 1e-11,
            tangential_tol: 1e-9,
            winding_residue_max: 0.05,
        }
    }
}

impl NumericOptions {
    /// Integration box for Jost solutions at the given spectral parameter.
    pub fn x_max(&self, support_hint: f64, zeta: Wavenumber) -> f64 {
        if let Some(x) = self.x_max_override {
            return x;
        }
        support_hint + 10.0 / zeta.value().im.max(0.1)
    }

    /// True when a classifier magnitude sits in the indeterminate band.
    pub fn in_warn_band(&self, q: f64) -> bool {
        let a = q.abs();
        a > self.zero_tol && a < self.warn_tol
    }

    /// Classifier zero test.
    pub fn is_zero(&self, q: f64) -> bool {
        q.abs() <= self.zero_tol
    }
}
