//! Generalized point interaction coupling the two half-lines.
//!
//! Boundary data match as `[psi_1(0); psi_1'(0)] = e^{i phi} M [psi_2(0);
//! psi_2'(0)]` with real `M = [a b; c d]`, `det M = a d - b c = -1`, and
//! `phi` in `[-pi/2, pi/2]`. The determinant constraint is what makes the
//! coupled operator self-adjoint, so it is enforced at construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{C64, NumericOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionMatrix {
    pub phi: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// Order of the determinant-denominator zero at `zeta = 0`, with an
/// indeterminate-band flag for raw parameters close to, but not at, zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevinsonPoleClass {
    pub p: u8,
    pub boundary: bool,
}

impl InteractionMatrix {
    pub fn new(phi: f64, a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        let scale = [a.abs(), b.abs(), c.abs(), d.abs(), 1.0]
            .iter()
            .fold(0.0f64, |m, &v| m.max(v));
        let dev = (det + 1.0).abs();
        if dev > 1e-12 * scale * scale {
            return Err(Error::NotConnecting { value: det, dev });
        }
        if !(-std::f64::consts::FRAC_PI_2..=std::f64::consts::FRAC_PI_2).contains(&phi) {
            return Err(Error::PhaseRange { phi });
        }
        Ok(InteractionMatrix { phi, a, b, c, d })
    }

    /// Standard couplings by name.
    ///
    /// `delta(alpha)` and `kirchhoff = delta(0)` impose value continuity with
    /// a derivative jump; `delta_prime(beta)` the dual; `density(sigma)` a
    /// first-order absorber; `delta_delta1(sigma1, sigma2)` the mixed
    /// two-parameter family, singular at `|sigma2| = 2`.
    pub fn preset(name: &str, params: &[f64]) -> Result<Self> {
        let want = |n: usize| -> Result<()> {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::Scenario {
                    field: format!("interaction.preset.{name}"),
                    message: format!("expected {n} parameter(s), got {}", params.len()),
                })
            }
        };
        match name {
            "kirchhoff" => {
                want(0)?;
                InteractionMatrix::new(0.0, 1.0, 0.0, 0.0, -1.0)
            }
            "delta" => {
                want(1)?;
                InteractionMatrix::new(0.0, 1.0, 0.0, params[0], -1.0)
            }
            "delta_prime" => {
                want(1)?;
                InteractionMatrix::new(0.0, -1.0, params[0], 0.0, 1.0)
            }
            "density" => {
                want(1)?;
                InteractionMatrix::new(0.0, 1.0, -params[0], 0.0, -1.0)
            }
            "delta_delta1" => {
                want(2)?;
                let (s1, s2) = (params[0], params[1]);
                if (s2 * s2 - 4.0).abs() < 1e-12 {
                    return Err(Error::SingularPreset {
                        preset: "delta_delta1",
                    });
                }
                InteractionMatrix::new(
                    0.0,
                    (2.0 + s2) / (2.0 - s2),
                    0.0,
                    4.0 * s1 / (4.0 - s2 * s2),
                    -(2.0 - s2) / (2.0 + s2),
                )
            }
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// `e^{i phi}`.
    pub fn phase(&self) -> C64 {
        C64::new(0.0, self.phi).exp()
    }

    /// Determinant denominator `(a - d) i zeta - (b zeta^2 + c)`.
    pub fn den(&self, zeta: C64) -> C64 {
        C64::new(0.0, self.a - self.d) * zeta - (self.b * zeta * zeta + self.c)
    }

    /// `d/dzeta` of `den`.
    pub fn den_prime(&self, zeta: C64) -> C64 {
        C64::new(0.0, self.a - self.d) - 2.0 * self.b * zeta
    }

    /// Trace-formula denominator `(a - d) zeta + (b zeta^2 + c) i`; equals
    /// `-i * den(zeta)`, so both share their logarithmic derivative.
    pub fn den_alt(&self, zeta: C64) -> C64 {
        (self.a - self.d) * zeta + C64::new(0.0, 1.0) * (self.b * zeta * zeta + self.c)
    }

    pub fn den_alt_prime(&self, zeta: C64) -> C64 {
        C64::new(self.a - self.d, 0.0) + C64::new(0.0, 2.0 * self.b) * zeta
    }

    /// Positive roots `kappa` of `den(i kappa) = 0`: the decay rates of the
    /// negative eigenvalues of the unperturbed (zero-potential) operator,
    /// which appear as poles of the determinant.
    pub fn unperturbed_kappas(&self) -> Vec<f64> {
        // den(i kappa) = b kappa^2 - (a - d) kappa - c, real.
        let (b, ad, c) = (self.b, self.a - self.d, self.c);
        let mut roots = Vec::new();
        if b.abs() > 1e-14 {
            let disc = ad * ad + 4.0 * b * c;
            if disc >= 0.0 {
                let s = disc.sqrt();
                roots.push((ad + s) / (2.0 * b));
                roots.push((ad - s) / (2.0 * b));
            }
        } else if ad.abs() > 1e-14 {
            roots.push(-c / ad);
        }
        roots.retain(|&k| k > 1e-12);
        roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
        roots
    }

    /// Order of the `den` zero at the origin.
    pub fn pole_class(&self, opts: &NumericOptions) -> Result<LevinsonPoleClass> {
        let boundary = opts.in_warn_band(self.c)
            || (opts.is_zero(self.c)
                && (opts.in_warn_band(self.a - self.d)
                    || (opts.is_zero(self.a - self.d) && opts.in_warn_band(self.b))));
        let p = if !opts.is_zero(self.c) {
            0
        } else if !opts.is_zero(self.a - self.d) {
            1
        } else if !opts.is_zero(self.b) {
            // Unreachable for real matrices with a d - b c = -1 (it would
            // force a^2 = -1), kept for table completeness.
            2
        } else {
            return Err(Error::UnclassifiablePole {
                c: self.c.abs(),
                ad: (self.a - self.d).abs(),
                b: self.b.abs(),
            });
        };
        Ok(LevinsonPoleClass { p, boundary })
    }

    /// Same coupling with the gauge phase replaced.
    pub fn with_phase(&self, phi: f64) -> Result<Self> {
        InteractionMatrix::new(phi, self.a, self.b, self.c, self.d)
    }
}
