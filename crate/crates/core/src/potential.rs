//! Real-valued potentials on a half-line `[0, infinity)`.
//!
//! Every family here is integrable with a finite first moment, which is what
//! the determinant and trace machinery downstream assumes. `moment` makes the
//! check quantitative.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// One half-line potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PotentialProfile {
    Zero,
    SquareWell {
        depth: f64,
        width: f64,
    },
    Exponential {
        amplitude: f64,
        rate: f64,
    },
    Gaussian {
        amplitude: f64,
        center: f64,
        sigma: f64,
    },
    /// Piecewise-linear interpolation of `(x, v)` samples; constant `v[0]`
    /// left of the first node, zero beyond the last.
    Tabulated {
        xs: Vec<f64>,
        vs: Vec<f64>,
    },
}

/// The pair of edge potentials of the coupled system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgePotentials {
    pub v1: PotentialProfile,
    pub v2: PotentialProfile,
}

impl EdgePotentials {
    pub fn new(v1: PotentialProfile, v2: PotentialProfile) -> Result<Self> {
        v1.validate()?;
        v2.validate()?;
        Ok(EdgePotentials { v1, v2 })
    }

    pub fn edge(&self, e: crate::types::Edge) -> &PotentialProfile {
        match e {
            crate::types::Edge::One => &self.v1,
            crate::types::Edge::Two => &self.v2,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.v1 == PotentialProfile::Zero && self.v2 == PotentialProfile::Zero
    }
}

impl PotentialProfile {
    pub fn validate(&self) -> Result<()> {
        match self {
            PotentialProfile::Zero => Ok(()),
            PotentialProfile::SquareWell { width, .. } => {
                if *width > 0.0 && width.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidPotential {
                        name: "width",
                        message: format!("must be positive and finite, got {width}"),
                    })
                }
            }
            PotentialProfile::Exponential { rate, .. } => {
                if *rate > 0.0 && rate.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidPotential {
                        name: "rate",
                        message: format!("must be positive and finite, got {rate}"),
                    })
                }
            }
            PotentialProfile::Gaussian { center, sigma, .. } => {
                if !(*sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::InvalidPotential {
                        name: "sigma",
                        message: format!("must be positive and finite, got {sigma}"),
                    });
                }
                if !(*center >= 0.0 && center.is_finite()) {
                    return Err(Error::InvalidPotential {
                        name: "center",
                        message: format!("must be nonnegative and finite, got {center}"),
                    });
                }
                Ok(())
            }
            PotentialProfile::Tabulated { xs, vs } => {
                if xs.len() < 2 || xs.len() != vs.len() {
                    return Err(Error::BadTable);
                }
                if xs[0] < 0.0 || xs.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::BadTable);
                }
                if xs.iter().chain(vs.iter()).any(|v| !v.is_finite()) {
                    return Err(Error::BadTable);
                }
                Ok(())
            }
        }
    }

    /// Pointwise value `V(x)`; real by construction.
    pub fn evaluate(&self, x: f64) -> f64 {
        match self {
            PotentialProfile::Zero => 0.0,
            PotentialProfile::SquareWell { depth, width } => {
                // The midpoint convention at the jump keeps grid samplers
                // second-order accurate when the edge lands on a node;
                // integrators split at the breakpoint, so the pointwise value
                // there never influences them.
                if (x - *width).abs() <= 1e-9 * width.max(1.0) {
                    0.5 * *depth
                } else if x < *width {
                    *depth
                } else {
                    0.0
                }
            }
            PotentialProfile::Exponential { amplitude, rate } => amplitude * (-rate * x).exp(),
            PotentialProfile::Gaussian {
                amplitude,
                center,
                sigma,
            } => {
                let u = (x - center) / sigma;
                amplitude * (-0.5 * u * u).exp()
            }
            PotentialProfile::Tabulated { xs, vs } => {
                if x <= xs[0] {
                    return vs[0];
                }
                if x >= *xs.last().unwrap() {
                    return 0.0;
                }
                let idx = match xs.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
                    Ok(i) => return vs[i],
                    Err(i) => i,
                };
                let (x0, x1) = (xs[idx - 1], xs[idx]);
                let t = (x - x0) / (x1 - x0);
                vs[idx - 1] * (1.0 - t) + vs[idx] * t
            }
        }
    }

    /// `x` beyond which `|V|` is negligible for box-sizing purposes.
    pub fn support_hint(&self) -> f64 {
        match self {
            PotentialProfile::Zero => 0.0,
            PotentialProfile::SquareWell { width, .. } => *width,
            PotentialProfile::Exponential { rate, .. } => 40.0 / rate,
            PotentialProfile::Gaussian { center, sigma, .. } => center + 10.0 * sigma,
            PotentialProfile::Tabulated { xs, .. } => *xs.last().unwrap(),
        }
    }

    /// Points where `V` is discontinuous or kinked; integrators split here to
    /// keep their local order.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            PotentialProfile::SquareWell { width, .. } => vec![*width],
            PotentialProfile::Tabulated { xs, .. } => xs.clone(),
            _ => Vec::new(),
        }
    }

    /// `integral of x^order * |V(x)| dx` over the half-line.
    ///
    /// Quadrature runs to the support hint; exponential tails are added in
    /// closed form and Gaussian tails as an analytic upper bound (far below
    /// the quadrature tolerance at ten sigmas). A tail estimate above
    /// `divergence_bound` reports the profile as non-integrable.
    pub fn moment(&self, order: u32, quad_tol: f64, divergence_bound: f64) -> Result<f64> {
        if let PotentialProfile::Zero = self {
            return Ok(0.0);
        }
        let t = self.support_hint();
        let f = |x: f64| x.powi(order as i32) * self.evaluate(x).abs();
        let body = quadrature::integrate(&f, 0.0, t, &self.breakpoints(), quad_tol);

        let tail = match self {
            PotentialProfile::Exponential { amplitude, rate } => {
                amplitude.abs() * exp_tail(order, *rate, t)
            }
            PotentialProfile::Gaussian {
                amplitude,
                center,
                sigma,
            } => {
                // For x >= t: x^k <= t^k exp(k (x-t)/t), so the tail is bounded
                // by a shifted Gaussian integral with an explicit rate margin.
                let margin = (t - center) / (sigma * sigma) - order as f64 / t.max(1.0);
                if margin <= 0.0 {
                    return Err(Error::NonIntegrable {
                        tail: f64::INFINITY,
                        bound: divergence_bound,
                    });
                }
                let u = (t - center) / sigma;
                amplitude.abs() * t.powi(order as i32) * (-0.5 * u * u).exp() / margin
            }
            _ => 0.0,
        };
        if !tail.is_finite() || tail > divergence_bound {
            return Err(Error::NonIntegrable {
                tail,
                bound: divergence_bound,
            });
        }
        let total = body + tail;
        if !total.is_finite() {
            return Err(Error::MomentCondition { order });
        }
        Ok(total)
    }
}

/// `integral of x^k exp(-r x) dx` from `t` to infinity.
fn exp_tail(k: u32, r: f64, t: f64) -> f64 {
    if k == 0 {
        (-r * t).exp() / r
    } else {
        (-r * t).exp() * t.powi(k as i32) / r + k as f64 / r * exp_tail(k - 1, r, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_well_pointwise() {
        let v = PotentialProfile::SquareWell {
            depth: -4.0,
            width: 1.0,
        };
        assert_eq!(v.evaluate(0.5), -4.0);
        assert_eq!(v.evaluate(1.5), 0.0);
    }

    #[test]
    fn exponential_pointwise() {
        let v = PotentialProfile::Exponential {
            amplitude: 2.0,
            rate: 1.0,
        };
        assert!((v.evaluate(1.0) - 0.7357588823428847).abs() < 1e-12);
    }

    #[test]
    fn square_well_zeroth_moment() {
        let v = PotentialProfile::SquareWell {
            depth: -4.0,
            width: 1.0,
        };
        let m = v.moment(0, 1e-10, 1e8).unwrap();
        assert!((m - 4.0).abs() < 1e-10);
    }

    #[test]
    fn zero_moments_vanish() {
        for k in 0..3 {
            assert_eq!(PotentialProfile::Zero.moment(k, 1e-10, 1e8).unwrap(), 0.0);
        }
    }

    #[test]
    fn exponential_first_moment() {
        // integral of x * 2 exp(-x) over the half-line = 2.
        let v = PotentialProfile::Exponential {
            amplitude: 2.0,
            rate: 1.0,
        };
        let m = v.moment(1, 1e-10, 1e8).unwrap();
        assert!((m - 2.0).abs() < 1e-10, "m = {m}");
    }

    #[test]
    fn gaussian_zeroth_moment() {
        // integral of exp(-(x-3)^2 / 2) over the half-line; essentially the
        // full line value sqrt(2 pi) since the center sits three sigmas in.
        let v = PotentialProfile::Gaussian {
            amplitude: 1.0,
            center: 3.0,
            sigma: 1.0,
        };
        let m = v.moment(0, 1e-10, 1e8).unwrap();
        let full = (2.0 * std::f64::consts::PI).sqrt();
        // Missing mass left of x=0 is ~ 0.00135 * sqrt(2 pi).
        assert!((m - full).abs() < 0.0035, "m = {m}");
        assert!(m < full);
    }

    #[test]
    fn tabulated_interpolation() {
        let v = PotentialProfile::Tabulated {
            xs: vec![0.0, 1.0, 2.0],
            vs: vec![0.0, 2.0, 0.0],
        };
        assert!((v.evaluate(0.5) - 1.0).abs() < 1e-15);
        assert!((v.evaluate(1.5) - 1.0).abs() < 1e-15);
        assert_eq!(v.evaluate(3.0), 0.0);
        // Hat of height 2 over [0,2]: zeroth moment 2.
        let m = v.moment(0, 1e-10, 1e8).unwrap();
        assert!((m - 2.0).abs() < 1e-10);
    }

    #[test]
    fn tabulated_rejects_unsorted() {
        let v = PotentialProfile::Tabulated {
            xs: vec![0.0, 2.0, 1.0],
            vs: vec![0.0, 1.0, 0.0],
        };
        assert!(v.validate().is_err());
    }
}
