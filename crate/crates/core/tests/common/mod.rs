//! Shared test helpers: a closed-form square-well boundary-data oracle that
//! is fully independent of the production ODE path, scenario builders, and
//! small numeric utilities.
#![allow(dead_code)]

use specdet_core::interaction::InteractionMatrix;
use specdet_core::potential::{EdgePotentials, PotentialProfile};
use specdet_core::types::{C64, I, NumericOptions};

/// `cos(kW)`, `sin(kW)/k`, and their derivatives with respect to `E = k^2`,
/// as entire functions of `E` (power series near `E = 0`, closed form
/// elsewhere).
pub struct TrigBlock {
    pub co: C64,
    pub s: C64,
    pub dco_de: C64,
    pub ds_de: C64,
}

pub fn trig_block(e: C64, w: f64) -> TrigBlock {
    let z = e * (w * w); // (kW)^2
    if z.norm() < 0.25 {
        // cos(kW)  = sum_n (-1)^n z^n / (2n)!
        // sin(kW)/k = W sum_n (-1)^n z^n / (2n+1)!
        let zero = C64::new(0.0, 0.0);
        let (mut co, mut s, mut dco_dz, mut ds_dz) = (zero, zero, zero, zero);
        let mut zn = C64::new(1.0, 0.0); // z^n
        let mut zn_prev = zero; // z^{n-1}
        let mut f2n = 1.0f64; // (2n)!
        let mut f2n1 = 1.0f64; // (2n+1)!
        let mut sign = 1.0f64;
        for n in 0..=14u32 {
            if n > 0 {
                f2n *= ((2 * n - 1) * (2 * n)) as f64;
                f2n1 *= ((2 * n) * (2 * n + 1)) as f64;
                sign = -sign;
            }
            co += sign * zn / f2n;
            s += sign * zn / f2n1;
            if n > 0 {
                dco_dz += sign * (n as f64) * zn_prev / f2n;
                ds_dz += sign * (n as f64) * zn_prev / f2n1;
            }
            zn_prev = zn;
            zn *= z;
        }
        let w2 = w * w;
        TrigBlock {
            co,
            s: s * w,
            dco_de: dco_dz * w2,
            ds_de: ds_dz * w * w2,
        }
    } else {
        // Both blocks are even in k, so the sqrt branch is immaterial.
        let k = e.sqrt();
        let co = (k * w).cos();
        let s = (k * w).sin() / k;
        TrigBlock {
            co,
            s,
            dco_de: -0.5 * w * s,
            ds_de: (w * co - s) / (2.0 * e),
        }
    }
}

/// Closed-form boundary data for one square-well edge (`V = depth` on
/// `(0, width)`, zero beyond): `(w, w', dw/dzeta, dw'/dzeta)`.
///
/// Derivation: for `x >= width` the outgoing solution is `e^{i zeta x}`;
/// inside the well it solves `u'' = -(zeta^2 - depth) u`, so propagating the
/// boundary data `(e^{i zeta W}, i zeta e^{i zeta W})` back across the well
/// with the constant-coefficient transfer matrix gives, with
/// `E = zeta^2 - depth`, `Co = cos(sqrt(E) W)`, `S = sin(sqrt(E) W)/sqrt(E)`:
///
/// `w  = e^{i zeta W} (Co - i zeta S)`
/// `w' = e^{i zeta W} (E S + i zeta Co)`
pub fn square_well_boundary(depth: f64, width: f64, zeta: C64) -> (C64, C64, C64, C64) {
    let e = zeta * zeta - depth;
    let tb = trig_block(e, width);
    let ph = (I * zeta * width).exp();
    let de = 2.0 * zeta; // dE/dzeta
    let co_dot = tb.dco_de * de;
    let s_dot = tb.ds_de * de;
    let w = ph * (tb.co - I * zeta * tb.s);
    let wp = ph * (e * tb.s + I * zeta * tb.co);
    let iw = I * width;
    let wdot = iw * w + ph * (co_dot - I * tb.s - I * zeta * s_dot);
    let wpdot = iw * wp + ph * (de * tb.s + e * s_dot + I * tb.co + I * zeta * co_dot);
    (w, wp, wdot, wpdot)
}

/// Closed-form outgoing solution `(theta, theta')` of the square-well edge at
/// any `x >= 0`.
pub fn square_well_theta(depth: f64, width: f64, zeta: C64, x: f64) -> (C64, C64) {
    if x >= width {
        let ph = (I * zeta * x).exp();
        return (ph, I * zeta * ph);
    }
    let e = zeta * zeta - depth;
    let delta = width - x;
    let tb = trig_block(e, delta);
    let ph = (I * zeta * width).exp();
    let (tw, twp) = (ph, I * zeta * ph);
    (tb.co * tw - tb.s * twp, e * tb.s * tw + tb.co * twp)
}

/// Depth at which the edge develops a zero-energy resonance (`w(0) = 0`)
/// for width 1: the quarter cosine wave `cos(sqrt(-depth)) = 0`.
pub const RESONANCE_DEPTH: f64 = -2.4674011002723395; // -(pi/2)^2

// --------------------------------------------------------------------------
// Builders
// --------------------------------------------------------------------------

pub fn opts() -> NumericOptions {
    NumericOptions::default()
}

pub fn kirchhoff() -> InteractionMatrix {
    InteractionMatrix::preset("kirchhoff", &[]).unwrap()
}

pub fn delta(alpha: f64) -> InteractionMatrix {
    InteractionMatrix::preset("delta", &[alpha]).unwrap()
}

pub fn delta_prime(beta: f64) -> InteractionMatrix {
    InteractionMatrix::preset("delta_prime", &[beta]).unwrap()
}

pub fn zero_pair() -> EdgePotentials {
    EdgePotentials::new(PotentialProfile::Zero, PotentialProfile::Zero).unwrap()
}

pub fn well1(depth: f64, width: f64) -> EdgePotentials {
    EdgePotentials::new(
        PotentialProfile::SquareWell { depth, width },
        PotentialProfile::Zero,
    )
    .unwrap()
}

pub fn exp_pair() -> EdgePotentials {
    EdgePotentials::new(
        PotentialProfile::Exponential {
            amplitude: -2.0,
            rate: 1.5,
        },
        PotentialProfile::Exponential {
            amplitude: -1.0,
            rate: 1.0,
        },
    )
    .unwrap()
}

pub fn exp_well_1() -> EdgePotentials {
    EdgePotentials::new(
        PotentialProfile::Exponential {
            amplitude: -2.0,
            rate: 1.5,
        },
        PotentialProfile::Zero,
    )
    .unwrap()
}

pub fn gauss_bump() -> EdgePotentials {
    EdgePotentials::new(
        PotentialProfile::Gaussian {
            amplitude: 1.5,
            center: 1.5,
            sigma: 0.6,
        },
        PotentialProfile::Zero,
    )
    .unwrap()
}

// --------------------------------------------------------------------------
// Numeric utilities
// --------------------------------------------------------------------------

/// Composite Simpson rule on `[a, b]` with `2 n` panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let m = 2 * n.max(1);
    let h = (b - a) / m as f64;
    let mut acc = f(a) + f(b);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1e-300)
}

pub fn c_rel_err(got: C64, want: C64) -> f64 {
    (got - want).norm() / want.norm().max(1e-300)
}
