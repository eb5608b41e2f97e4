//! Adaptive Dormand-Prince 5(4) integration for small complex systems.
//!
//! Used for the Jost and regular solutions: state vectors are fixed-size
//! arrays of complex values, direction may be forward or backward, and the
//! caller can force restarts at potential breakpoints so the method keeps its
//! order across kinks.

use crate::error::{Error, Result};
use crate::types::C64;

const SAFETY: f64 = 0.9;
const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 5.0;

/// One adaptive integration from `x0` to `x1` (either direction).
/// Returns the final state.
pub fn integrate<const N: usize, F>(
    f: &F,
    x0: f64,
    x1: f64,
    y0: [C64; N],
    rtol: f64,
    atol: f64,
) -> Result<[C64; N]>
where
    F: Fn(f64, &[C64; N]) -> [C64; N] + ?Sized,
{
    let span = x1 - x0;
    if span == 0.0 {
        return Ok(y0);
    }
    let dir = span.signum();
    let mut x = x0;
    let mut y = y0;
    let mut h = span / 64.0;
    let h_floor = span.abs() * 1e-14 + 1e-300;
    let mut k1 = f(x, &y);

    loop {
        let remaining = x1 - x;
        if remaining * dir <= 0.0 {
            return Ok(y);
        }
        if h.abs() > remaining.abs() {
            h = remaining;
        }
        let (y_next, k_last, err) = step(f, x, &y, &k1, h, rtol, atol);
        if err <= 1.0 {
            x += h;
            y = y_next;
            k1 = k_last; // FSAL
            let scale = if err == 0.0 {
                MAX_SCALE
            } else {
                (SAFETY * err.powf(-0.2)).clamp(MIN_SCALE, MAX_SCALE)
            };
            h *= scale;
        } else {
            h *= (SAFETY * err.powf(-0.2)).clamp(MIN_SCALE, 1.0);
            if h.abs() < h_floor {
                return Err(Error::StepUnderflow { x });
            }
        }
    }
}

/// Integrate across `[x0, x1]` restarting at each interior breakpoint.
pub fn integrate_piecewise<const N: usize, F>(
    f: &F,
    x0: f64,
    x1: f64,
    y0: [C64; N],
    breakpoints: &[f64],
    rtol: f64,
    atol: f64,
) -> Result<[C64; N]>
where
    F: Fn(f64, &[C64; N]) -> [C64; N] + ?Sized,
{
    let (lo, hi) = if x0 < x1 { (x0, x1) } else { (x1, x0) };
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&p| p > lo && p < hi)
        .collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    if x0 > x1 {
        cuts.reverse();
    }

    let mut y = y0;
    let mut x = x0;
    for p in cuts {
        y = integrate(f, x, p, y, rtol, atol)?;
        x = p;
    }
    integrate(f, x, x1, y, rtol, atol)
}

/// One Dormand-Prince step; returns (new state, last stage, scaled error).
fn step<const N: usize, F>(
    f: &F,
    x: f64,
    y: &[C64; N],
    k1: &[C64; N],
    h: f64,
    rtol: f64,
    atol: f64,
) -> ([C64; N], [C64; N], f64)
where
    F: Fn(f64, &[C64; N]) -> [C64; N] + ?Sized,
{
    #[inline]
    fn comb<const N: usize>(y: &[C64; N], h: f64, parts: &[(&[C64; N], f64)]) -> [C64; N] {
        let mut out = *y;
        for i in 0..N {
            let mut acc = C64::new(0.0, 0.0);
            for (k, c) in parts {
                acc += k[i] * *c;
            }
            out[i] += acc * h;
        }
        out
    }

    let k2 = f(x + h / 5.0, &comb(y, h, &[(k1, 1.0 / 5.0)]));
    let k3 = f(
        x + 3.0 * h / 10.0,
        &comb(y, h, &[(k1, 3.0 / 40.0), (&k2, 9.0 / 40.0)]),
    );
    let k4 = f(
        x + 4.0 * h / 5.0,
        &comb(
            y,
            h,
            &[(k1, 44.0 / 45.0), (&k2, -56.0 / 15.0), (&k3, 32.0 / 9.0)],
        ),
    );
    let k5 = f(
        x + 8.0 * h / 9.0,
        &comb(
            y,
            h,
            &[
                (k1, 19372.0 / 6561.0),
                (&k2, -25360.0 / 2187.0),
                (&k3, 64448.0 / 6561.0),
                (&k4, -212.0 / 729.0),
            ],
        ),
    );
    let k6 = f(
        x + h,
        &comb(
            y,
            h,
            &[
                (k1, 9017.0 / 3168.0),
                (&k2, -355.0 / 33.0),
                (&k3, 46732.0 / 5247.0),
                (&k4, 49.0 / 176.0),
                (&k5, -5103.0 / 18656.0),
            ],
        ),
    );
    let y_next = comb(
        y,
        h,
        &[
            (k1, 35.0 / 384.0),
            (&k3, 500.0 / 1113.0),
            (&k4, 125.0 / 192.0),
            (&k5, -2187.0 / 6784.0),
            (&k6, 11.0 / 84.0),
        ],
    );
    let k7 = f(x + h, &y_next);

    // Difference between the 5th and embedded 4th order results.
    let d = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    let mut err_sq = 0.0;
    for i in 0..N {
        let e = (k1[i] * d[0] + k3[i] * d[2] + k4[i] * d[3] + k5[i] * d[4] + k6[i] * d[5]
            + k7[i] * d[6])
            * h;
        let scale = atol + rtol * y[i].norm().max(y_next[i].norm());
        let r = e.norm() / scale;
        err_sq += r * r;
    }
    (y_next, k7, (err_sq / N as f64).sqrt())
}
