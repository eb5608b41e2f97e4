//! Jost and regular solutions of `-u'' + V u = zeta^2 u` on a half-line.
//!
//! The Jost solution `theta(x, zeta) ~ exp(i zeta x)` as `x -> infinity` is
//! computed in scaled form `Theta = theta * exp(-i zeta x)`, which satisfies
//! `Theta'' + 2 i zeta Theta' = V Theta` and tends to 1 at infinity. Backward
//! integration from the box edge follows the dominant solution, so the scheme
//! is stable for `Im zeta >= 0`, and the scaling avoids under/overflow at
//! large `|zeta| x`. The derivative with respect to zeta is propagated jointly
//! through the variational system `Xi = d Theta / d zeta`:
//! `Xi'' + 2 i zeta Xi' + 2 i Theta' = V Xi`, starting from zero at the box.
//!
//! Boundary data at the origin unscale as
//! `w = Theta(0)`, `w' = Theta'(0) + i zeta Theta(0)`,
//! `dw/dzeta = Xi(0)`, `dw'/dzeta = Xi'(0) + i Theta(0) + i zeta Xi(0)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode;
use crate::potential::PotentialProfile;
use crate::types::{C64, Edge, I, NumericOptions, Wavenumber};

/// Boundary data of the Jost solution at the origin, with zeta-derivatives.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct JostData {
    pub edge: Edge,
    pub zeta: Wavenumber,
    /// Jost function `w = theta(0, zeta)`.
    pub w: C64,
    /// Space derivative `theta'(0, zeta)`.
    pub wp: C64,
    /// `d/dzeta theta(0, zeta)`.
    pub wdot: C64,
    /// `d/dzeta theta'(0, zeta)`.
    pub wpdot: C64,
}

/// Sampled Jost solution along the integration ray, for kernel assembly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionTrace {
    pub zeta: Wavenumber,
    pub grid: Vec<f64>,
    pub theta: Vec<C64>,
    pub theta_prime: Vec<C64>,
}

fn scaled_rhs<'a>(
    v: &'a PotentialProfile,
    zeta: C64,
) -> impl Fn(f64, &[C64; 4]) -> [C64; 4] + 'a {
    let two_i_zeta = 2.0 * I * zeta;
    move |x: f64, y: &[C64; 4]| {
        let vx = v.evaluate(x);
        [
            y[1],
            vx * y[0] - two_i_zeta * y[1],
            y[3],
            vx * y[2] - two_i_zeta * y[3] - 2.0 * I * y[1],
        ]
    }
}

/// Scaled state at `x = 0` after backward integration from `x_max`.
fn scaled_at_origin(
    v: &PotentialProfile,
    zeta: C64,
    x_max: f64,
    opts: &NumericOptions,
) -> Result<[C64; 4]> {
    let init = [
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
    ];
    ode::integrate_piecewise(
        &scaled_rhs(v, zeta),
        x_max,
        0.0,
        init,
        &v.breakpoints(),
        opts.ode_rtol,
        opts.ode_atol,
    )
}

fn unscale(edge: Edge, zeta: Wavenumber, s: &[C64; 4]) -> JostData {
    let z = zeta.value();
    JostData {
        edge,
        zeta,
        w: s[0],
        wp: s[1] + I * z * s[0],
        wdot: s[2],
        wpdot: s[3] + I * s[0] + I * z * s[2],
    }
}

/// Jost boundary data on one edge.
///
/// The tail criterion recomputes with a box enlarged by 50% and demands the
/// Jost function move by less than `tol_tail`; for real zeta this compares
/// modulus-one oscillatory data, for `Im zeta > 0` decaying data, and both are
/// covered by the same difference test.
pub fn jost(
    v: &PotentialProfile,
    edge: Edge,
    zeta: Wavenumber,
    opts: &NumericOptions,
) -> Result<JostData> {
    let x_max = opts.x_max(v.support_hint(), zeta);
    let s = scaled_at_origin(v, zeta.value(), x_max, opts)?;
    let data = unscale(edge, zeta, &s);
    if opts.verify_tail {
        let s2 = scaled_at_origin(v, zeta.value(), 1.5 * x_max, opts)?;
        let w2 = s2[0];
        let delta = (data.w - w2).norm();
        if delta > opts.tol_tail * data.w.norm().max(1.0) {
            return Err(Error::TailNotConverged {
                x_max,
                delta,
                tol: opts.tol_tail,
            });
        }
    }
    Ok(data)
}

/// Jost data for both edges at a common zeta.
pub fn jost_pair(
    eps: &crate::potential::EdgePotentials,
    zeta: Wavenumber,
    opts: &NumericOptions,
) -> Result<(JostData, JostData)> {
    Ok((
        jost(&eps.v1, Edge::One, zeta, opts)?,
        jost(&eps.v2, Edge::Two, zeta, opts)?,
    ))
}

/// Unscaled Jost solution values `(theta, theta')` at the requested points,
/// which must be sorted ascending and nonnegative.
pub fn jost_eval(
    v: &PotentialProfile,
    zeta: Wavenumber,
    xs: &[f64],
    opts: &NumericOptions,
) -> Result<Vec<(C64, C64)>> {
    let z = zeta.value();
    let x_max = opts.x_max(v.support_hint(), zeta);
    let breaks = v.breakpoints();
    let rhs = scaled_rhs(v, z);
    let mut out = vec![(C64::new(0.0, 0.0), C64::new(0.0, 0.0)); xs.len()];
    let mut state = [
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
    ];
    let mut x = x_max;
    for (i, &xi) in xs.iter().enumerate().rev() {
        let target = xi.min(x_max);
        state = ode::integrate_piecewise(&rhs, x, target, state, &breaks, opts.ode_rtol, opts.ode_atol)?;
        x = target;
        let phase = (I * z * xi).exp();
        out[i] = ((state[0] * phase), (state[1] + I * z * state[0]) * phase);
    }
    Ok(out)
}

/// Jost data plus a uniform trace of `theta, theta'` over `[0, x_max]`.
pub fn jost_trace(
    v: &PotentialProfile,
    edge: Edge,
    zeta: Wavenumber,
    samples: usize,
    opts: &NumericOptions,
) -> Result<(JostData, SolutionTrace)> {
    let data = jost(v, edge, zeta, opts)?;
    let x_max = opts.x_max(v.support_hint(), zeta);
    let n = samples.max(2);
    let grid: Vec<f64> = (0..n)
        .map(|i| x_max * i as f64 / (n - 1) as f64)
        .collect();
    let vals = jost_eval(v, zeta, &grid, opts)?;
    Ok((
        data,
        SolutionTrace {
            zeta,
            grid,
            theta: vals.iter().map(|p| p.0).collect(),
            theta_prime: vals.iter().map(|p| p.1).collect(),
        },
    ))
}

/// Regular solution with `phi(0) = 0`, `phi'(0) = 1`, evaluated at sorted
/// ascending points. Forward integration follows the growing solution, which
/// is the stable direction.
pub fn regular_eval(
    v: &PotentialProfile,
    zeta: Wavenumber,
    xs: &[f64],
    opts: &NumericOptions,
) -> Result<Vec<(C64, C64)>> {
    let z = zeta.value();
    let z2 = z * z;
    let breaks = v.breakpoints();
    let rhs = move |x: f64, y: &[C64; 2]| [y[1], (v.evaluate(x) - z2) * y[0]];
    let mut out = Vec::with_capacity(xs.len());
    let mut state = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
    let mut x = 0.0;
    for &xi in xs {
        state = ode::integrate_piecewise(&rhs, x, xi, state, &breaks, opts.ode_rtol, opts.ode_atol)?;
        x = xi;
        out.push((state[0], state[1]));
    }
    Ok(out)
}

/// `(phi(x), phi'(x))` for a single point.
pub fn regular(
    v: &PotentialProfile,
    zeta: Wavenumber,
    x: f64,
    opts: &NumericOptions,
) -> Result<(C64, C64)> {
    Ok(regular_eval(v, zeta, &[x], opts)?[0])
}

/// Wronskian `theta phi' - theta' phi` evaluated at `x`; independent of `x`
/// and equal to the Jost function `w(zeta)`, which makes it a cheap internal
/// consistency probe for both integrations.
pub fn wronskian_check(
    v: &PotentialProfile,
    zeta: Wavenumber,
    x: f64,
    opts: &NumericOptions,
) -> Result<C64> {
    let (phi, phip) = regular(v, zeta, x, opts)?;
    let jv = jost_eval(v, zeta, &[x], opts)?;
    let (theta, thetap) = jv[0];
    Ok(theta * phip - thetap * phi)
}
