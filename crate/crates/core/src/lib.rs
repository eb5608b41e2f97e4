//! Numerical toolkit for a pair of half-line Schrodinger operators coupled
//! through a generalized point interaction at the origin.
//!
//! The central objects are the Jost solutions of `-u'' + V_j u = zeta^2 u` on
//! each edge, the perturbation determinant `D(zeta)` built from their boundary
//! data, and the spectral quantities derived from it: bound states, scattering
//! phase shifts, the spectral shift function, and the integer bookkeeping that
//! enters Levinson-type counting identities. A finite-difference discretization
//! of the coupled operator serves as an independent cross-check for traces,
//! eigenvalues and resolvent kernels.

pub mod determinant;
pub mod error;
pub mod interaction;
mod linalg;
pub mod ode;
pub mod potential;
mod quadrature;
pub mod resolvent;
pub mod scattering;
pub mod scenario;
pub mod spectrum;
pub mod types;

pub use error::{Error, Result};
pub use types::{Edge, NumericOptions, Wavenumber, C64};
