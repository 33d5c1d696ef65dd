//! Solver for mean field games with quadratic Hamiltonian.
//!
//! The value function u and density m of the game
//!
//! ```text
//! (HJB)  du/dt + (sigma^2/2) u_xx + |u_x|^2 / 2 = -f(x, m)
//! (K)    dm/dt + (m u_x)_x = (sigma^2/2) m_xx
//! ```
//!
//! on [0,T] x [0,1] with homogeneous Neumann boundaries are computed through
//! the exponential change of variables phi = exp(u/sigma^2),
//! psi = m exp(-u/sigma^2), which turns the system into two coupled
//! semilinear heat equations running in opposite time directions:
//!
//! ```text
//! dphi/dt + (sigma^2/2) phi_xx = -(1/sigma^2) f(x, phi psi) phi
//! dpsi/dt - (sigma^2/2) psi_xx =  (1/sigma^2) f(x, phi psi) psi
//! ```
//!
//! Starting from psi = 0, alternately solving the backward phi equation and
//! the forward psi equation produces a monotone pair of sequences (phi
//! decreasing, psi increasing) converging to the transformed equilibrium.
//! Each half-step is a fully implicit finite-difference sweep whose
//! per-time-step nonlinear systems are tridiagonal M-matrices solved by a
//! damped Newton iteration on top of the Thomas algorithm.
//!
//! The crate is no_std-compatible (enable the `libm` feature and disable
//! default features); it performs no IO. File formats, run configuration
//! and the study harnesses live in the companion CLI crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod diagnostics;
pub mod error;
pub mod grid;
mod math;
pub mod outer;
pub mod problem;
pub mod recover;
pub mod sweeps;
pub mod tridiag;

pub use error::{Error, Result};
pub use grid::{build_grid, discrete_norm, grid_from_spacings, sup_norm, Field, Grid1D};
pub use problem::{builtin_example, validate_problem, MfgProblem, ValidationReport};
