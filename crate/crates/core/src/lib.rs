//! Explicit Nash equilibria for the N-player linear stochastic differential
//! game whose state is modulated by fractional Brownian motion, together with
//! the numerical machinery needed to check every closed-form identity of the
//! solution by quadrature and Monte Carlo.
//!
//! Layout:
//!
//! * [`fbm`] exact synthesis of fBm paths (Cholesky and circulant embedding)
//! * [`calculus`] quadrature against the singular kernel
//!   `phi(s,t) = H(2H-1)|s-t|^(2H-2)`, Wiener integrals and the first-kind
//!   integral equation solver
//! * [`girsanov`] the drift-removal kernel `K`, its conditioned family
//!   `zeta_u`, and the densities `eta(T)` and `rho(t)`
//! * [`equilibrium`] the budget equation, the Lagrange scale `m*` and the
//!   equilibrium strategies
//! * [`verify`] the Monte Carlo / oracle verification suite
//! * [`cli`] scenario files, report formats and the command implementations

// Validation uses `!(x > 0.0)` and the like on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod cli;
pub mod equilibrium;
pub mod error;
pub mod fbm;
pub mod girsanov;
pub mod verify;

pub use error::{Error, ErrorClass, Result};
