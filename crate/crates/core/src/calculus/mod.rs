//! Quadrature against the fBm kernel, Wiener integrals of deterministic
//! integrands and the first-kind integral equation.

mod first_kind;
mod function;
mod inner;
pub mod quadrature;
mod wiener;

pub use first_kind::{explicit_inversion, explicit_inversion_with, solve_first_kind, FirstKindSolution};
pub use function::RealFunction;
pub use inner::{beta_fn, i_phi, i_phi_inner, phi_inner, potential, riesz_potential};
pub use quadrature::{QuadratureConfig, SingularityRule};
pub use wiener::{cell_weights, wiener_integral, wiener_integral_with};
