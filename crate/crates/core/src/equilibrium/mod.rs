//! Nash equilibrium of the linear game: the budget equation for the
//! Lagrange scale, the pointwise maximizers, the martingale-representation
//! integrand and simulated state paths.

mod paths;
mod solver;
mod spec;

pub use paths::{allocate_v, AllocationPolicy, GridEquilibrium, Objective, StrategyTrace};
pub use solver::{budget, solve_m_star, BudgetIntegrals, EquilibriumSolution, SolutionSummary, SolverConfig};
pub use spec::{Coefficient, GameSpec, PlayerSpec};
