//! Monte Carlo and oracle checks of the closed-form identities. Every check
//! yields [`McReport`]s whose pass flag follows the rule
//! `|estimate - target| <= 4*stderr + allowance`.

mod checks;
mod report;
mod suite;

pub use checks::{
    check_argmax, check_budget_mc, check_endpoint_consistency, check_eta_moments, check_fbm_covariance,
    check_girsanov_drift, check_h_half_limit, check_rho_projection, check_running_moment, check_terminal_moment,
    check_wick_exp_mean, stream_base, McParams,
};
pub use report::{refinement_allowance, McReport, Stat, RULE, STDERR_MULTIPLE};
pub use suite::{run_suite, Check, SuiteConfig};
