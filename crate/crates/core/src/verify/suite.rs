use serde::{Deserialize, Serialize};

use crate::equilibrium::{solve_m_star, EquilibriumSolution, GameSpec, SolverConfig};
use crate::error::Result;
use crate::fbm::Method;
use crate::girsanov::GirsanovKernel;

use super::checks::*;
use super::report::McReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    FbmCovariance,
    WickExpMean,
    EtaMoments,
    RhoProjection,
    GirsanovDrift,
    BudgetMc,
    RunningMoment,
    TerminalMoment,
    Argmax,
    EndpointConsistency,
    HHalfLimit,
}

impl Check {
    pub const ALL: [Check; 11] = [
        Check::FbmCovariance,
        Check::WickExpMean,
        Check::EtaMoments,
        Check::RhoProjection,
        Check::GirsanovDrift,
        Check::BudgetMc,
        Check::RunningMoment,
        Check::TerminalMoment,
        Check::Argmax,
        Check::EndpointConsistency,
        Check::HHalfLimit,
    ];
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub spec: GameSpec,
    pub solver: SolverConfig,
    pub grid: usize,
    pub paths: usize,
    pub seed: u64,
    pub method: Method,
    pub checks: Vec<Check>,
    pub endpoint_paths: usize,
    pub argmax_pairs: usize,
}

impl SuiteConfig {
    /// Every check at the given sizing.
    pub fn new(spec: GameSpec, grid: usize, paths: usize, seed: u64) -> Self {
        Self {
            spec,
            solver: SolverConfig::default(),
            grid,
            paths,
            seed,
            method: Method::Circulant,
            checks: Check::ALL.to_vec(),
            endpoint_paths: 1000,
            argmax_pairs: 100,
        }
    }
}

/// Runs the configured checks in order. The output depends only on the
/// configuration, never on thread scheduling.
pub fn run_suite(cfg: &SuiteConfig) -> Result<Vec<McReport>> {
    if cfg.checks.is_empty() {
        return Ok(Vec::new());
    }
    cfg.spec.validate()?;
    let needs_solution = cfg.checks.iter().any(|c| {
        matches!(
            c,
            Check::BudgetMc | Check::RunningMoment | Check::TerminalMoment | Check::Argmax | Check::EndpointConsistency
        )
    });
    let sol: Option<EquilibriumSolution> = if needs_solution {
        Some(solve_m_star(&cfg.spec, &cfg.solver)?)
    } else {
        None
    };
    let spec = &cfg.spec;
    let kernel = GirsanovKernel::new(spec.c, spec.horizon, spec.hurst)?;
    let mc = McParams {
        grid: cfg.grid,
        count: cfg.paths,
        seed: cfg.seed,
        method: cfg.method,
    };
    let mut out = Vec::new();
    for check in &cfg.checks {
        let sol = sol.as_ref();
        match check {
            Check::FbmCovariance => out.extend(check_fbm_covariance(spec.hurst, spec.horizon, &mc)?),
            Check::WickExpMean => out.extend(check_wick_exp_mean(&kernel, &mc)?),
            Check::EtaMoments => out.extend(check_eta_moments(&kernel, spec.gamma_prime, &mc)?),
            Check::RhoProjection => out.extend(check_rho_projection(
                &kernel,
                0.5 * spec.horizon,
                0.25 * spec.horizon,
                &mc,
            )?),
            Check::GirsanovDrift => out.extend(check_girsanov_drift(&kernel, &mc)?),
            Check::BudgetMc => out.push(check_budget_mc(sol.expect("solved"), &mc)?),
            Check::RunningMoment => out.extend(check_running_moment(sol.expect("solved"), &mc)?),
            Check::TerminalMoment => out.extend(check_terminal_moment(sol.expect("solved"), &mc)?),
            Check::Argmax => out.extend(check_argmax(sol.expect("solved"), cfg.argmax_pairs, &mc)?),
            Check::EndpointConsistency => {
                let ep = McParams {
                    count: cfg.endpoint_paths,
                    ..mc
                };
                out.extend(check_endpoint_consistency(sol.expect("solved"), &ep)?)
            }
            Check::HHalfLimit => out.extend(check_h_half_limit(spec.c, spec.horizon, cfg.seed)?),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{Coefficient, PlayerSpec};
    use crate::fbm::HurstParam;

    fn config() -> SuiteConfig {
        let spec = GameSpec {
            players: vec![PlayerSpec {
                alpha: Coefficient::Constant(1.0),
                beta: Coefficient::Constant(1.0),
                c: 1.0,
                b: 1.0,
                gamma: 0.5,
                running: false,
            }],
            r: 0.0,
            c: 1.0,
            horizon: 1.0,
            hurst: HurstParam::new(0.75).unwrap(),
            gamma_prime: 0.5,
            x: 1.0,
        };
        let mut cfg = SuiteConfig::new(spec, 16, 400, 11);
        cfg.endpoint_paths = 20;
        cfg.argmax_pairs = 10;
        cfg
    }

    #[test]
    fn empty_check_list_gives_empty_report() {
        let mut cfg = config();
        cfg.checks.clear();
        assert!(run_suite(&cfg).unwrap().is_empty());
    }

    #[test]
    fn same_seed_same_report() {
        let cfg = config();
        let a = run_suite(&cfg).unwrap();
        let b = run_suite(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.pass == r.recompute_pass()));
    }

    #[test]
    fn checks_are_order_independent() {
        let mut cfg = config();
        cfg.checks = vec![Check::EtaMoments, Check::FbmCovariance];
        let ab = run_suite(&cfg).unwrap();
        cfg.checks.reverse();
        let ba = run_suite(&cfg).unwrap();
        assert_eq!(ab[..2], ba[6..]);
        assert_eq!(ab[2..], ba[..6]);
    }
}
