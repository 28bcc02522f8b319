use serde::Serialize;

use super::spec::GameSpec;
use crate::calculus::quadrature::{converge, graded_rule};
use crate::calculus::QuadratureConfig;
use crate::error::{Error, Result};
use crate::girsanov::GirsanovKernel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub quad: QuadratureConfig,
    /// Relative budget tolerance: `|budget(m*) - x| <= m_tol * x`.
    pub m_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            quad: QuadratureConfig::with_tol(1e-10),
            m_tol: 1e-12,
        }
    }
}

/// `budget(m) = sum_i m^{1/(gamma_i - 1)} I_i + m^{1/(gamma' - 1)} J`; the
/// integrals do not depend on `m` and are computed once.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetIntegrals {
    pub running: Vec<f64>,
    pub terminal: f64,
    #[serde(skip)]
    running_powers: Vec<f64>,
    #[serde(skip)]
    terminal_power: f64,
}

/// `exp(p(p-1)/2 sigma^2)`-type factor for `E[rho^{gamma/(gamma-1)}]`.
fn moment_factor(gamma: f64, norm_sq: f64) -> f64 {
    (gamma * norm_sq / (2.0 * (1.0 - gamma).powi(2))).exp()
}

impl BudgetIntegrals {
    pub fn new(spec: &GameSpec, kernel: &GirsanovKernel, quad: &QuadratureConfig) -> Result<Self> {
        let t_end = spec.horizon;
        let mut running = Vec::with_capacity(spec.n_players());
        for p in &spec.players {
            if !p.running {
                running.push(0.0);
                continue;
            }
            let g = p.gamma;
            let e = 1.0 / (g - 1.0);
            let scale = (p.b / p.c).powf(e);
            let integrand = |t: f64| {
                p.alpha.eval(t).powf(g * e) * (-spec.r * t * g * e).exp() * moment_factor(g, kernel.zeta_norm_sq(t))
            };
            let mut cuts = vec![0.0];
            cuts.extend(p.alpha.breakpoints(0.0, t_end));
            cuts.push(t_end);
            let v = converge(quad, |grading| {
                Ok(cuts
                    .windows(2)
                    .flat_map(|w| graded_rule(w[0], w[1], 0.0, 0.0, grading))
                    .map(|n| n.w * integrand(n.x))
                    .sum())
            })?;
            running.push(scale * v);
        }
        let gp = spec.gamma_prime;
        let terminal = (-spec.r * t_end * gp / (gp - 1.0)).exp() * moment_factor(gp, kernel.norm_sq());
        Ok(Self {
            running,
            terminal,
            running_powers: spec.players.iter().map(|p| 1.0 / (p.gamma - 1.0)).collect(),
            terminal_power: 1.0 / (gp - 1.0),
        })
    }

    pub fn evaluate(&self, m: f64) -> f64 {
        let run: f64 = self
            .running
            .iter()
            .zip(&self.running_powers)
            .map(|(i, e)| if *i == 0.0 { 0.0 } else { m.powf(*e) * i })
            .sum();
        run + m.powf(self.terminal_power) * self.terminal
    }

    /// Running budget term of each player at `m`.
    pub fn running_terms(&self, m: f64) -> Vec<f64> {
        self.running
            .iter()
            .zip(&self.running_powers)
            .map(|(i, e)| if *i == 0.0 { 0.0 } else { m.powf(*e) * i })
            .collect()
    }

    pub fn terminal_term(&self, m: f64) -> f64 {
        m.powf(self.terminal_power) * self.terminal
    }
}

/// Present value of all claims under the drift-free measure at multiplier `m`.
pub fn budget(m: f64, spec: &GameSpec, quad: &QuadratureConfig) -> Result<f64> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::invalid("m", "multiplier must be positive and finite"));
    }
    spec.validate()?;
    let kernel = GirsanovKernel::new(spec.c, spec.horizon, spec.hurst)?;
    Ok(BudgetIntegrals::new(spec, &kernel, quad)?.evaluate(m))
}

#[derive(Debug, Clone)]
pub struct EquilibriumSolution {
    spec: GameSpec,
    kernel: GirsanovKernel,
    integrals: BudgetIntegrals,
    m_star: f64,
    residual: f64,
    config: SolverConfig,
}

/// Solves `budget(m) = x` by geometric bracketing and bisection in `log m`.
pub fn solve_m_star(spec: &GameSpec, config: &SolverConfig) -> Result<EquilibriumSolution> {
    spec.validate()?;
    config.quad.validate()?;
    if !(config.m_tol > 0.0 && config.m_tol < 1.0) {
        return Err(Error::invalid("m_tol", "must lie in (0, 1)"));
    }
    let kernel = GirsanovKernel::new(spec.c, spec.horizon, spec.hurst)?;
    let integrals = BudgetIntegrals::new(spec, &kernel, &config.quad)?;
    let x = spec.x;
    let f = |m: f64| integrals.evaluate(m) - x;

    let (mut lo, mut hi) = (1.0f64, 1.0f64);
    for _ in 0..2000 {
        if f(lo) > 0.0 {
            break;
        }
        lo *= 0.5;
        if lo == 0.0 {
            return Err(Error::BracketExhausted { lo, hi });
        }
    }
    for _ in 0..2000 {
        if f(hi) < 0.0 {
            break;
        }
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::BracketExhausted { lo, hi });
        }
    }
    if !(f(lo) > 0.0 && f(hi) < 0.0) {
        let r = f(lo);
        if r == 0.0 {
            return Ok(EquilibriumSolution::new(spec, kernel, integrals, lo, 0.0, config));
        }
        return Err(Error::BracketExhausted { lo, hi });
    }
    let mut best = (lo, f(lo));
    for _ in 0..400 {
        let mid = (0.5 * (lo.ln() + hi.ln())).exp();
        let r = f(mid);
        if r.abs() < best.1.abs() {
            best = (mid, r);
        }
        if r.abs() <= config.m_tol * x {
            return Ok(EquilibriumSolution::new(spec, kernel, integrals, mid, r, config));
        }
        if r > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 <= 4.0 * f64::EPSILON {
            break;
        }
    }
    if best.1.abs() <= config.m_tol * x {
        return Ok(EquilibriumSolution::new(
            spec, kernel, integrals, best.0, best.1, config,
        ));
    }
    Err(Error::BracketExhausted { lo, hi })
}

/// Machine-readable summary of a solved game.
#[derive(Debug, Clone, Serialize)]
pub struct SolutionSummary {
    pub n_players: usize,
    pub x: f64,
    pub m_star: f64,
    pub budget_residual: f64,
    pub k_h: f64,
    pub k_norm_sq: f64,
    pub running_budget_terms: Vec<f64>,
    pub terminal_budget_term: f64,
    pub expected_terminal_state: f64,
    pub eta_moment_terminal_power: f64,
    pub eta_moment_budget_power: f64,
}

impl EquilibriumSolution {
    fn new(
        spec: &GameSpec,
        kernel: GirsanovKernel,
        integrals: BudgetIntegrals,
        m_star: f64,
        residual: f64,
        config: &SolverConfig,
    ) -> Self {
        Self {
            spec: spec.clone(),
            kernel,
            integrals,
            m_star,
            residual,
            config: *config,
        }
    }

    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    pub fn kernel(&self) -> &GirsanovKernel {
        &self.kernel
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn m_star(&self) -> f64 {
        self.m_star
    }

    /// `budget(m*) - x`.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn integrals(&self) -> &BudgetIntegrals {
        &self.integrals
    }

    pub fn budget(&self, m: f64) -> f64 {
        self.integrals.evaluate(m)
    }

    /// Lagrange multiplier `lambda_i = m* b_i`.
    pub fn lambda(&self, i: usize) -> f64 {
        self.m_star * self.spec.players[i].b
    }

    /// `A_i(u) = alpha_i^{g/(g-1)} (m b_i/c_i)^{1/(g-1)} e^{-r u g/(g-1)}`, so that
    /// the discounted spending rate is `A_i(u) rho(u)^{1/(g-1)}`.
    pub fn coefficient_a(&self, i: usize, u: f64) -> f64 {
        let p = &self.spec.players[i];
        if !p.running {
            return 0.0;
        }
        let e = 1.0 / (p.gamma - 1.0);
        p.alpha.eval(u).powf(p.gamma * e) * (self.lambda(i) / p.c).powf(e) * (-self.spec.r * u * p.gamma * e).exp()
    }

    /// Time integrand of player `i`'s budget term at `m*`.
    pub fn running_density(&self, i: usize, t: f64) -> f64 {
        let g = self.spec.players[i].gamma;
        self.coefficient_a(i, t) * moment_factor(g, self.kernel.zeta_norm_sq(t))
    }

    /// `F = terminal_scale * eta(T)^{1/(gamma'-1)}`.
    pub fn terminal_scale(&self) -> f64 {
        let e = 1.0 / (self.spec.gamma_prime - 1.0);
        self.m_star.powf(e) * (-self.spec.r * self.spec.horizon * e).exp()
    }

    /// `E[F]` in closed form.
    pub fn expected_terminal(&self) -> f64 {
        let gp = self.spec.gamma_prime;
        self.terminal_scale() * ((2.0 - gp) * self.kernel.norm_sq() / (2.0 * (1.0 - gp).powi(2))).exp()
    }

    /// `E[eta(T)^p]` for a lognormal density with variance `|K|^2`.
    pub fn eta_moment(&self, p: f64) -> f64 {
        (0.5 * p * (p - 1.0) * self.kernel.norm_sq()).exp()
    }

    pub fn summary(&self) -> SolutionSummary {
        let gp = self.spec.gamma_prime;
        SolutionSummary {
            n_players: self.spec.n_players(),
            x: self.spec.x,
            m_star: self.m_star,
            budget_residual: self.residual,
            k_h: self.kernel.k_h(),
            k_norm_sq: self.kernel.norm_sq(),
            running_budget_terms: self.integrals.running_terms(self.m_star),
            terminal_budget_term: self.integrals.terminal_term(self.m_star),
            expected_terminal_state: self.expected_terminal(),
            eta_moment_terminal_power: self.eta_moment(1.0 / (gp - 1.0)),
            eta_moment_budget_power: self.eta_moment(gp / (gp - 1.0)),
        }
    }
}
