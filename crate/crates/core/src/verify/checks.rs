//! Individual verification checks. Each check draws its paths from its own
//! stream range so that checks never share randomness.

use crate::calculus::{cell_weights, wiener_integral_with, RealFunction};
use crate::equilibrium::{EquilibriumSolution, GridEquilibrium, Objective};
use crate::error::{Error, Result};
use crate::fbm::{autocov, autocov_raw, FbmPath, FbmSampler, HurstParam, Method, TimeGrid};
use crate::girsanov::{DensityEvaluator, GirsanovKernel};

use super::report::{refinement_allowance, McReport, Stat};

/// Monte Carlo sizing shared by the checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McParams {
    pub grid: usize,
    pub count: usize,
    pub seed: u64,
    pub method: Method,
}

/// FNV-1a hash of a check name; the stream range of a check starts at
/// `hash << 32`.
pub fn stream_base(check: &str) -> u64 {
    let mut h: u32 = 0x811c_9dc5;
    for b in check.bytes() {
        h ^= b as u32;
        h = h.wrapping_mul(0x0100_0193);
    }
    (h as u64) << 32
}

const CHUNK: usize = 4096;

/// Runs `f` on `count` paths of the `n`-step grid, accumulating one `Stat`
/// per returned component, in stream order.
fn accumulate<F>(sampler: &FbmSampler, base: u64, count: usize, f: F) -> Result<Vec<Stat>>
where
    F: Fn(&FbmPath) -> Result<Vec<f64>> + Sync,
{
    let mut stats: Vec<Stat> = Vec::new();
    let mut done = 0;
    while done < count {
        let take = CHUNK.min(count - done);
        for row in sampler.map_paths(base + done as u64, take, &f) {
            let row = row?;
            if stats.is_empty() {
                stats = vec![Stat::default(); row.len()];
            }
            for (s, v) in stats.iter_mut().zip(row) {
                s.push(v);
            }
        }
        done += take;
    }
    Ok(stats)
}

/// As [`accumulate`], but paths are drawn on the `2n`-step grid and `f` is
/// applied to both the fine path and its exact coarsening; returns
/// `(coarse, fine)` statistics.
fn accumulate_pair<F>(
    hurst: HurstParam,
    horizon: f64,
    p: &McParams,
    check: &str,
    f: F,
) -> Result<(Vec<Stat>, Vec<Stat>)>
where
    F: Fn(usize, &FbmPath) -> Result<Vec<f64>> + Sync,
{
    let fine_grid = TimeGrid::new(horizon, 2 * p.grid)?;
    let sampler = FbmSampler::new(fine_grid, hurst, p.method, p.seed)?;
    let stats = accumulate(&sampler, stream_base(check), p.count, |fine| {
        let coarse = fine.coarsened()?;
        let mut row = f(0, &coarse)?;
        row.extend(f(1, fine)?);
        Ok(row)
    })?;
    let half = stats.len() / 2;
    Ok((stats[..half].to_vec(), stats[half..].to_vec()))
}

fn refined_report(name: String, target: f64, coarse: &Stat, fine: &Stat, p: &McParams) -> McReport {
    McReport::new(
        name,
        coarse.mean(),
        target,
        coarse.stderr(),
        refinement_allowance(coarse.mean(), fine.mean(), target),
        coarse.count(),
        p.grid,
        p.seed,
    )
}

fn grids(horizon: f64, n: usize) -> Result<[TimeGrid; 2]> {
    Ok([TimeGrid::new(horizon, n)?, TimeGrid::new(horizon, 2 * n)?])
}

fn index(grid: &TimeGrid, t: f64) -> Result<usize> {
    grid.index_of(t)
        .ok_or_else(|| Error::GridMismatch(format!("t = {t} is not a point of the {}-step grid", grid.steps())))
}

/// Sample covariance of `B_s B_t` at six fixed pairs against the fBm
/// autocovariance. Synthesis is exact, so no allowance is granted.
pub fn check_fbm_covariance(hurst: HurstParam, horizon: f64, p: &McParams) -> Result<Vec<McReport>> {
    const PAIRS: [(f64, f64); 6] = [
        (0.25, 0.25),
        (0.25, 0.5),
        (0.25, 1.0),
        (0.5, 0.5),
        (0.5, 1.0),
        (1.0, 1.0),
    ];
    let grid = TimeGrid::new(horizon, p.grid)?;
    let idx: Vec<(usize, usize)> = PAIRS
        .iter()
        .map(|&(s, t)| Ok((index(&grid, s * horizon)?, index(&grid, t * horizon)?)))
        .collect::<Result<_>>()?;
    let sampler = FbmSampler::new(grid, hurst, p.method, p.seed)?;
    let stats = accumulate(&sampler, stream_base("fbm_covariance"), p.count, |path| {
        Ok(idx.iter().map(|&(i, j)| path.values[i] * path.values[j]).collect())
    })?;
    Ok(PAIRS
        .iter()
        .zip(&stats)
        .map(|(&(s, t), st)| {
            McReport::new(
                format!("fbm_covariance[s={},t={}]", s * horizon, t * horizon),
                st.mean(),
                autocov(s * horizon, t * horizon, hurst),
                st.stderr(),
                0.0,
                st.count(),
                p.grid,
                p.seed,
            )
        })
        .collect())
}

/// Mean of the Wick exponential `exp(int f dB - |f|^2/2)` for `f` in
/// `{1, K, zeta_{T/2}}`; the target is one.
pub fn check_wick_exp_mean(kernel: &GirsanovKernel, p: &McParams) -> Result<Vec<McReport>> {
    let t_end = kernel.horizon();
    let h = kernel.hurst();
    let one = RealFunction::indicator(0.0, t_end)?;
    let k = kernel.k_function()?;
    let zeta = kernel.zeta_function(0.5 * t_end)?;
    let norms = [
        t_end.powf(2.0 * h.value()),
        kernel.norm_sq(),
        kernel.zeta_norm_sq(0.5 * t_end),
    ];
    let names = ["1", "K", "zeta_T/2"];
    let fs = [&one, &k, &zeta];
    let gs = grids(t_end, p.grid)?;
    let weights: Vec<Vec<Vec<f64>>> = gs
        .iter()
        .map(|g| fs.iter().map(|f| cell_weights(f, g)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let (coarse, fine) = accumulate_pair(h, t_end, p, "wick_exp_mean", |level, path| {
        weights[level]
            .iter()
            .zip(&norms)
            .map(|(w, n)| Ok((wiener_integral_with(w, path)? - 0.5 * n).exp()))
            .collect()
    })?;
    Ok((0..3)
        .map(|i| refined_report(format!("wick_exp_mean[f={}]", names[i]), 1.0, &coarse[i], &fine[i], p))
        .collect())
}

/// `E[eta(T)^p]` for `p = 1/(gamma'-1)` and `p = gamma'/(gamma'-1)`.
pub fn check_eta_moments(kernel: &GirsanovKernel, gamma_prime: f64, p: &McParams) -> Result<Vec<McReport>> {
    let powers = [1.0 / (gamma_prime - 1.0), gamma_prime / (gamma_prime - 1.0)];
    let gs = grids(kernel.horizon(), p.grid)?;
    let evs = [
        DensityEvaluator::new(kernel, &gs[0])?,
        DensityEvaluator::new(kernel, &gs[1])?,
    ];
    let (coarse, fine) = accumulate_pair(kernel.hurst(), kernel.horizon(), p, "eta_moments", |level, path| {
        let eta = evs[level].eta_t(path)?;
        Ok(powers.iter().map(|q| eta.powf(*q)).collect())
    })?;
    Ok(powers
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let target = (0.5 * q * (q - 1.0) * kernel.norm_sq()).exp();
            refined_report(format!("eta_moments[p={q}]"), target, &coarse[i], &fine[i], p)
        })
        .collect())
}

/// `E[B_{t'} eta(T)]` and `E[B_{t'} rho(t)]` against `-C t'`.
pub fn check_rho_projection(kernel: &GirsanovKernel, t: f64, t_prime: f64, p: &McParams) -> Result<Vec<McReport>> {
    if !(0.0..=t).contains(&t_prime) || t > kernel.horizon() {
        return Err(Error::invalid("t_prime", "need 0 <= t' <= t <= T"));
    }
    let gs = grids(kernel.horizon(), p.grid)?;
    let evs = [
        DensityEvaluator::new(kernel, &gs[0])?,
        DensityEvaluator::new(kernel, &gs[1])?,
    ];
    let idx = [
        (index(&gs[0], t)?, index(&gs[0], t_prime)?),
        (index(&gs[1], t)?, index(&gs[1], t_prime)?),
    ];
    let (coarse, fine) = accumulate_pair(kernel.hurst(), kernel.horizon(), p, "rho_projection", |level, path| {
        let (j, jp) = idx[level];
        let b = path.values[jp];
        Ok(vec![b * evs[level].eta_t(path)?, b * evs[level].rho(j, path)?])
    })?;
    let target = -kernel.c() * t_prime;
    Ok(vec![
        refined_report(
            format!("rho_projection[eta,t'={t_prime}]"),
            target,
            &coarse[0],
            &fine[0],
            p,
        ),
        refined_report(
            format!("rho_projection[rho(t={t}),t'={t_prime}]"),
            target,
            &coarse[1],
            &fine[1],
            p,
        ),
    ])
}

/// Under the reweighting by `eta(T)` the drifted trace `B + C t` has the
/// moments of an fBm.
pub fn check_girsanov_drift(kernel: &GirsanovKernel, p: &McParams) -> Result<Vec<McReport>> {
    let t_end = kernel.horizon();
    let gs = grids(t_end, p.grid)?;
    let evs = [
        DensityEvaluator::new(kernel, &gs[0])?,
        DensityEvaluator::new(kernel, &gs[1])?,
    ];
    let mids = [index(&gs[0], 0.5 * t_end)?, index(&gs[1], 0.5 * t_end)?];
    let c = kernel.c();
    let (coarse, fine) = accumulate_pair(kernel.hurst(), t_end, p, "girsanov_drift", |level, path| {
        let eta = evs[level].eta_t(path)?;
        let mid = path.values[mids[level]] + c * 0.5 * t_end;
        let end = path.terminal() + c * t_end;
        Ok(vec![eta * mid, eta * end, eta * end * end])
    })?;
    let var = t_end.powf(2.0 * kernel.hurst().value());
    Ok(vec![
        refined_report(
            format!("girsanov_drift[mean,t={}]", 0.5 * t_end),
            0.0,
            &coarse[0],
            &fine[0],
            p,
        ),
        refined_report(format!("girsanov_drift[mean,t={t_end}]"), 0.0, &coarse[1], &fine[1], p),
        refined_report(
            format!("girsanov_drift[second_moment,t={t_end}]"),
            var,
            &coarse[2],
            &fine[2],
            p,
        ),
    ])
}

/// Importance-sampled present value of all claims against `x`: the terminal
/// claim weighted by `eta(T)` plus the running spending weighted by `rho(t)`
/// and integrated in time by the trapezoid rule.
pub fn check_budget_mc(sol: &EquilibriumSolution, p: &McParams) -> Result<McReport> {
    let spec = sol.spec();
    let gs = grids(spec.horizon, p.grid)?;
    let ges = [GridEquilibrium::new(sol, &gs[0])?, GridEquilibrium::new(sol, &gs[1])?];
    let disc = (-spec.r * spec.horizon).exp();
    let running: Vec<usize> = (0..spec.n_players()).filter(|&i| spec.players[i].running).collect();
    let (coarse, fine) = accumulate_pair(spec.hurst, spec.horizon, p, "budget_mc", |level, path| {
        let ge = &ges[level];
        let dens = ge.densities();
        let eta = dens.eta_t(path)?;
        let mut total = eta * disc * ge.f_given_eta(eta);
        if !running.is_empty() {
            let grid = ge.grid();
            let h = grid.step_size();
            for j in 0..=grid.steps() {
                let t = grid.t(j);
                let rho = dens.rho(j, path)?;
                let w = if j == 0 || j == grid.steps() { 0.5 * h } else { h };
                for &i in &running {
                    let alpha = spec.players[i].alpha.eval(t);
                    total += w * rho * (-spec.r * t).exp() * alpha * ge.u_given_rho(i, t, rho);
                }
            }
        }
        Ok(vec![total])
    })?;
    Ok(refined_report("budget_mc".into(), spec.x, &coarse[0], &fine[0], p))
}

/// `E[rho(t) e^{-rt} alpha_i(t) u_i(t)]` at `t = T/2` against the budget
/// integrand, for every player with a running payoff.
pub fn check_running_moment(sol: &EquilibriumSolution, p: &McParams) -> Result<Vec<McReport>> {
    let spec = sol.spec();
    let running: Vec<usize> = (0..spec.n_players()).filter(|&i| spec.players[i].running).collect();
    if running.is_empty() {
        return Ok(Vec::new());
    }
    let t = 0.5 * spec.horizon;
    let gs = grids(spec.horizon, p.grid)?;
    let ges = [GridEquilibrium::new(sol, &gs[0])?, GridEquilibrium::new(sol, &gs[1])?];
    let idx = [index(&gs[0], t)?, index(&gs[1], t)?];
    let (coarse, fine) = accumulate_pair(spec.hurst, spec.horizon, p, "running_moment", |level, path| {
        let rho = ges[level].densities().rho(idx[level], path)?;
        Ok(running
            .iter()
            .map(|&i| rho * (-spec.r * t).exp() * spec.players[i].alpha.eval(t) * ges[level].u_given_rho(i, t, rho))
            .collect())
    })?;
    Ok(running
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            refined_report(
                format!("running_moment[player={},t={t}]", i + 1),
                sol.running_density(i, t),
                &coarse[k],
                &fine[k],
                p,
            )
        })
        .collect())
}

/// `E[F]` against its closed form, and the `eta`-weighted discounted claim
/// against the terminal budget term.
pub fn check_terminal_moment(sol: &EquilibriumSolution, p: &McParams) -> Result<Vec<McReport>> {
    let spec = sol.spec();
    let gs = grids(spec.horizon, p.grid)?;
    let ges = [GridEquilibrium::new(sol, &gs[0])?, GridEquilibrium::new(sol, &gs[1])?];
    let disc = (-spec.r * spec.horizon).exp();
    let (coarse, fine) = accumulate_pair(spec.hurst, spec.horizon, p, "terminal_moment", |level, path| {
        let eta = ges[level].densities().eta_t(path)?;
        let f = ges[level].f_given_eta(eta);
        Ok(vec![f, eta * disc * f])
    })?;
    Ok(vec![
        refined_report(
            "terminal_moment[mean]".into(),
            sol.expected_terminal(),
            &coarse[0],
            &fine[0],
            p,
        ),
        refined_report(
            "terminal_moment[weighted]".into(),
            sol.integrals().terminal_term(sol.m_star()),
            &coarse[1],
            &fine[1],
            p,
        ),
    ])
}

/// Pointwise optimality on `pairs` sampled `(t, path)` pairs: dominance over
/// 20 log-spaced alternatives in `[0.1, 10]` times the maximizer, strict
/// loss under a `1e-4` relative perturbation, and first-order conditions.
pub fn check_argmax(sol: &EquilibriumSolution, pairs: usize, p: &McParams) -> Result<Vec<McReport>> {
    let spec = sol.spec();
    let grid = TimeGrid::new(spec.horizon, p.grid)?;
    let ge = GridEquilibrium::new(sol, &grid)?;
    let sampler = FbmSampler::new(grid.clone(), spec.hurst, p.method, p.seed)?;
    let factors: Vec<f64> = (0..20).map(|k| 10f64.powf(-1.0 + 2.0 * k as f64 / 19.0)).collect();
    let n = grid.steps();
    let rows = sampler.map_paths(stream_base("argmax"), pairs, |path| -> Result<[f64; 5]> {
        // deterministic spread of interior times over the pairs
        let j = 1 + (path.stream as usize).wrapping_mul(7919) % (n - 1).max(1);
        let t = grid.t(j);
        let rho = ge.densities().rho(j, path)?;
        let eta = ge.densities().eta_t(path)?;
        let (mut trials, mut violations, mut strict_trials, mut strict_violations, mut foc) =
            (0.0, 0.0, 0.0, 0.0, 0.0f64);
        for (i, pl) in spec.players.iter().enumerate() {
            let mut cases = vec![(Objective::Terminal, ge.f_given_eta(eta), eta)];
            if pl.running {
                cases.push((Objective::Running, ge.u_given_rho(i, t, rho), rho));
                foc = foc.max(ge.running_foc(i, t, rho)?);
            }
            foc = foc.max(ge.terminal_foc(i, eta));
            for (which, best, dens) in cases {
                let v = ge.objective_given(i, best, t, dens, which)?;
                for f in &factors {
                    trials += 1.0;
                    if ge.objective_given(i, best * f, t, dens, which)? > v {
                        violations += 1.0;
                    }
                }
                for f in [1.0001, 1.0 / 1.0001] {
                    strict_trials += 1.0;
                    if ge.objective_given(i, best * f, t, dens, which)? >= v {
                        strict_violations += 1.0;
                    }
                }
            }
        }
        Ok([trials, violations, strict_trials, strict_violations, foc])
    });
    let mut acc = [0.0; 5];
    for r in rows {
        let r = r?;
        for k in 0..4 {
            acc[k] += r[k];
        }
        acc[4] = acc[4].max(r[4]);
    }
    Ok(vec![
        McReport::exact(
            "argmax[dominance]",
            acc[1] / acc[0].max(1.0),
            0.0,
            0.0,
            acc[0] as usize,
            p.grid,
            p.seed,
        ),
        McReport::exact(
            "argmax[strict]",
            acc[3] / acc[2].max(1.0),
            0.0,
            0.0,
            acc[2] as usize,
            p.grid,
            p.seed,
        ),
        McReport::exact("first_order_conditions", acc[4], 0.0, 1e-12, pairs, p.grid, p.seed),
    ])
}

/// Maximum relative gap between the conditional factors at their end point
/// and the corresponding powers of the densities.
pub fn check_endpoint_consistency(sol: &EquilibriumSolution, p: &McParams) -> Result<Vec<McReport>> {
    let spec = sol.spec();
    let grid = TimeGrid::new(spec.horizon, p.grid)?;
    let ge = GridEquilibrium::new(sol, &grid)?;
    let sampler = FbmSampler::new(grid.clone(), spec.hurst, p.method, p.seed)?;
    let n = grid.steps();
    let js: Vec<usize> = [n / 4, n / 2, n].into_iter().filter(|&j| j > 0).collect();
    let gp = spec.gamma_prime;
    let rows = sampler.map_paths(
        stream_base("endpoint_consistency"),
        p.count,
        |path| -> Result<[f64; 3]> {
            let eta = ge.densities().eta_t(path)?;
            let e = (ge.cond_eta_power(n, path)? / eta.powf(1.0 / (gp - 1.0)) - 1.0).abs();
            let (mut r, mut same) = (0.0f64, 0.0f64);
            for (i, pl) in spec.players.iter().enumerate() {
                for &j in &js {
                    let rho = ge.densities().rho(j, path)?;
                    let v = ge.cond_rho_power(i, grid.t(j), j, path)?;
                    r = r.max((v / rho.powf(1.0 / (pl.gamma - 1.0)) - 1.0).abs());
                }
                if pl.gamma == gp {
                    let a = ge.cond_rho_power(i, spec.horizon, n / 2, path)?;
                    let b = ge.cond_eta_power(n / 2, path)?;
                    same = same.max((a / b - 1.0).abs());
                }
            }
            Ok([e, r, same])
        },
    );
    let mut acc = [0.0f64; 3];
    for r in rows {
        let r = r?;
        for k in 0..3 {
            acc[k] = acc[k].max(r[k]);
        }
    }
    let mut out = vec![
        McReport::exact(
            "endpoint_consistency[eta,t=T]",
            acc[0],
            0.0,
            1e-12,
            p.count,
            p.grid,
            p.seed,
        ),
        McReport::exact(
            "endpoint_consistency[rho,t=u]",
            acc[1],
            0.0,
            1e-12,
            p.count,
            p.grid,
            p.seed,
        ),
    ];
    if spec.players.iter().any(|pl| pl.gamma == gp) {
        out.push(McReport::exact(
            "endpoint_consistency[rho=eta,u=T]",
            acc[2],
            0.0,
            1e-12,
            p.count,
            p.grid,
            p.seed,
        ));
    }
    Ok(out)
}

/// Near `H = 1/2` the kernel tends to the constant `C`, its norm to `C^2 T`
/// and the covariance to `min(s, t)`.
pub fn check_h_half_limit(c: f64, horizon: f64, seed: u64) -> Result<Vec<McReport>> {
    let h = HurstParam::new(0.501)?;
    let kernel = GirsanovKernel::new(c, horizon, h)?;
    let mut k_dev = 0.0f64;
    for s in [0.1, 0.3, 0.5, 0.7, 0.9] {
        k_dev = k_dev.max((kernel.kernel_k(s * horizon)? - c).abs());
    }
    let mut cov_dev = 0.0f64;
    for (s, t) in [
        (0.25, 0.25),
        (0.25, 0.5),
        (0.25, 1.0),
        (0.5, 0.5),
        (0.5, 1.0),
        (1.0, 1.0),
    ] {
        let (s, t) = (s * horizon, t * horizon);
        cov_dev = cov_dev.max((autocov_raw(s, t, h.value()) - s.min(t)).abs());
    }
    let norm_target = c * c * horizon;
    Ok(vec![
        McReport::exact("h_half_limit[kernel]", k_dev, 0.0, 1e-2 * c.abs(), 5, 0, seed),
        McReport::exact(
            "h_half_limit[norm]",
            kernel.norm_sq(),
            norm_target,
            0.02 * norm_target,
            1,
            0,
            seed,
        ),
        McReport::exact("h_half_limit[autocov]", cov_dev, 0.0, 1e-2 * horizon, 6, 0, seed),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(count: usize) -> McParams {
        McParams {
            grid: 32,
            count,
            seed: 7,
            method: Method::Circulant,
        }
    }

    #[test]
    fn stream_bases_are_distinct() {
        let names = [
            "fbm_covariance",
            "wick_exp_mean",
            "eta_moments",
            "rho_projection",
            "girsanov_drift",
            "budget_mc",
            "running_moment",
            "terminal_moment",
            "argmax",
            "endpoint_consistency",
        ];
        let mut bases: Vec<u64> = names.iter().map(|n| stream_base(n)).collect();
        bases.sort_unstable();
        bases.dedup();
        assert_eq!(bases.len(), names.len());
    }

    #[test]
    fn covariance_targets() {
        let h = HurstParam::new(0.75).unwrap();
        let r = check_fbm_covariance(h, 1.0, &params(2000)).unwrap();
        assert_eq!(r.len(), 6);
        assert!((r[5].target - 1.0).abs() < 1e-15);
        assert!((r[2].target - 0.237_740).abs() < 1e-5);
        assert!(r.iter().all(|x| x.pass && x.allowance == 0.0));
    }

    #[test]
    fn zero_drift_targets_are_trivial() {
        let k = GirsanovKernel::new(0.0, 1.0, HurstParam::new(0.7).unwrap()).unwrap();
        let eta = check_eta_moments(&k, 0.5, &params(500)).unwrap();
        for r in &eta {
            assert_eq!(r.target, 1.0);
            assert_eq!(r.estimate, 1.0);
            assert_eq!(r.stderr, 0.0);
        }
        let proj = check_rho_projection(&k, 0.5, 0.0, &params(500)).unwrap();
        assert!(proj.iter().all(|r| r.target == 0.0 && r.estimate == 0.0));
    }

    #[test]
    fn rejects_unordered_projection_times() {
        let k = GirsanovKernel::new(1.0, 1.0, HurstParam::new(0.7).unwrap()).unwrap();
        assert!(check_rho_projection(&k, 0.25, 0.5, &params(10)).is_err());
    }

    #[test]
    fn half_limit_passes() {
        assert!(check_h_half_limit(1.0, 1.0, 0).unwrap().iter().all(|r| r.pass));
    }
}
