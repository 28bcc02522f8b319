use proptest::prelude::*;

use fracgame::calculus::QuadratureConfig;
use fracgame::cli::{emit_report, parse_jsonl, ReportFormat, Scenario};
use fracgame::equilibrium::{budget, solve_m_star, Coefficient, GameSpec, PlayerSpec, SolverConfig};
use fracgame::fbm::{autocov, FbmSampler, HurstParam, Method, TimeGrid};
use fracgame::girsanov::GirsanovKernel;
use fracgame::verify::{refinement_allowance, McReport};

fn spec(c: f64, x: f64, gammas: &[f64], h: f64) -> GameSpec {
    GameSpec {
        players: gammas
            .iter()
            .map(|&g| PlayerSpec {
                alpha: Coefficient::Constant(1.0),
                beta: Coefficient::Constant(1.0),
                c: 1.0,
                b: 1.0,
                gamma: g,
                running: true,
            })
            .collect(),
        r: 0.0,
        c,
        horizon: 1.0,
        hurst: HurstParam::new(h).unwrap(),
        gamma_prime: 0.5,
        x,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn autocov_is_symmetric_and_cauchy_schwarz(s in 0.0..2.0f64, t in 0.0..2.0f64, h in 0.51..0.99f64) {
        let h = HurstParam::new(h).unwrap();
        let (st, ts) = (autocov(s, t, h), autocov(t, s, h));
        prop_assert_eq!(st, ts);
        prop_assert!(st * st <= autocov(s, s, h) * autocov(t, t, h) * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn samplers_agree_on_the_start_and_are_reproducible(seed in any::<u64>(), stream in 0u64..1000) {
        let grid = TimeGrid::new(1.0, 16).unwrap();
        let h = HurstParam::new(0.7).unwrap();
        for m in [Method::Cholesky, Method::Circulant] {
            let s = FbmSampler::new(grid.clone(), h, m, seed).unwrap();
            let (a, b) = (s.path(stream), s.path(stream));
            prop_assert_eq!(a.values[0], 0.0);
            prop_assert_eq!(&a, &b);
        }
    }

    #[test]
    fn coarsening_keeps_even_points(seed in any::<u64>()) {
        let s = FbmSampler::new(TimeGrid::new(1.0, 16).unwrap(), HurstParam::new(0.8).unwrap(), Method::Circulant, seed).unwrap();
        let fine = s.path(3);
        let coarse = fine.coarsened().unwrap();
        for (k, v) in coarse.values.iter().enumerate() {
            prop_assert_eq!(*v, fine.values[2 * k]);
        }
    }

    #[test]
    fn zeta_norm_is_monotone_in_u(u in 0.05..1.0f64, du in 0.0..0.5f64, c in -2.0..2.0f64) {
        let k = GirsanovKernel::new(c, 1.0, HurstParam::new(0.75).unwrap()).unwrap();
        let v = (u + du).min(1.0);
        prop_assert!(k.zeta_norm_sq(u) <= k.zeta_norm_sq(v) * (1.0 + 1e-14));
        prop_assert!(k.truncated_norm_sq(v, u) <= k.zeta_norm_sq(v) * (1.0 + 1e-5) + 1e-15);
    }

    #[test]
    fn budget_is_decreasing_and_homogeneous(m in 0.05..20.0f64, c in 0.0..1.5f64) {
        let s = spec(c, 1.0, &[0.3, 0.6], 0.7);
        let q = QuadratureConfig::with_tol(1e-8);
        prop_assert!(budget(2.0 * m, &s, &q).unwrap() < budget(m, &s, &q).unwrap());
        // one player: budget(m) scales as m^{1/(gamma-1)}
        let one = spec(c, 1.0, &[0.5], 0.7);
        let ratio = budget(2.0 * m, &one, &q).unwrap() / budget(m, &one, &q).unwrap();
        prop_assert!((ratio - 0.25).abs() < 1e-12);
    }

    #[test]
    fn solved_budget_meets_the_initial_state(x in 0.1..10.0f64, c in -1.0..1.0f64) {
        let s = spec(c, x, &[0.4], 0.8);
        let sol = solve_m_star(&s, &SolverConfig::default()).unwrap();
        prop_assert!(sol.residual().abs() <= 1e-12 * x);
        prop_assert!((sol.budget(sol.m_star()) - x).abs() <= 1e-11 * x);
    }

    #[test]
    fn table_coefficients_stay_within_their_values(t in -0.5..1.5f64, a in 0.1..5.0f64, b in 0.1..5.0f64) {
        let coef = Coefficient::Table(vec![[0.0, a], [0.5, b], [1.0, a]]);
        let v = coef.eval(t);
        prop_assert!(v >= a.min(b) - 1e-12 && v <= a.max(b) + 1e-12);
    }

    #[test]
    fn report_pass_flag_is_recomputable(est in -10.0..10.0f64, tgt in -10.0..10.0f64, se in 0.0..1.0f64, fine in -10.0..10.0f64) {
        let allowance = refinement_allowance(est, fine, tgt);
        prop_assert!(allowance >= 0.0 && allowance <= 0.02 * tgt.abs());
        let r = McReport::new("p", est, tgt, se, allowance, 10, 4, 1);
        prop_assert_eq!(r.pass, r.recompute_pass());
        let mut buf = Vec::new();
        emit_report(std::slice::from_ref(&r), ReportFormat::Jsonl, &mut buf).unwrap();
        let back = parse_jsonl(std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert_eq!(&back[0], &r);
    }

    #[test]
    fn scenario_round_trips(c in -2.0..2.0f64, h in 0.51..0.99f64, x in 0.1..5.0f64, g in 0.05..0.95f64) {
        let s = spec(c, x, &[g, 1.0 - g], h);
        let sc = Scenario::from_spec(&s, Default::default(), Default::default());
        let back = Scenario::from_json(&sc.to_json()).unwrap();
        prop_assert_eq!(back.spec().unwrap(), s);
    }
}
