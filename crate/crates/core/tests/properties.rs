use proptest::prelude::*;

use extremal_core::solver::jacobian;
use extremal_core::stability::hoelder_probe;
use extremal_core::{
    alpha_star, newton_solve, nf_threshold, pf_eval, residual, trace_branch, ContinuationSettings,
    NewtonSettings, Nonlinearity, RadialGrid, SolutionPair,
};

fn preset(k: usize) -> Nonlinearity {
    match k {
        0 => Nonlinearity::exponential(),
        1 => Nonlinearity::power(2.0).unwrap(),
        2 => Nonlinearity::power(4.5).unwrap(),
        3 => Nonlinearity::exp_power(1.0).unwrap(),
        _ => Nonlinearity::exp_power(0.5).unwrap(),
    }
}

/// State `(u, v)` and direction `(du, dv)`.
type State = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>);

fn state(m: usize) -> impl Strategy<Value = State> {
    let w = || prop::collection::vec(0.0f64..3.0, m);
    (w(), w(), prop::collection::vec(-1.0f64..1.0, m), prop::collection::vec(-1.0f64..1.0, m))
}

/// Preset index, `N`, `λ`, `γ` and a state.
fn case() -> impl Strategy<Value = (usize, f64, f64, f64, State)> {
    (0usize..5, 1.0f64..12.0, 0.1f64..5.0, 0.1f64..5.0, 16usize..96)
        .prop_flat_map(|(k, n, l, g, m)| (Just(k), Just(n), Just(l), Just(g), state(m)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jacobian_matches_central_differences((k, n, lambda, gamma, (u, v, du, dv)) in case()) {
        let f = preset(k);
        let g = RadialGrid::new(n, u.len()).unwrap();
        let (ju, jv) = jacobian(&g, &f, lambda, gamma, &u, &v).unwrap().apply(&du, &dv);
        let h = 1e-6;
        let at = |s: f64| {
            let a: Vec<f64> = u.iter().zip(&du).map(|(x, d)| x + s * d).collect();
            let b: Vec<f64> = v.iter().zip(&dv).map(|(x, d)| x + s * d).collect();
            residual(&g, &f, lambda, gamma, &a, &b).unwrap()
        };
        let (p, q) = (at(h), at(-h));
        let scale = ju.iter().chain(&jv).fold(0.0f64, |a, x| a.max(x.abs()));
        for i in 0..u.len() {
            prop_assert!(((p.0[i] - q.0[i]) / (2.0 * h) - ju[i]).abs() < 1e-6 * scale);
            prop_assert!(((p.1[i] - q.1[i]) / (2.0 * h) - jv[i]).abs() < 1e-6 * scale);
        }
    }

    #[test]
    fn residual_commutes_with_the_swap((k, n, lambda, gamma, (u, v, _, _)) in case()) {
        let f = preset(k);
        let g = RadialGrid::new(n, u.len()).unwrap();
        let (ru, rv) = residual(&g, &f, lambda, gamma, &u, &v).unwrap();
        let (su, sv) = residual(&g, &f, gamma, lambda, &v, &u).unwrap();
        prop_assert_eq!(ru, sv);
        prop_assert_eq!(rv, su);
    }

    #[test]
    fn hoelder_step_holds_on_arbitrary_states(
        (k, n, lambda, gamma, (u, v, _, _)) in case(),
        alpha in 1.01f64..5.0,
    ) {
        let f = preset(k);
        let g = RadialGrid::new(n, u.len()).unwrap();
        let sol = SolutionPair { u, v, lambda, gamma, residual_norm: 0.0, converged: true, newton_iters: 0 };
        let h = hoelder_probe(&g, &sol, &f, alpha).unwrap();
        prop_assert!(h.holds(1e-10), "{h:?}");
    }

    #[test]
    fn threshold_root_properties(a in 1e-3f64..1.999, b in 1e-3f64..1.999) {
        let (tm, tp) = (a.min(b), a.max(b));
        let alpha = alpha_star(tm, tp).unwrap();
        prop_assert!(alpha > 1.0);
        prop_assert!(pf_eval(alpha, tm, tp).abs() < 1e-9 * (1.0 + alpha * alpha));
        let n = nf_threshold(tm, tp).unwrap();
        prop_assert!(n > 4.0 && n >= 2.0 * alpha * (2.0 - tp) + 2.0 * tp - 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn swapped_parameters_give_swapped_solutions(n in 1.0f64..6.0, lambda in 0.05f64..0.6, gamma in 0.05f64..0.6) {
        let f = Nonlinearity::exponential();
        let g = RadialGrid::new(n, 64).unwrap();
        let z = vec![0.0; 64];
        let s = NewtonSettings::default();
        let a = newton_solve(&g, &f, lambda, gamma, (&z, &z), &s).unwrap();
        let b = newton_solve(&g, &f, gamma, lambda, (&z, &z), &s).unwrap();
        for i in 0..64 {
            prop_assert!((a.u[i] - b.v[i]).abs() < 1e-9 && (a.v[i] - b.u[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn branch_invariants(n in 1.0f64..5.0, sigma in 0.2f64..=1.0) {
        let g = RadialGrid::new(n, 64).unwrap();
        let settings = ContinuationSettings { lambda_min_step: 1e-6, ..ContinuationSettings::default() };
        let b = trace_branch(&g, &Nonlinearity::exponential(), sigma, &settings).unwrap();
        prop_assert!(b.points.len() > 2);
        for w in b.points.windows(2) {
            prop_assert!(w[1].lambda > w[0].lambda);
            prop_assert!(w[1].sup_u >= w[0].sup_u && w[1].sup_v >= w[0].sup_v);
        }
        for p in &b.points {
            prop_assert!(p.mu1 >= -1e-6 && p.eta >= -1e-6);
            prop_assert!(p.comparison_violation <= settings.check_tolerance());
            prop_assert!((p.gamma - sigma * p.lambda).abs() <= 1e-12 * p.lambda);
        }
        prop_assert!(b.lambda_star > b.last().lambda && b.lambda_star_bracket <= 2e-6);
    }
}
