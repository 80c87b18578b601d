use distrl_core::dist::{quantile_project, DiscreteDistribution, ProjectionSpec};
use distrl_core::dp::{
    brute_force_optimal, evaluate_policy_exact, evaluate_policy_expected,
    evaluate_policy_projected, find_property_violation_seeded, plan_distributional, plan_expected,
    plan_exponential, PlanningTable,
};
use distrl_core::mdp::{build_chain, random_mdp, RandomMdpShape};
use distrl_core::qlearn::{learn, LearningConfig, LearningMode};
use distrl_core::{DeterministicPolicy, Functional, TabularMdp};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn model(seed: u64, shape: RandomMdpShape) -> TabularMdp {
    random_mdp(&mut ChaCha8Rng::seed_from_u64(seed), &shape)
}

fn small(seed: u64) -> TabularMdp {
    model(seed, RandomMdpShape::default())
}

fn random_policy(mdp: &TabularMdp, seed: u64) -> DeterministicPolicy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let actions = (0..mdp.horizon())
        .map(|_| {
            (0..mdp.num_states())
                .map(|_| rng.gen_range(0..mdp.num_actions()))
                .collect()
        })
        .collect();
    DeterministicPolicy::new(mdp, actions).unwrap()
}

fn hull_length(mdp: &TabularMdp) -> f64 {
    let (lo, hi) = mdp.return_hull();
    hi - lo
}

fn scalar(result: &distrl_core::dp::PlanningResult) -> &distrl_core::dp::QScalarTable {
    match &result.table {
        PlanningTable::Scalar(t) => t,
        PlanningTable::Distribution(_) => panic!("expected a scalar table"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_models_are_valid_and_round_trip(seed in any::<u64>()) {
        let mdp = small(seed);
        prop_assert!(mdp.validate().is_ok());
        let text = mdp.to_json_string();
        let back = TabularMdp::from_json_str(&text).unwrap();
        prop_assert_eq!(&back, &mdp);
        prop_assert_eq!(back.to_json_string(), text);
    }

    #[test]
    fn exact_means_match_expected_values(seed in any::<u64>(), pseed in any::<u64>()) {
        let mdp = small(seed);
        let policy = random_policy(&mdp, pseed);
        let exact = evaluate_policy_exact(&mdp, &policy).unwrap();
        let expected = evaluate_policy_expected(&mdp, &policy).unwrap();
        for h in 0..mdp.horizon() {
            for x in 0..mdp.num_states() {
                for a in 0..mdp.num_actions() {
                    let d = exact.get(h, x, a);
                    prop_assert!((d.mean() - expected.get(h, x, a)).abs() < 1e-9);
                    let total: f64 = d.weights().iter().sum();
                    prop_assert!((total - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn projected_evaluation_respects_cumulative_bounds(
        seed in any::<u64>(), pseed in any::<u64>(), n in 1usize..12,
    ) {
        let mdp = small(seed);
        let policy = random_policy(&mdp, pseed);
        let exact = evaluate_policy_exact(&mdp, &policy).unwrap();
        let projected = evaluate_policy_projected(&mdp, &policy, &ProjectionSpec::quantile(n)).unwrap();
        let errors = projected.projection_errors().unwrap();
        let delta = hull_length(&mdp);
        let h_len = mdp.horizon() as f64;
        let cumulative: f64 = errors.iter().sum();
        prop_assert!(cumulative <= h_len * delta / (2.0 * n as f64) + 1e-12);
        prop_assert!(exact.sup_w1_at(&projected, 0) <= cumulative + 1e-9);

        let budget = h_len * delta / (2.0 * n as f64);
        for s in [
            Functional::Mean,
            Functional::cvar(0.25).unwrap(),
            Functional::exponential(-1.0).unwrap(),
        ] {
            let l = s.lipschitz_constant(delta).unwrap();
            for x in 0..mdp.num_states() {
                for a in 0..mdp.num_actions() {
                    let gap = (s.evaluate(exact.get(0, x, a)).unwrap()
                        - s.evaluate(projected.get(0, x, a)).unwrap()).abs();
                    prop_assert!(gap <= l * budget + 1e-9, "{s}: {gap} > {l}·{budget}");
                }
            }
        }
    }

    #[test]
    fn mean_planning_agrees_across_methods(seed in any::<u64>()) {
        let mdp = small(seed);
        let greedy = plan_distributional(&mdp, &Functional::Mean).unwrap();
        let scalar_plan = plan_expected(&mdp).unwrap();
        let brute = brute_force_optimal(&mdp, &Functional::Mean).unwrap();
        prop_assert!((greedy.root_value - scalar_plan.root_value).abs() < 1e-9);
        prop_assert!((brute.root_value - scalar_plan.root_value).abs() < 1e-9);
        let q = scalar(&scalar_plan);
        for h in 0..mdp.horizon() {
            for x in 0..mdp.num_states() {
                let row = q.row(h, x);
                let best = q.best(h, x).1;
                let clear = row.iter().filter(|&&v| v > best - 1e-9).count() == 1;
                if clear {
                    prop_assert_eq!(greedy.policy.action(h, x), scalar_plan.policy.action(h, x));
                }
            }
        }
    }

    #[test]
    fn exponential_planning_is_optimal(seed in any::<u64>(), lambda in prop::sample::select(vec![-2.0f64, -0.5, 0.5, 2.0])) {
        let mdp = small(seed);
        let log_space = plan_exponential(&mdp, lambda).unwrap();
        let s = Functional::exponential(lambda).unwrap();
        let brute = brute_force_optimal(&mdp, &s).unwrap();
        let greedy = plan_distributional(&mdp, &s).unwrap();
        prop_assert!((log_space.root_value - brute.root_value).abs() < 1e-9);
        prop_assert!((greedy.root_value - brute.root_value).abs() < 1e-9);
    }

    #[test]
    fn greedy_never_beats_brute_force(seed in any::<u64>(), alpha in 0.1f64..=1.0) {
        let mdp = small(seed);
        let s = Functional::cvar(alpha).unwrap();
        let greedy = plan_distributional(&mdp, &s).unwrap();
        let brute = brute_force_optimal(&mdp, &s).unwrap();
        prop_assert!(greedy.root_value <= brute.root_value + 1e-9);
    }

    #[test]
    fn chain_is_repeated_convolution(
        atoms in prop::collection::vec(-1.0f64..1.0, 1..4), horizon in 1usize..5,
    ) {
        let reward = DiscreteDistribution::uniform(atoms).unwrap();
        let mdp = build_chain(horizon, &reward).unwrap();
        let exact = evaluate_policy_exact(&mdp, &DeterministicPolicy::constant(&mdp, 0).unwrap()).unwrap();
        let mut expected = DiscreteDistribution::dirac(0.0);
        for _ in 0..horizon {
            expected = expected.convolve(&reward).unwrap();
        }
        prop_assert!(exact.get(0, 0, 0).approx_eq(&expected, 1e-9));
    }

    #[test]
    fn quantile_projection_is_idempotent(seed in any::<u64>(), n in 1usize..10) {
        let d = distrl_core::mdp::random_distribution(&mut ChaCha8Rng::seed_from_u64(seed), 8, 0.0, 1.0);
        let spec = ProjectionSpec::quantile(n);
        let once = quantile_project(&d, &spec).unwrap();
        prop_assert!(quantile_project(&once, &spec).unwrap().approx_eq(&once, 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn counterexamples_are_sound(seed in any::<u64>()) {
        for s in [Functional::cvar(0.25).unwrap(), Functional::quantile(0.5).unwrap()] {
            if let Some(witness) = find_property_violation_seeded(&s, 300, seed).unwrap() {
                let mdp = witness.build_mdp().unwrap();
                let greedy = plan_distributional(&mdp, &s).unwrap();
                let brute = brute_force_optimal(&mdp, &s).unwrap();
                prop_assert!(brute.root_value - greedy.root_value > 1e-6);
            }
        }
        for s in [Functional::Mean, Functional::exponential(1.0).unwrap()] {
            prop_assert!(find_property_violation_seeded(&s, 100, seed).unwrap().is_none());
        }
    }

    #[test]
    fn learning_is_deterministic(seed in any::<u64>(), mseed in any::<u64>()) {
        let mdp = small(mseed);
        let cfg = LearningConfig {
            mode: LearningMode::Exponential { lambda: -1.0 },
            episodes: 200,
            step_size: Default::default(),
            seed,
            epsilon: Some(0.2),
        };
        prop_assert_eq!(learn(&mdp, &cfg).unwrap(), learn(&mdp, &cfg).unwrap());
    }

    #[test]
    fn small_lambda_tracks_linear_learning(seed in any::<u64>(), mseed in any::<u64>()) {
        let mdp = small(mseed);
        let cfg = |mode| LearningConfig {
            mode,
            episodes: 300,
            step_size: Default::default(),
            seed,
            epsilon: Some(1.0),
        };
        let exp = learn(&mdp, &cfg(LearningMode::Exponential { lambda: 1e-6 })).unwrap();
        let lin = learn(&mdp, &cfg(LearningMode::Linear { lambda: 1.0, b: 0.0 })).unwrap();
        for h in 0..mdp.horizon() {
            for x in 0..mdp.num_states() {
                for a in 0..mdp.num_actions() {
                    prop_assert!((exp.get(h, x, a) - lin.get(h, x, a)).abs() < 1e-3);
                }
            }
        }
    }

    #[test]
    fn large_lambda_stays_finite(seed in any::<u64>(), lambda in prop::sample::select(vec![-50.0f64, 50.0])) {
        let shape = RandomMdpShape { max_horizon: 5, reward_range: (-1.0, 1.0), ..Default::default() };
        let mdp = model(seed, shape);
        prop_assert!(lambda.abs() * mdp.horizon() as f64 * 2.0 <= 500.0);
        let cfg = LearningConfig {
            mode: LearningMode::Exponential { lambda },
            episodes: 500,
            step_size: Default::default(),
            seed,
            epsilon: Some(0.3),
        };
        let q = learn(&mdp, &cfg).unwrap();
        for h in 0..mdp.horizon() {
            for x in 0..mdp.num_states() {
                for a in 0..mdp.num_actions() {
                    prop_assert!(q.get(h, x, a).is_finite());
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn learned_values_shift_with_rewards(
        seed in any::<u64>(), c in -3.0f64..3.0, lambda in prop::sample::select(vec![-1.0f64, 0.5]),
    ) {
        let shape = RandomMdpShape { max_states: 2, max_horizon: 2, ..Default::default() };
        let mdp = model(seed, shape);
        let shifted = mdp.shift_rewards(c);
        let cfg = LearningConfig {
            mode: LearningMode::Exponential { lambda },
            episodes: 40_000,
            step_size: Default::default(),
            seed,
            epsilon: Some(1.0),
        };
        let base = learn(&mdp, &cfg).unwrap();
        let moved = learn(&shifted, &cfg).unwrap();
        for h in 0..mdp.horizon() {
            for x in 0..mdp.num_states() {
                if h == 0 && x != mdp.initial_state() {
                    continue;
                }
                for a in 0..mdp.num_actions() {
                    let expected = (mdp.horizon() - h) as f64 * c;
                    let shift = moved.get(h, x, a) - base.get(h, x, a);
                    prop_assert!((shift - expected).abs() < 0.1, "({h},{x},{a}): {shift} vs {expected}");
                }
            }
        }
    }
}
