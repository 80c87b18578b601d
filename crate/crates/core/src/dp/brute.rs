use super::evaluate::{evaluate_policy_exact_capped, policy_return_distributions};
use super::{PlanningResult, PlanningTable};
use crate::dist::DEFAULT_ATOM_CAP;
use crate::error::{Error, Result};
use crate::functionals::Functional;
use crate::mdp::{DeterministicPolicy, TabularMdp};

/// Default limit on the number of enumerated policies.
pub const DEFAULT_POLICY_CAP: usize = 1_000_000;

/// Enumerates every deterministic Markov policy and keeps the one maximizing
/// `s` of the return from the initial state. Ties keep the earliest policy.
pub fn brute_force_optimal(mdp: &TabularMdp, s: &Functional) -> Result<PlanningResult> {
    brute_force_optimal_capped(mdp, s, DEFAULT_POLICY_CAP)
}

pub fn brute_force_optimal_capped(
    mdp: &TabularMdp,
    s: &Functional,
    cap: usize,
) -> Result<PlanningResult> {
    s.check()?;
    let (hs, xs, acts) = (mdp.horizon(), mdp.num_states(), mdp.num_actions());
    let digits = hs * xs;
    let count = (acts as f64).powi(digits as i32);
    if count > cap as f64 {
        return Err(Error::PolicyCap { count, cap });
    }
    let x0 = mdp.initial_state();
    let mut digits_now = vec![0usize; digits];
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..count as usize {
        let policy = to_policy(&digits_now, xs);
        let returns = policy_return_distributions(mdp, &policy, DEFAULT_ATOM_CAP)?;
        let v = s.evaluate(&returns[0][x0])?;
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, digits_now.clone()));
        }
        // odometer increment, first (h, x) fastest
        for d in digits_now.iter_mut() {
            *d += 1;
            if *d < acts {
                break;
            }
            *d = 0;
        }
    }
    let (root_value, digits_best) = best.expect("at least one policy");
    let policy = to_policy(&digits_best, xs);
    let table = evaluate_policy_exact_capped(mdp, &policy, DEFAULT_ATOM_CAP)?;
    Ok(PlanningResult {
        policy,
        table: PlanningTable::Distribution(table),
        root_value,
    })
}

fn to_policy(digits: &[usize], xs: usize) -> DeterministicPolicy {
    DeterministicPolicy::from_table(digits.chunks(xs).map(<[usize]>::to_vec).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::DiscreteDistribution;
    use crate::dp::{plan_distributional, plan_expected};
    use crate::mdp::{build_independence_counterexample, build_translation_counterexample};

    #[test]
    fn cap_is_enforced() {
        let mdp = build_independence_counterexample(
            &DiscreteDistribution::dirac(1.0),
            &DiscreteDistribution::dirac(0.0),
            &DiscreteDistribution::dirac(2.0),
            0.5,
        )
        .unwrap();
        assert!(matches!(
            brute_force_optimal_capped(&mdp, &Functional::Mean, 100),
            Err(Error::PolicyCap { .. })
        ));
    }

    #[test]
    fn mean_counterexamples_are_solved_greedily() {
        let nu1 = DiscreteDistribution::dirac(1.0);
        let nu2 = DiscreteDistribution::new(vec![0.0, 3.0], vec![0.5, 0.5]).unwrap();
        let nu3 = DiscreteDistribution::dirac(10.0);
        let mdp = build_independence_counterexample(&nu1, &nu2, &nu3, 0.5).unwrap();
        let bf = brute_force_optimal(&mdp, &Functional::Mean).unwrap();
        assert!((bf.root_value - plan_expected(&mdp).unwrap().root_value).abs() < 1e-12);
        for c in [-5.0, 0.0, 5.0] {
            let mdp = build_translation_counterexample(&nu1, &nu2, c).unwrap();
            let bf = brute_force_optimal(&mdp, &Functional::Mean).unwrap();
            let greedy = plan_distributional(&mdp, &Functional::Mean).unwrap();
            assert!((bf.root_value - greedy.root_value).abs() < 1e-12);
        }
    }

    #[test]
    fn cvar_independence_gap() {
        let nu1 = DiscreteDistribution::dirac(1.0);
        let nu2 = DiscreteDistribution::new(vec![0.0, 3.0], vec![0.5, 0.5]).unwrap();
        let nu3 = DiscreteDistribution::dirac(10.0);
        let mdp = build_independence_counterexample(&nu1, &nu2, &nu3, 0.5).unwrap();
        let s = Functional::cvar(0.5).unwrap();
        let bf = brute_force_optimal(&mdp, &s).unwrap();
        let greedy = plan_distributional(&mdp, &s).unwrap();
        assert!((greedy.root_value - 1.0).abs() < 1e-12);
        assert!((bf.root_value - 1.5).abs() < 1e-12);
        assert_eq!(bf.policy.action(1, 1), 1);
    }
}
