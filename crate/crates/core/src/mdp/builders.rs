use super::{MdpBuilder, TabularMdp};
use crate::dist::{make_tightness_distribution, DiscreteDistribution};
use crate::error::{invalid, Result};

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Chain of `H + 1` states visited in order under a single action, with the
/// same reward distribution at every step.
pub fn build_chain(horizon: usize, reward: &DiscreteDistribution) -> Result<TabularMdp> {
    if horizon < 1 {
        return Err(invalid("chain horizon must be at least 1"));
    }
    let n = horizon + 1;
    let mut b = MdpBuilder::new(horizon, n, 1)
        .state_names(names("s", n))
        .action_names(vec!["a".into()])
        .default_reward(reward);
    for h in 0..horizon {
        for x in 0..n {
            b.set_transition(h, x, 0, vec![((x + 1).min(horizon), 1.0)]);
        }
    }
    b.build()
}

/// Support lengths `Δ_k = Δ₀ (N/(N−1))^k` seen at backward step `k`
/// (`k = 0` is the last step `h = H − 1`).
pub fn tightness_deltas(n: usize, delta0: f64, horizon: usize) -> Vec<f64> {
    let ratio = 1.0 + 1.0 / (n as f64 - 1.0);
    let mut out = Vec::with_capacity(horizon);
    let mut delta = delta0;
    for _ in 0..horizon {
        out.push(delta);
        delta *= ratio;
    }
    out
}

/// Single-state, single-action MDP on which every left-grid quantile
/// projection step loses exactly `Δ_k / 2N` in W1.
///
/// The last step rewards `ν_{N,Δ₀}`; backward step `k ≥ 1` rewards
/// `½(δ_0 + δ_{Δ_{k−1}/(N−1)})`, which maps the projected `ν_{N,Δ_{k−1}}`
/// onto `ν_{N,Δ_k}`.
pub fn build_tightness_chain(n: usize, delta0: f64, horizon: usize) -> Result<TabularMdp> {
    if n < 2 {
        return Err(invalid(format!("tightness chain needs N >= 2, got {n}")));
    }
    if !(delta0 > 0.0 && delta0.is_finite()) {
        return Err(invalid(format!(
            "tightness chain needs Δ₀ > 0, got {delta0}"
        )));
    }
    if horizon < 1 {
        return Err(invalid("tightness chain horizon must be at least 1"));
    }
    let deltas = tightness_deltas(n, delta0, horizon);
    let mut b = MdpBuilder::new(horizon, 1, 1)
        .state_names(vec!["x".into()])
        .action_names(vec!["a".into()]);
    for h in 0..horizon {
        let k = horizon - 1 - h;
        let reward = if k == 0 {
            make_tightness_distribution(n, delta0)?
        } else {
            let jump = deltas[k - 1] / (n as f64 - 1.0);
            DiscreteDistribution::new(vec![0.0, jump], vec![0.5, 0.5])?
        };
        b.set_transition(h, 0, 0, vec![(0, 1.0)]);
        b.set_reward(h, 0, 0, reward);
    }
    b.build()
}

/// Depth-2 tree used to show a functional lacking the independence property
/// is not optimized by greedy distributional planning.
///
/// States: `Start, Left, Right, End1, End2, End3`. At step 0 both actions in
/// `Start` move to `Left` w.p. `λ` and `Right` otherwise, with zero reward.
/// At step 1, `Left` rewards `ν₁` under `a1` and `ν₂` under `a2`; `Right`
/// rewards `ν₃` under either action. Every other cell is a zero-reward
/// self-loop.
pub fn build_independence_counterexample(
    nu1: &DiscreteDistribution,
    nu2: &DiscreteDistribution,
    nu3: &DiscreteDistribution,
    lambda: f64,
) -> Result<TabularMdp> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(invalid(format!("mixing weight {lambda} outside (0, 1)")));
    }
    const START: usize = 0;
    const LEFT: usize = 1;
    const RIGHT: usize = 2;
    const END: [usize; 3] = [3, 4, 5];
    let mut b = MdpBuilder::new(2, 6, 2)
        .state_names(
            ["Start", "Left", "Right", "End1", "End2", "End3"]
                .map(String::from)
                .to_vec(),
        )
        .action_names(vec!["a1".into(), "a2".into()]);
    for a in 0..2 {
        b.set_transition(0, START, a, vec![(LEFT, lambda), (RIGHT, 1.0 - lambda)]);
    }
    b.set_transition(1, LEFT, 0, vec![(END[0], 1.0)]);
    b.set_reward(1, LEFT, 0, nu1.clone());
    b.set_transition(1, LEFT, 1, vec![(END[1], 1.0)]);
    b.set_reward(1, LEFT, 1, nu2.clone());
    for a in 0..2 {
        b.set_transition(1, RIGHT, a, vec![(END[2], 1.0)]);
        b.set_reward(1, RIGHT, a, nu3.clone());
    }
    b.default_self_loops()
        .default_reward(&DiscreteDistribution::dirac(0.0))
        .build()
}

/// Depth-2 chain used to show a functional lacking the translation property
/// is not optimized by greedy distributional planning.
///
/// States: `Start, Step, End1, End2`. Step 0 moves `Start` to `Step` with
/// reward `δ_c`; at step 1, `Step` rewards `ν₁` under `a1` and `ν₂` under `a2`.
pub fn build_translation_counterexample(
    nu1: &DiscreteDistribution,
    nu2: &DiscreteDistribution,
    c: f64,
) -> Result<TabularMdp> {
    if !c.is_finite() {
        return Err(invalid("translation must be finite"));
    }
    const START: usize = 0;
    const STEP: usize = 1;
    let mut b = MdpBuilder::new(2, 4, 2)
        .state_names(["Start", "Step", "End1", "End2"].map(String::from).to_vec())
        .action_names(vec!["a1".into(), "a2".into()]);
    for a in 0..2 {
        b.set_transition(0, START, a, vec![(STEP, 1.0)]);
        b.set_reward(0, START, a, DiscreteDistribution::dirac(c));
    }
    b.set_transition(1, STEP, 0, vec![(2, 1.0)]);
    b.set_reward(1, STEP, 0, nu1.clone());
    b.set_transition(1, STEP, 1, vec![(3, 1.0)]);
    b.set_reward(1, STEP, 1, nu2.clone());
    b.default_self_loops()
        .default_reward(&DiscreteDistribution::dirac(0.0))
        .build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_topology() {
        let mdp = build_chain(3, &DiscreteDistribution::dirac(1.0)).unwrap();
        assert_eq!(mdp.horizon(), 3);
        for h in 0..3 {
            assert_eq!(mdp.transition(h, 0, 0), &[(1, 1.0)]);
            assert_eq!(mdp.transition(h, 3, 0), &[(3, 1.0)]);
        }
        assert!(build_chain(0, &DiscreteDistribution::dirac(1.0)).is_err());
    }

    #[test]
    fn tightness_recurrence() {
        let d = tightness_deltas(2, 1.0, 3);
        assert_eq!(d, vec![1.0, 2.0, 4.0]);
        let d = tightness_deltas(5, 1.0, 3);
        assert!((d[1] - 1.25).abs() < 1e-15 && (d[2] - 1.5625).abs() < 1e-15);
    }

    #[test]
    fn tightness_chain_layout() {
        let mdp = build_tightness_chain(2, 1.0, 3).unwrap();
        assert_eq!((mdp.num_states(), mdp.num_actions()), (1, 1));
        assert_eq!(
            mdp.reward(2, 0, 0),
            &make_tightness_distribution(2, 1.0).unwrap()
        );
        // step h = 1 is backward step 1: jump Δ₀/(N−1) = 1
        assert_eq!(mdp.reward(1, 0, 0).atoms(), &[0.0, 1.0]);
        assert_eq!(mdp.reward(0, 0, 0).atoms(), &[0.0, 2.0]);
        assert!(build_tightness_chain(1, 1.0, 3).is_err());
        assert!(build_tightness_chain(2, 0.0, 3).is_err());
        assert!(build_tightness_chain(2, 1.0, 0).is_err());
    }

    #[test]
    fn independence_counterexample_structure() {
        let nu1 = DiscreteDistribution::dirac(1.0);
        let nu2 = DiscreteDistribution::dirac(2.0);
        let nu3 = DiscreteDistribution::dirac(3.0);
        let mdp = build_independence_counterexample(&nu1, &nu2, &nu3, 0.25).unwrap();
        assert_eq!(
            (mdp.num_states(), mdp.horizon(), mdp.initial_state()),
            (6, 2, 0)
        );
        assert!(mdp.validate().is_ok());
        for a in 0..2 {
            assert_eq!(mdp.transition(0, 0, a), &[(1, 0.25), (2, 0.75)]);
            assert_eq!(mdp.reward(0, 0, a), &DiscreteDistribution::dirac(0.0));
            assert_eq!(mdp.reward(1, 2, a), &nu3);
        }
        assert_eq!(mdp.reward(1, 1, 0), &nu1);
        assert_eq!(mdp.reward(1, 1, 1), &nu2);
        assert_ne!(mdp.transition(1, 1, 0), mdp.transition(1, 1, 1));
        assert!(build_independence_counterexample(&nu1, &nu2, &nu3, 1.0).is_err());
        assert!(build_independence_counterexample(&nu1, &nu2, &nu3, 0.0).is_err());
    }

    #[test]
    fn translation_counterexample_structure() {
        let nu1 = DiscreteDistribution::dirac(1.0);
        let nu2 = DiscreteDistribution::dirac(2.0);
        let mdp = build_translation_counterexample(&nu1, &nu2, -5.0).unwrap();
        assert_eq!((mdp.num_states(), mdp.horizon()), (4, 2));
        assert!(mdp.validate().is_ok());
        assert_eq!(mdp.transition(0, 0, 1), &[(1, 1.0)]);
        assert_eq!(mdp.reward(0, 0, 0), &DiscreteDistribution::dirac(-5.0));
        assert_eq!(mdp.reward(1, 1, 0), &nu1);
        assert_eq!(mdp.reward(1, 1, 1), &nu2);
    }
}
