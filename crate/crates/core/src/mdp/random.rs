use rand::Rng;

use super::{MdpBuilder, TabularMdp};
use crate::dist::DiscreteDistribution;

/// Size limits for [`random_mdp`]. Every dimension is drawn uniformly from
/// `1..=max`.
#[derive(Debug, Clone, Copy)]
pub struct RandomMdpShape {
    pub max_states: usize,
    pub max_actions: usize,
    pub max_horizon: usize,
    pub max_reward_atoms: usize,
    /// Reward atoms are drawn uniformly from this interval.
    pub reward_range: (f64, f64),
}

impl Default for RandomMdpShape {
    fn default() -> Self {
        RandomMdpShape {
            max_states: 3,
            max_actions: 2,
            max_horizon: 3,
            max_reward_atoms: 3,
            reward_range: (0.0, 1.0),
        }
    }
}

/// Up to `max_atoms` atoms uniform on `[lo, hi]` with random weights.
pub fn random_distribution<R: Rng + ?Sized>(
    rng: &mut R,
    max_atoms: usize,
    lo: f64,
    hi: f64,
) -> DiscreteDistribution {
    let n = rng.gen_range(1..=max_atoms.max(1));
    let atoms: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..=hi)).collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    DiscreteDistribution::new(atoms, raw.iter().map(|w| w / total).collect())
        .expect("positive weights")
}

pub fn random_mdp<R: Rng + ?Sized>(rng: &mut R, shape: &RandomMdpShape) -> TabularMdp {
    let num_states = rng.gen_range(1..=shape.max_states);
    let num_actions = rng.gen_range(1..=shape.max_actions);
    let horizon = rng.gen_range(1..=shape.max_horizon);
    let (lo, hi) = shape.reward_range;
    let mut b = MdpBuilder::new(horizon, num_states, num_actions)
        .initial_state(rng.gen_range(0..num_states));
    for h in 0..horizon {
        for x in 0..num_states {
            for a in 0..num_actions {
                let raw: Vec<f64> = (0..num_states).map(|_| rng.gen_range(0.0..1.0)).collect();
                let total: f64 = raw.iter().sum();
                let mut row: Vec<(usize, f64)> = raw
                    .iter()
                    .enumerate()
                    .map(|(y, p)| (y, p / total))
                    .collect();
                // absorb rounding so the row sums to one exactly enough
                let drift: f64 = 1.0 - row.iter().map(|r| r.1).sum::<f64>();
                row[0].1 += drift;
                b.set_transition(h, x, a, row);
                b.set_reward(
                    h,
                    x,
                    a,
                    random_distribution(rng, shape.max_reward_atoms, lo, hi),
                );
            }
        }
    }
    b.build().expect("random MDP is well formed")
}
