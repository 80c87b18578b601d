//! Tabular Q-learning for linear and exponential utilities.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dp::QScalarTable;
use crate::error::{invalid, Result};
use crate::mdp::{DeterministicPolicy, TabularMdp};
use crate::numeric::{argmax_first, log_sum_exp};

/// Episodic generator of transitions and rewards drawn from an MDP.
pub struct EpisodicSampler<'a> {
    mdp: &'a TabularMdp,
    rng: ChaCha8Rng,
    next_state: Vec<WeightedIndex<f64>>,
    reward_atom: Vec<WeightedIndex<f64>>,
    step: usize,
    state: usize,
}

/// One sampled transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub reward: f64,
    pub next_state: usize,
    /// True when the episode ended with this transition.
    pub done: bool,
}

impl<'a> EpisodicSampler<'a> {
    pub fn new(mdp: &'a TabularMdp, seed: u64) -> Self {
        let (hs, xs, acts) = (mdp.horizon(), mdp.num_states(), mdp.num_actions());
        let mut next_state = Vec::with_capacity(hs * xs * acts);
        let mut reward_atom = Vec::with_capacity(hs * xs * acts);
        for h in 0..hs {
            for x in 0..xs {
                for a in 0..acts {
                    let row = mdp.transition(h, x, a);
                    next_state
                        .push(WeightedIndex::new(row.iter().map(|&(_, p)| p)).expect("valid row"));
                    reward_atom.push(
                        WeightedIndex::new(mdp.reward(h, x, a).weights()).expect("valid reward"),
                    );
                }
            }
        }
        EpisodicSampler {
            mdp,
            rng: ChaCha8Rng::seed_from_u64(seed),
            next_state,
            reward_atom,
            step: 0,
            state: mdp.initial_state(),
        }
    }

    pub fn mdp(&self) -> &TabularMdp {
        self.mdp
    }

    /// Current `(h, x)`.
    pub fn position(&self) -> (usize, usize) {
        (self.step, self.state)
    }

    pub fn reset(&mut self) {
        self.step = 0;
        self.state = self.mdp.initial_state();
    }

    /// Takes action `a` at the current position. After the last step the
    /// sampler resets to the initial state.
    pub fn step(&mut self, a: usize) -> Transition {
        let mdp = self.mdp;
        let (h, x) = (self.step, self.state);
        let i = (h * mdp.num_states() + x) * mdp.num_actions() + a;
        let next_state = mdp.transition(h, x, a)[self.next_state[i].sample(&mut self.rng)].0;
        let reward = mdp.reward(h, x, a).atoms()[self.reward_atom[i].sample(&mut self.rng)];
        let done = h + 1 == mdp.horizon();
        if done {
            self.reset();
        } else {
            self.step += 1;
            self.state = next_state;
        }
        Transition {
            reward,
            next_state,
            done,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LearningMode {
    /// Target `λ(r + max Q') + b`.
    Linear { lambda: f64, b: f64 },
    /// Target `(1/λ) log((1−α)e^{λQ} + α e^{λ(r + max Q')})`.
    Exponential { lambda: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StepSize {
    /// `α_k = c / (c + k − 1)` on the `k`-th visit of `(h, x, a)`.
    Harmonic {
        c: f64,
    },
    Constant {
        alpha: f64,
    },
}

impl Default for StepSize {
    fn default() -> Self {
        StepSize::Harmonic { c: 1.0 }
    }
}

impl StepSize {
    fn at(&self, visit: u64) -> f64 {
        match *self {
            StepSize::Harmonic { c } => c / (c + visit as f64 - 1.0),
            StepSize::Constant { alpha } => alpha,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningConfig {
    pub mode: LearningMode,
    pub episodes: usize,
    #[serde(default)]
    pub step_size: StepSize,
    pub seed: u64,
    /// Probability of a uniformly random action; `None` is purely greedy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

impl LearningConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episodes < 1 {
            return Err(invalid("at least one episode is required"));
        }
        match self.mode {
            LearningMode::Linear { lambda, b } if !(lambda.is_finite() && b.is_finite()) => {
                return Err(invalid("linear mode needs finite λ and b"));
            }
            LearningMode::Exponential { lambda } if lambda == 0.0 || !lambda.is_finite() => {
                return Err(invalid(format!(
                    "exponential mode needs finite λ ≠ 0, got {lambda}"
                )));
            }
            _ => {}
        }
        match self.step_size {
            StepSize::Harmonic { c } if !(c >= 1.0 && c.is_finite()) => {
                return Err(invalid(format!("harmonic step needs c >= 1, got {c}")));
            }
            StepSize::Constant { alpha } if !(alpha > 0.0 && alpha <= 1.0) => {
                return Err(invalid(format!("step size {alpha} outside (0, 1]")));
            }
            _ => {}
        }
        if let Some(eps) = self.epsilon {
            if !(0.0..=1.0).contains(&eps) {
                return Err(invalid(format!("ε = {eps} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Runs `cfg.episodes` episodes of Q-learning from the sampler's current seed.
///
/// `Q` starts at `H` everywhere; actions are greedy with lowest-index ties
/// unless `cfg.epsilon` is set.
pub fn run_q_learning(
    sampler: &mut EpisodicSampler<'_>,
    cfg: &LearningConfig,
) -> Result<QScalarTable> {
    cfg.validate()?;
    let mdp = sampler.mdp;
    let hs = mdp.horizon();
    let mut q = QScalarTable::filled(mdp, hs as f64);
    let mut visits = vec![0u64; hs * mdp.num_states() * mdp.num_actions()];
    sampler.reset();
    for _ in 0..cfg.episodes {
        loop {
            let (h, x) = sampler.position();
            let a = match cfg.epsilon {
                Some(eps) if sampler.rng.gen::<f64>() < eps => {
                    sampler.rng.gen_range(0..mdp.num_actions())
                }
                _ => q.best(h, x).0,
            };
            let t = sampler.step(a);
            let i = (h * mdp.num_states() + x) * mdp.num_actions() + a;
            visits[i] += 1;
            let alpha = cfg.step_size.at(visits[i]);
            let future = if t.done {
                0.0
            } else {
                q.best(h + 1, t.next_state).1
            };
            let old = q.get(h, x, a);
            let new = match cfg.mode {
                LearningMode::Linear { lambda, b } => {
                    (1.0 - alpha) * old + alpha * (lambda * (t.reward + future) + b)
                }
                LearningMode::Exponential { lambda } => {
                    let target = t.reward + future;
                    let terms = [
                        (1.0 - alpha).ln() + lambda * old,
                        alpha.ln() + lambda * target,
                    ];
                    // a weighted mean in e^{λ·} space lies between its inputs
                    (log_sum_exp(&terms) / lambda).clamp(old.min(target), old.max(target))
                }
            };
            q.set(h, x, a, new);
            if t.done {
                break;
            }
        }
    }
    Ok(q)
}

/// Builds a sampler seeded with `cfg.seed` and runs [`run_q_learning`].
pub fn learn(mdp: &TabularMdp, cfg: &LearningConfig) -> Result<QScalarTable> {
    let mut sampler = EpisodicSampler::new(mdp, cfg.seed);
    run_q_learning(&mut sampler, cfg)
}

/// Greedy policy of a learned table, lowest index on ties.
pub fn extract_greedy(table: &QScalarTable) -> DeterministicPolicy {
    table.greedy_policy()
}

/// Greedy value at the root.
pub fn root_value(table: &QScalarTable, mdp: &TabularMdp) -> f64 {
    argmax_first(table.row(0, mdp.initial_state()).iter().copied())
        .expect("at least one action")
        .1
}
