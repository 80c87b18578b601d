//! Finite-horizon tabular MDPs and deterministic Markov policies.
//!
//! Steps, states and actions are 0-based: step `h` runs over `0..horizon`,
//! and the terminal step `horizon` carries the zero return `δ_0`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dist::DiscreteDistribution;
use crate::error::{invalid, Error, Result};

mod builders;
mod io;
mod random;

pub use builders::{
    build_chain, build_independence_counterexample, build_tightness_chain,
    build_translation_counterexample, tightness_deltas,
};
pub use io::MdpFile;
pub use random::{random_distribution, random_mdp, RandomMdpShape};

/// Transition rows must sum to one within this tolerance.
pub const ROW_TOLERANCE: f64 = 1e-12;

/// A validation finding, located at the first offending `(h, x, a)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub step: Option<usize>,
    pub state: Option<usize>,
    pub action: Option<usize>,
    pub message: String,
}

impl Diagnostic {
    fn global(message: impl Into<String>) -> Self {
        Diagnostic {
            step: None,
            state: None,
            action: None,
            message: message.into(),
        }
    }

    pub(crate) fn at(h: usize, x: usize, a: usize, message: impl Into<String>) -> Self {
        Diagnostic {
            step: Some(h),
            state: Some(x),
            action: Some(a),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.step, self.state, self.action) {
            (Some(h), Some(x), Some(a)) => write!(f, "(h={h}, x={x}, a={a}): {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    horizon: usize,
    num_states: usize,
    num_actions: usize,
    initial_state: usize,
    state_names: Vec<String>,
    action_names: Vec<String>,
    /// Sparse rows `(next_state, p)` with `p > 0`, sorted by next state.
    transitions: Vec<Vec<(usize, f64)>>,
    rewards: Vec<DiscreteDistribution>,
}

impl TabularMdp {
    pub fn builder(horizon: usize, num_states: usize, num_actions: usize) -> MdpBuilder {
        MdpBuilder::new(horizon, num_states, num_actions)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn action_names(&self) -> &[String] {
        &self.action_names
    }

    fn index(&self, h: usize, x: usize, a: usize) -> usize {
        debug_assert!(h < self.horizon && x < self.num_states && a < self.num_actions);
        (h * self.num_states + x) * self.num_actions + a
    }

    pub fn transition(&self, h: usize, x: usize, a: usize) -> &[(usize, f64)] {
        &self.transitions[self.index(h, x, a)]
    }

    pub fn reward(&self, h: usize, x: usize, a: usize) -> &DiscreteDistribution {
        &self.rewards[self.index(h, x, a)]
    }

    /// Largest reward support length over all `(h, x, a)`.
    pub fn reward_support_length(&self) -> f64 {
        self.rewards
            .iter()
            .map(DiscreteDistribution::support_length)
            .fold(0.0, f64::max)
    }

    /// `[lo, hi]` bounding every achievable return, from the reward supports.
    pub fn return_hull(&self) -> (f64, f64) {
        let mut lo = 0.0;
        let mut hi = 0.0;
        for h in 0..self.horizon {
            let step = &self.rewards[h * self.num_states * self.num_actions
                ..(h + 1) * self.num_states * self.num_actions];
            lo += step.iter().map(|r| r.min()).fold(f64::INFINITY, f64::min);
            hi += step
                .iter()
                .map(|r| r.max())
                .fold(f64::NEG_INFINITY, f64::max);
        }
        (lo, hi)
    }

    /// Re-checks every invariant. A built MDP always passes.
    pub fn validate(&self) -> std::result::Result<(), Vec<Diagnostic>> {
        let mut builder = MdpBuilder::new(self.horizon, self.num_states, self.num_actions);
        builder.initial_state = self.initial_state;
        builder.state_names = self.state_names.clone();
        builder.action_names = self.action_names.clone();
        builder.transitions = self.transitions.iter().cloned().map(Some).collect();
        builder.rewards = self.rewards.iter().cloned().map(Some).collect();
        let diagnostics = builder.validate();
        if diagnostics.is_empty() {
            Ok(())
        } else {
            Err(diagnostics)
        }
    }

    /// Same model with every reward translated by `c`.
    pub fn shift_rewards(&self, c: f64) -> TabularMdp {
        let mut shifted = self.clone();
        for r in &mut shifted.rewards {
            *r = r.translate(c);
        }
        shifted
    }
}

/// Incremental construction of a [`TabularMdp`]; [`build`](Self::build)
/// validates.
#[derive(Debug, Clone)]
pub struct MdpBuilder {
    horizon: usize,
    num_states: usize,
    num_actions: usize,
    initial_state: usize,
    state_names: Vec<String>,
    action_names: Vec<String>,
    transitions: Vec<Option<Vec<(usize, f64)>>>,
    rewards: Vec<Option<DiscreteDistribution>>,
}

impl MdpBuilder {
    pub fn new(horizon: usize, num_states: usize, num_actions: usize) -> Self {
        let cells = horizon * num_states * num_actions;
        MdpBuilder {
            horizon,
            num_states,
            num_actions,
            initial_state: 0,
            state_names: (0..num_states).map(|x| format!("s{x}")).collect(),
            action_names: (0..num_actions).map(|a| format!("a{a}")).collect(),
            transitions: vec![None; cells],
            rewards: vec![None; cells],
        }
    }

    fn index(&self, h: usize, x: usize, a: usize) -> usize {
        assert!(
            h < self.horizon && x < self.num_states && a < self.num_actions,
            "(h={h}, x={x}, a={a}) out of range"
        );
        (h * self.num_states + x) * self.num_actions + a
    }

    pub fn state_names(mut self, names: Vec<String>) -> Self {
        self.state_names = names;
        self
    }

    pub fn action_names(mut self, names: Vec<String>) -> Self {
        self.action_names = names;
        self
    }

    pub fn initial_state(mut self, x: usize) -> Self {
        self.initial_state = x;
        self
    }

    pub fn set_transition(&mut self, h: usize, x: usize, a: usize, row: Vec<(usize, f64)>) {
        let i = self.index(h, x, a);
        self.transitions[i] = Some(row);
    }

    pub fn set_reward(&mut self, h: usize, x: usize, a: usize, reward: DiscreteDistribution) {
        let i = self.index(h, x, a);
        self.rewards[i] = Some(reward);
    }

    pub fn transition(mut self, h: usize, x: usize, a: usize, row: Vec<(usize, f64)>) -> Self {
        self.set_transition(h, x, a, row);
        self
    }

    pub fn reward(mut self, h: usize, x: usize, a: usize, reward: DiscreteDistribution) -> Self {
        self.set_reward(h, x, a, reward);
        self
    }

    /// Fills every unset reward with `reward`.
    pub fn default_reward(mut self, reward: &DiscreteDistribution) -> Self {
        for r in self.rewards.iter_mut().filter(|r| r.is_none()) {
            *r = Some(reward.clone());
        }
        self
    }

    /// Fills every unset transition with a self-loop.
    pub fn default_self_loops(mut self) -> Self {
        for h in 0..self.horizon {
            for x in 0..self.num_states {
                for a in 0..self.num_actions {
                    let i = self.index(h, x, a);
                    if self.transitions[i].is_none() {
                        self.transitions[i] = Some(vec![(x, 1.0)]);
                    }
                }
            }
        }
        self
    }

    /// Checks every invariant; an empty list means the model is well formed.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if self.horizon == 0 {
            out.push(Diagnostic::global("horizon must be at least 1"));
        }
        if self.num_states == 0 {
            out.push(Diagnostic::global("at least one state is required"));
        }
        if self.num_actions == 0 {
            out.push(Diagnostic::global("at least one action is required"));
        }
        if self.initial_state >= self.num_states.max(1) {
            out.push(Diagnostic::global(format!(
                "initial state {} out of range",
                self.initial_state
            )));
        }
        check_names("state", &self.state_names, self.num_states, &mut out);
        check_names("action", &self.action_names, self.num_actions, &mut out);
        if !out.is_empty() {
            return out;
        }
        for h in 0..self.horizon {
            for x in 0..self.num_states {
                for a in 0..self.num_actions {
                    let i = self.index(h, x, a);
                    match &self.transitions[i] {
                        None => out.push(Diagnostic::at(h, x, a, "missing transition row")),
                        Some(row) => {
                            if let Some(msg) = check_row(row, self.num_states) {
                                out.push(Diagnostic::at(h, x, a, msg));
                            }
                        }
                    }
                    if self.rewards[i].is_none() {
                        out.push(Diagnostic::at(h, x, a, "missing reward distribution"));
                    }
                }
            }
        }
        out
    }

    pub fn build(self) -> Result<TabularMdp> {
        let diagnostics = self.validate();
        if !diagnostics.is_empty() {
            return Err(Error::InvalidMdp(diagnostics));
        }
        let transitions = self
            .transitions
            .into_iter()
            .map(|row| canonical_row(row.expect("validated")))
            .collect();
        let rewards = self
            .rewards
            .into_iter()
            .map(|r| r.expect("validated"))
            .collect();
        Ok(TabularMdp {
            horizon: self.horizon,
            num_states: self.num_states,
            num_actions: self.num_actions,
            initial_state: self.initial_state,
            state_names: self.state_names,
            action_names: self.action_names,
            transitions,
            rewards,
        })
    }
}

fn check_names(kind: &str, names: &[String], expected: usize, out: &mut Vec<Diagnostic>) {
    if names.len() != expected {
        out.push(Diagnostic::global(format!(
            "{} {kind} names for {expected} {kind}s",
            names.len()
        )));
        return;
    }
    let mut sorted: Vec<&String> = names.iter().collect();
    sorted.sort();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        out.push(Diagnostic::global(format!(
            "duplicate {kind} name {:?}",
            w[0]
        )));
    }
}

fn check_row(row: &[(usize, f64)], num_states: usize) -> Option<String> {
    if row.is_empty() {
        return Some("empty transition row".into());
    }
    for &(to, p) in row {
        if to >= num_states {
            return Some(format!("next state {to} out of range"));
        }
        if p < 0.0 || !p.is_finite() {
            return Some(format!(
                "transition probability {p} is negative or not finite"
            ));
        }
    }
    let sum: f64 = row.iter().map(|&(_, p)| p).sum();
    if (sum - 1.0).abs() > ROW_TOLERANCE {
        return Some(format!("transition row sums to {sum}"));
    }
    None
}

fn canonical_row(mut row: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    row.sort_by_key(|&(to, _)| to);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(row.len());
    for (to, p) in row {
        if p == 0.0 {
            continue;
        }
        match out.last_mut() {
            Some(last) if last.0 == to => last.1 += p,
            _ => out.push((to, p)),
        }
    }
    out
}

/// A deterministic Markov policy `π_h(x)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterministicPolicy {
    /// `actions[h][x]`.
    actions: Vec<Vec<usize>>,
}

impl DeterministicPolicy {
    pub fn new(mdp: &TabularMdp, actions: Vec<Vec<usize>>) -> Result<Self> {
        let policy = DeterministicPolicy { actions };
        policy.check(mdp)?;
        Ok(policy)
    }

    /// The same action everywhere.
    pub fn constant(mdp: &TabularMdp, action: usize) -> Result<Self> {
        Self::new(mdp, vec![vec![action; mdp.num_states()]; mdp.horizon()])
    }

    pub(crate) fn from_table(actions: Vec<Vec<usize>>) -> Self {
        DeterministicPolicy { actions }
    }

    pub fn action(&self, h: usize, x: usize) -> usize {
        self.actions[h][x]
    }

    pub fn actions(&self) -> &[Vec<usize>] {
        &self.actions
    }

    pub fn check(&self, mdp: &TabularMdp) -> Result<()> {
        if self.actions.len() != mdp.horizon() {
            return Err(invalid(format!(
                "policy covers {} steps, MDP horizon is {}",
                self.actions.len(),
                mdp.horizon()
            )));
        }
        for (h, row) in self.actions.iter().enumerate() {
            if row.len() != mdp.num_states() {
                return Err(invalid(format!(
                    "policy step {h} covers {} states, MDP has {}",
                    row.len(),
                    mdp.num_states()
                )));
            }
            if let Some(x) = row.iter().position(|&a| a >= mdp.num_actions()) {
                return Err(invalid(format!(
                    "policy action {} at (h={h}, x={x}) out of range",
                    row[x]
                )));
            }
        }
        Ok(())
    }
}
