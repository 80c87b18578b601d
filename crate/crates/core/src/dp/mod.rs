//! Backward dynamic programming over return distributions and scalar values.
//!
//! Tables are indexed by step `h ∈ 0..=H`; the terminal step `H` holds `δ_0`
//! (or `0` for scalar tables).

use serde::Serialize;

use crate::dist::DiscreteDistribution;
use crate::mdp::{DeterministicPolicy, TabularMdp};
use crate::numeric::argmax_first;

mod brute;
mod evaluate;
mod plan;
mod search;

pub use brute::{brute_force_optimal, brute_force_optimal_capped, DEFAULT_POLICY_CAP};
pub use evaluate::{
    evaluate_moment_family, evaluate_policy_exact, evaluate_policy_exact_capped,
    evaluate_policy_expected, evaluate_policy_projected, policy_return_distributions, MomentTable,
};
pub use plan::{
    plan_distributional, plan_distributional_capped, plan_distributional_projected, plan_expected,
    plan_exponential,
};
pub use search::{
    find_property_violation, find_property_violation_seeded, PropertyWitness, DEFAULT_SEARCH_SEED,
    SEARCH_MARGIN,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
struct Shape {
    horizon: usize,
    num_states: usize,
    num_actions: usize,
}

impl Shape {
    fn of(mdp: &TabularMdp) -> Self {
        Shape {
            horizon: mdp.horizon(),
            num_states: mdp.num_states(),
            num_actions: mdp.num_actions(),
        }
    }

    fn index(&self, h: usize, x: usize, a: usize) -> usize {
        assert!(h <= self.horizon && x < self.num_states && a < self.num_actions);
        (h * self.num_states + x) * self.num_actions + a
    }

    fn len(&self) -> usize {
        (self.horizon + 1) * self.num_states * self.num_actions
    }
}

/// Return distributions `ν_h(x, a)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QDistributionTable {
    #[serde(flatten)]
    shape: Shape,
    entries: Vec<DiscreteDistribution>,
    /// `projection_errors[h]`: largest `W1(Πη, η)` over `(x, a)` at step `h`.
    #[serde(skip_serializing_if = "Option::is_none")]
    projection_errors: Option<Vec<f64>>,
}

impl QDistributionTable {
    fn new(mdp: &TabularMdp) -> Self {
        let shape = Shape::of(mdp);
        QDistributionTable {
            shape,
            entries: vec![DiscreteDistribution::dirac(0.0); shape.len()],
            projection_errors: None,
        }
    }

    fn set(&mut self, h: usize, x: usize, a: usize, d: DiscreteDistribution) {
        let i = self.shape.index(h, x, a);
        self.entries[i] = d;
    }

    pub fn horizon(&self) -> usize {
        self.shape.horizon
    }

    pub fn num_states(&self) -> usize {
        self.shape.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.shape.num_actions
    }

    pub fn get(&self, h: usize, x: usize, a: usize) -> &DiscreteDistribution {
        &self.entries[self.shape.index(h, x, a)]
    }

    pub fn projection_errors(&self) -> Option<&[f64]> {
        self.projection_errors.as_deref()
    }

    /// Largest `W1` between matching entries at step `h`.
    pub fn sup_w1_at(&self, other: &Self, h: usize) -> f64 {
        assert_eq!(self.shape, other.shape, "tables of different shapes");
        let mut worst: f64 = 0.0;
        for x in 0..self.shape.num_states {
            for a in 0..self.shape.num_actions {
                worst = worst.max(crate::dist::wasserstein1(
                    self.get(h, x, a),
                    other.get(h, x, a),
                ));
            }
        }
        worst
    }

    /// Largest `W1` between matching entries over all steps.
    pub fn sup_w1(&self, other: &Self) -> f64 {
        (0..=self.shape.horizon)
            .map(|h| self.sup_w1_at(other, h))
            .fold(0.0, f64::max)
    }
}

/// Scalar values `Q_h(x, a)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QScalarTable {
    #[serde(flatten)]
    shape: Shape,
    values: Vec<f64>,
}

impl QScalarTable {
    /// Every non-terminal entry set to `fill`; terminal entries are zero.
    pub fn filled(mdp: &TabularMdp, fill: f64) -> Self {
        let shape = Shape::of(mdp);
        let mut values = vec![fill; shape.len()];
        let terminal = shape.index(shape.horizon, 0, 0);
        values[terminal..].iter_mut().for_each(|v| *v = 0.0);
        QScalarTable { shape, values }
    }

    pub fn horizon(&self) -> usize {
        self.shape.horizon
    }

    pub fn num_states(&self) -> usize {
        self.shape.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.shape.num_actions
    }

    pub fn get(&self, h: usize, x: usize, a: usize) -> f64 {
        self.values[self.shape.index(h, x, a)]
    }

    pub fn set(&mut self, h: usize, x: usize, a: usize, v: f64) {
        let i = self.shape.index(h, x, a);
        self.values[i] = v;
    }

    /// Row `Q_h(x, ·)`.
    pub fn row(&self, h: usize, x: usize) -> &[f64] {
        let i = self.shape.index(h, x, 0);
        &self.values[i..i + self.shape.num_actions]
    }

    /// `(argmax, max)` of `Q_h(x, ·)`, lowest index on ties.
    pub fn best(&self, h: usize, x: usize) -> (usize, f64) {
        argmax_first(self.row(h, x).iter().copied()).expect("at least one action")
    }

    /// Greedy policy, lowest index on ties.
    pub fn greedy_policy(&self) -> DeterministicPolicy {
        DeterministicPolicy::from_table(
            (0..self.shape.horizon)
                .map(|h| {
                    (0..self.shape.num_states)
                        .map(|x| self.best(h, x).0)
                        .collect()
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "data")]
pub enum PlanningTable {
    Distribution(QDistributionTable),
    Scalar(QScalarTable),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanningResult {
    pub policy: DeterministicPolicy,
    pub table: PlanningTable,
    /// Planning objective at `(0, initial_state, π_0(initial_state))`.
    pub root_value: f64,
}
