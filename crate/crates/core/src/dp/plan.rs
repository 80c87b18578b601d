use super::evaluate::backup;
use super::{PlanningResult, PlanningTable, QDistributionTable, QScalarTable};
use crate::dist::{project, wasserstein1, DiscreteDistribution, ProjectionSpec, DEFAULT_ATOM_CAP};
use crate::error::{invalid, Result};
use crate::functionals::Functional;
use crate::mdp::{DeterministicPolicy, TabularMdp};
use crate::numeric::{argmax_first, log_sum_exp};

/// Greedy distributional planning on exact distributions. The result is
/// optimal only for functionals with the independence and translation
/// properties.
pub fn plan_distributional(mdp: &TabularMdp, s: &Functional) -> Result<PlanningResult> {
    plan_distributional_capped(mdp, s, DEFAULT_ATOM_CAP)
}

pub fn plan_distributional_capped(
    mdp: &TabularMdp,
    s: &Functional,
    cap: usize,
) -> Result<PlanningResult> {
    greedy_distributional(mdp, s, cap, None)
}

/// Approximate greedy planning that projects every backed-up distribution.
pub fn plan_distributional_projected(
    mdp: &TabularMdp,
    s: &Functional,
    spec: &ProjectionSpec,
) -> Result<PlanningResult> {
    spec.validate()?;
    greedy_distributional(mdp, s, DEFAULT_ATOM_CAP, Some(spec))
}

fn greedy_distributional(
    mdp: &TabularMdp,
    s: &Functional,
    cap: usize,
    spec: Option<&ProjectionSpec>,
) -> Result<PlanningResult> {
    s.check()?;
    let (hs, xs, acts) = (mdp.horizon(), mdp.num_states(), mdp.num_actions());
    let mut table = QDistributionTable::new(mdp);
    let mut actions = vec![vec![0; xs]; hs];
    let mut errors = vec![0.0; hs];
    for h in (0..hs).rev() {
        let next: Vec<DiscreteDistribution> = if h + 1 == hs {
            vec![DiscreteDistribution::dirac(0.0); xs]
        } else {
            (0..xs)
                .map(|y| table.get(h + 1, y, actions[h + 1][y]).clone())
                .collect()
        };
        for x in 0..xs {
            let mut scores = Vec::with_capacity(acts);
            for a in 0..acts {
                let mut d = backup(mdp, h, x, a, &next, cap)?;
                if let Some(spec) = spec {
                    let p = project(&d, spec)?;
                    errors[h] = f64::max(errors[h], wasserstein1(&d, &p));
                    d = p;
                }
                scores.push(s.evaluate(&d)?);
                table.set(h, x, a, d);
            }
            actions[h][x] = argmax_first(scores).expect("at least one action").0;
        }
    }
    if spec.is_some() {
        table.projection_errors = Some(errors);
    }
    let x0 = mdp.initial_state();
    let root_value = s.evaluate(table.get(0, x0, actions[0][x0]))?;
    Ok(PlanningResult {
        policy: DeterministicPolicy::from_table(actions),
        table: PlanningTable::Distribution(table),
        root_value,
    })
}

fn scalar_plan(
    mdp: &TabularMdp,
    backup: impl Fn(usize, usize, usize, &dyn Fn(usize) -> f64) -> Result<f64>,
) -> Result<PlanningResult> {
    let mut table = QScalarTable::filled(mdp, 0.0);
    for h in (0..mdp.horizon()).rev() {
        for x in 0..mdp.num_states() {
            for a in 0..mdp.num_actions() {
                let future = |y: usize| {
                    if h + 1 == mdp.horizon() {
                        0.0
                    } else {
                        table.best(h + 1, y).1
                    }
                };
                let v = backup(h, x, a, &future)?;
                table.set(h, x, a, v);
            }
        }
    }
    let policy = table.greedy_policy();
    let root_value = table.best(0, mdp.initial_state()).1;
    Ok(PlanningResult {
        policy,
        table: PlanningTable::Scalar(table),
        root_value,
    })
}

/// Optimal planning for `U(Z) = (1/λ) log E[e^{λZ}]`, in utility units with
/// log-space aggregation over next states.
pub fn plan_exponential(mdp: &TabularMdp, lambda: f64) -> Result<PlanningResult> {
    if lambda == 0.0 {
        return Err(invalid("λ = 0 is the expected return; use plan_expected"));
    }
    let utility = Functional::exponential(lambda)?;
    scalar_plan(mdp, |h, x, a, future| {
        let now = utility.evaluate(mdp.reward(h, x, a))?;
        let terms: Vec<f64> = mdp
            .transition(h, x, a)
            .iter()
            .filter(|&&(_, p)| p > 0.0)
            .map(|&(y, p)| p.ln() + lambda * future(y))
            .collect();
        Ok(now + log_sum_exp(&terms) / lambda)
    })
}

/// Optimal expected-return planning.
pub fn plan_expected(mdp: &TabularMdp) -> Result<PlanningResult> {
    scalar_plan(mdp, |h, x, a, future| {
        let next: f64 = mdp
            .transition(h, x, a)
            .iter()
            .map(|&(y, p)| p * future(y))
            .sum();
        Ok(mdp.reward(h, x, a).mean() + next)
    })
}
