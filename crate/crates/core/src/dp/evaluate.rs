use serde::Serialize;

use super::{QDistributionTable, QScalarTable, Shape};
use crate::dist::{project, wasserstein1, DiscreteDistribution, ProjectionSpec, DEFAULT_ATOM_CAP};
use crate::error::{invalid, Error, Result};
use crate::mdp::{DeterministicPolicy, TabularMdp};
use crate::numeric::binomial;

/// `ρ_h(x,a) * Σ_{x'} p_h(x,a,x') next[x']`.
pub(crate) fn backup(
    mdp: &TabularMdp,
    h: usize,
    x: usize,
    a: usize,
    next: &[DiscreteDistribution],
    cap: usize,
) -> Result<DiscreteDistribution> {
    let row = mdp.transition(h, x, a);
    let reward = mdp.reward(h, x, a);
    if let [(y, _)] = row {
        return reward.convolve_capped(&next[*y], cap);
    }
    let parts: Vec<&DiscreteDistribution> = row.iter().map(|&(y, _)| &next[y]).collect();
    let probs: Vec<f64> = row.iter().map(|&(_, p)| p).collect();
    let mix = DiscreteDistribution::mixture_capped(&parts, &probs, cap)?;
    reward.convolve_capped(&mix, cap)
}

/// Distributions `ν_{h+1}(x', π_{h+1}(x'))` for every `x'`, taken from `table`.
fn successors(
    table: &QDistributionTable,
    policy: &DeterministicPolicy,
    h: usize,
) -> Vec<DiscreteDistribution> {
    let n = table.num_states();
    if h + 1 == table.horizon() {
        return vec![DiscreteDistribution::dirac(0.0); n];
    }
    (0..n)
        .map(|y| table.get(h + 1, y, policy.action(h + 1, y)).clone())
        .collect()
}

pub fn evaluate_policy_exact(
    mdp: &TabularMdp,
    policy: &DeterministicPolicy,
) -> Result<QDistributionTable> {
    evaluate_policy_exact_capped(mdp, policy, DEFAULT_ATOM_CAP)
}

/// Exact return distributions of `policy`, with an explicit atom cap.
pub fn evaluate_policy_exact_capped(
    mdp: &TabularMdp,
    policy: &DeterministicPolicy,
    cap: usize,
) -> Result<QDistributionTable> {
    policy.check(mdp)?;
    let mut table = QDistributionTable::new(mdp);
    for h in (0..mdp.horizon()).rev() {
        let next = successors(&table, policy, h);
        for x in 0..mdp.num_states() {
            for a in 0..mdp.num_actions() {
                let d = backup(mdp, h, x, a, &next, cap)?;
                table.set(h, x, a, d);
            }
        }
    }
    Ok(table)
}

/// Projected evaluation: every backed-up distribution is projected before it
/// is propagated. Records the per-step projection error.
pub fn evaluate_policy_projected(
    mdp: &TabularMdp,
    policy: &DeterministicPolicy,
    spec: &ProjectionSpec,
) -> Result<QDistributionTable> {
    policy.check(mdp)?;
    spec.validate()?;
    let mut table = QDistributionTable::new(mdp);
    let mut errors = vec![0.0; mdp.horizon()];
    for h in (0..mdp.horizon()).rev() {
        let next = successors(&table, policy, h);
        for x in 0..mdp.num_states() {
            for a in 0..mdp.num_actions() {
                let target = backup(mdp, h, x, a, &next, DEFAULT_ATOM_CAP)?;
                let projected = project(&target, spec)?;
                errors[h] = f64::max(errors[h], wasserstein1(&target, &projected));
                table.set(h, x, a, projected);
            }
        }
    }
    table.projection_errors = Some(errors);
    Ok(table)
}

/// Return distribution of `policy` from each state: `out[h][x]`, `h ∈ 0..=H`.
pub fn policy_return_distributions(
    mdp: &TabularMdp,
    policy: &DeterministicPolicy,
    cap: usize,
) -> Result<Vec<Vec<DiscreteDistribution>>> {
    policy.check(mdp)?;
    let n = mdp.num_states();
    let mut out = vec![vec![DiscreteDistribution::dirac(0.0); n]; mdp.horizon() + 1];
    for h in (0..mdp.horizon()).rev() {
        let row = (0..n)
            .map(|x| backup(mdp, h, x, policy.action(h, x), &out[h + 1], cap))
            .collect::<Result<Vec<_>>>()?;
        out[h] = row;
    }
    Ok(out)
}

/// Expected returns `Q^π_h(x, a)`.
pub fn evaluate_policy_expected(
    mdp: &TabularMdp,
    policy: &DeterministicPolicy,
) -> Result<QScalarTable> {
    policy.check(mdp)?;
    let mut table = QScalarTable::filled(mdp, 0.0);
    for h in (0..mdp.horizon()).rev() {
        for x in 0..mdp.num_states() {
            for a in 0..mdp.num_actions() {
                let future: f64 = mdp
                    .transition(h, x, a)
                    .iter()
                    .map(|&(y, p)| {
                        if h + 1 == mdp.horizon() {
                            0.0
                        } else {
                            p * table.get(h + 1, y, policy.action(h + 1, y))
                        }
                    })
                    .sum();
                table.set(h, x, a, mdp.reward(h, x, a).mean() + future);
            }
        }
    }
    Ok(table)
}

/// Values `s_k(ν_h(x,a)) = ∫ r^k e^{λr} dν_h(x,a)` for `k ∈ 0..=order`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentTable {
    #[serde(flatten)]
    shape: Shape,
    lambda: f64,
    order: u32,
    values: Vec<f64>,
}

impl MomentTable {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn get(&self, h: usize, x: usize, a: usize, k: u32) -> f64 {
        assert!(k <= self.order);
        self.values[self.shape.index(h, x, a) * (self.order as usize + 1) + k as usize]
    }

    pub fn moments(&self, h: usize, x: usize, a: usize) -> &[f64] {
        let width = self.order as usize + 1;
        let i = self.shape.index(h, x, a) * width;
        &self.values[i..i + width]
    }
}

/// Joint backward recursion for the moment family, without building any
/// return distribution.
pub fn evaluate_moment_family(
    mdp: &TabularMdp,
    policy: &DeterministicPolicy,
    lambda: f64,
    order: u32,
) -> Result<MomentTable> {
    policy.check(mdp)?;
    if !lambda.is_finite() {
        return Err(invalid("moment family λ must be finite"));
    }
    let shape = Shape::of(mdp);
    let width = order as usize + 1;
    let mut values = vec![0.0; shape.len() * width];
    for x in 0..shape.num_states {
        for a in 0..shape.num_actions {
            // δ_0 has s_0 = 1 and s_k = 0 otherwise
            values[shape.index(shape.horizon, x, a) * width] = 1.0;
        }
    }
    let coeffs: Vec<Vec<f64>> = (0..width)
        .map(|n| (0..=n).map(|k| binomial(n, k)).collect())
        .collect();
    for h in (0..shape.horizon).rev() {
        for x in 0..shape.num_states {
            for a in 0..shape.num_actions {
                let reward = mdp.reward(h, x, a);
                let reward_terms: Vec<f64> = (0..width)
                    .map(|j| reward.expect(|r| r.powi(j as i32) * (lambda * r).exp()))
                    .collect();
                let mut next = vec![0.0; width];
                for &(y, p) in mdp.transition(h, x, a) {
                    let b = if h + 1 == shape.horizon {
                        0
                    } else {
                        policy.action(h + 1, y)
                    };
                    let i = shape.index(h + 1, y, b) * width;
                    for k in 0..width {
                        next[k] += p * values[i + k];
                    }
                }
                let i = shape.index(h, x, a) * width;
                for n in 0..width {
                    let v: f64 = (0..=n)
                        .map(|k| coeffs[n][k] * reward_terms[n - k] * next[k])
                        .sum();
                    if !v.is_finite() {
                        return Err(Error::Overflow(format!(
                            "moment s_{n} at (h={h}, x={x}, a={a}) with λ = {lambda}"
                        )));
                    }
                    values[i + n] = v;
                }
            }
        }
    }
    Ok(MomentTable {
        shape,
        lambda,
        order,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{build_chain, MdpBuilder};

    fn coin_chain(h: usize) -> TabularMdp {
        build_chain(h, &DiscreteDistribution::bernoulli(0.5).unwrap()).unwrap()
    }

    #[test]
    fn chain_h2_is_binomial() {
        let mdp = coin_chain(2);
        let pi = DeterministicPolicy::constant(&mdp, 0).unwrap();
        let t = evaluate_policy_exact(&mdp, &pi).unwrap();
        let expected =
            DiscreteDistribution::new(vec![0.0, 1.0, 2.0], vec![0.25, 0.5, 0.25]).unwrap();
        assert!(t.get(0, 0, 0).approx_eq(&expected, 1e-15));
        assert_eq!(t.get(2, 1, 0), &DiscreteDistribution::dirac(0.0));
    }

    #[test]
    fn chain_matches_repeated_convolution() {
        let rho = DiscreteDistribution::new(vec![-1.0, 0.5, 2.0], vec![0.2, 0.5, 0.3]).unwrap();
        let mdp = build_chain(5, &rho).unwrap();
        let pi = DeterministicPolicy::constant(&mdp, 0).unwrap();
        let t = evaluate_policy_exact(&mdp, &pi).unwrap();
        let mut oracle = DiscreteDistribution::dirac(0.0);
        for _ in 0..5 {
            oracle = oracle.convolve(&rho).unwrap();
        }
        assert!(t.get(0, 0, 0).approx_eq(&oracle, 1e-12));
    }

    #[test]
    fn trivial_cases() {
        let mdp = build_chain(1, &DiscreteDistribution::dirac(3.0)).unwrap();
        let pi = DeterministicPolicy::constant(&mdp, 0).unwrap();
        assert_eq!(
            evaluate_policy_exact(&mdp, &pi).unwrap().get(0, 0, 0),
            &DiscreteDistribution::dirac(3.0)
        );
        let zero = build_chain(4, &DiscreteDistribution::dirac(0.0)).unwrap();
        let t = evaluate_policy_exact(&zero, &pi_for(&zero)).unwrap();
        for h in 0..=4 {
            for x in 0..5 {
                assert_eq!(t.get(h, x, 0), &DiscreteDistribution::dirac(0.0));
            }
        }
    }

    fn pi_for(mdp: &TabularMdp) -> DeterministicPolicy {
        DeterministicPolicy::constant(mdp, 0).unwrap()
    }

    #[test]
    fn atom_cap_is_enforced() {
        let mdp = coin_chain(12);
        assert!(matches!(
            evaluate_policy_exact_capped(&mdp, &pi_for(&mdp), 4),
            Err(Error::AtomCap { .. })
        ));
    }

    #[test]
    fn projected_records_errors() {
        let mdp = coin_chain(5);
        let spec = ProjectionSpec::quantile(3);
        let t = evaluate_policy_projected(&mdp, &pi_for(&mdp), &spec).unwrap();
        let errs = t.projection_errors().unwrap();
        assert_eq!(errs.len(), 5);
        // B(0.5) → ⅔δ_0 + ⅓δ_1 moves 1/6 of the mass by 1
        assert!((errs[4] - 1.0 / 6.0).abs() < 1e-12);
        let exact = evaluate_policy_exact(&mdp, &pi_for(&mdp)).unwrap();
        let total: f64 = errs.iter().sum();
        assert!(t.sup_w1(&exact) <= total + 1e-12);
        assert!(t
            .get(0, 0, 0)
            .weights()
            .iter()
            .all(|w| (w * 3.0 - (w * 3.0).round()).abs() < 1e-9));
    }

    #[test]
    fn left_grid_rejects_non_family_targets() {
        let mdp = coin_chain(2);
        let spec = ProjectionSpec::quantile_left_grid(4);
        assert!(matches!(
            evaluate_policy_projected(&mdp, &pi_for(&mdp), &spec),
            Err(Error::Projection(_))
        ));
    }

    #[test]
    fn moments_on_chain() {
        let mdp = coin_chain(2);
        let m = evaluate_moment_family(&mdp, &pi_for(&mdp), 0.0, 2).unwrap();
        assert_eq!(m.moments(0, 0, 0), &[1.0, 1.0, 1.5]);
        for h in 0..=2 {
            assert_eq!(m.get(h, 1, 0, 0), 1.0);
        }
    }

    #[test]
    fn moments_overflow_is_reported() {
        let mdp = build_chain(3, &DiscreteDistribution::dirac(400.0)).unwrap();
        assert!(matches!(
            evaluate_moment_family(&mdp, &pi_for(&mdp), 1.0, 1),
            Err(Error::Overflow(_))
        ));
    }

    #[test]
    fn expected_values_match_distribution_means() {
        let mdp = MdpBuilder::new(2, 2, 2)
            .transition(0, 0, 0, vec![(0, 0.3), (1, 0.7)])
            .transition(0, 0, 1, vec![(1, 1.0)])
            .transition(0, 1, 0, vec![(0, 1.0)])
            .transition(0, 1, 1, vec![(0, 0.5), (1, 0.5)])
            .reward(
                0,
                0,
                0,
                DiscreteDistribution::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap(),
            )
            .reward(1, 1, 1, DiscreteDistribution::dirac(2.0))
            .default_self_loops()
            .default_reward(&DiscreteDistribution::dirac(0.25))
            .build()
            .unwrap();
        let pi = DeterministicPolicy::new(&mdp, vec![vec![0, 1], vec![1, 1]]).unwrap();
        let d = evaluate_policy_exact(&mdp, &pi).unwrap();
        let q = evaluate_policy_expected(&mdp, &pi).unwrap();
        for h in 0..=2 {
            for x in 0..2 {
                for a in 0..2 {
                    assert!((d.get(h, x, a).mean() - q.get(h, x, a)).abs() < 1e-12);
                }
            }
        }
        let v = policy_return_distributions(&mdp, &pi, DEFAULT_ATOM_CAP).unwrap();
        assert_eq!(&v[0][0], d.get(0, 0, 0));
    }
}
