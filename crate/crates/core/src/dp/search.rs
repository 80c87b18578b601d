use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dist::DiscreteDistribution;
use crate::error::Result;
use crate::functionals::{Functional, PropertyCheck};
use crate::mdp::{build_independence_counterexample, build_translation_counterexample, TabularMdp};

/// Strictness margin used by the search.
pub const SEARCH_MARGIN: f64 = 1e-6;

pub const DEFAULT_SEARCH_SEED: u64 = 0x5eed;

const MIX_WEIGHTS: [f64; 3] = [0.25, 0.5, 0.75];
const SHIFTS: [f64; 4] = [-5.0, -1.0, 1.0, 5.0];

/// A tuple on which a functional breaks the independence or translation
/// property. `values` are `[s(ν₁), s(ν₂), s(lhs), s(rhs)]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PropertyWitness {
    Independence {
        nu1: DiscreteDistribution,
        nu2: DiscreteDistribution,
        nu3: DiscreteDistribution,
        lambda: f64,
        values: [f64; 4],
    },
    Translation {
        nu1: DiscreteDistribution,
        nu2: DiscreteDistribution,
        c: f64,
        values: [f64; 4],
    },
}

impl PropertyWitness {
    pub fn kind(&self) -> &'static str {
        match self {
            PropertyWitness::Independence { .. } => "independence",
            PropertyWitness::Translation { .. } => "translation",
        }
    }

    pub fn values(&self) -> [f64; 4] {
        match self {
            PropertyWitness::Independence { values, .. }
            | PropertyWitness::Translation { values, .. } => *values,
        }
    }

    /// The counter-example MDP matching this witness.
    pub fn build_mdp(&self) -> Result<TabularMdp> {
        match self {
            PropertyWitness::Independence {
                nu1,
                nu2,
                nu3,
                lambda,
                ..
            } => build_independence_counterexample(nu1, nu2, nu3, *lambda),
            PropertyWitness::Translation { nu1, nu2, c, .. } => {
                build_translation_counterexample(nu1, nu2, *c)
            }
        }
    }
}

pub fn find_property_violation(s: &Functional, budget: usize) -> Result<Option<PropertyWitness>> {
    find_property_violation_seeded(s, budget, DEFAULT_SEARCH_SEED)
}

/// Random search over distributions with at most three integer atoms in
/// `[−10, 10]` and weights on a 1/8 grid. Each trial tests independence and
/// then translation; returns the first violation found within `budget` trials.
pub fn find_property_violation_seeded(
    s: &Functional,
    budget: usize,
    seed: u64,
) -> Result<Option<PropertyWitness>> {
    s.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..budget {
        let nu1 = small_distribution(&mut rng);
        let nu2 = small_distribution(&mut rng);
        let nu3 = small_distribution(&mut rng);
        let lambda = *MIX_WEIGHTS.choose(&mut rng).expect("non-empty");
        let c = *SHIFTS.choose(&mut rng).expect("non-empty");
        // orient the pair so the hypothesis s(ν₁) ≥ s(ν₂) holds
        let (nu1, nu2) = if s.evaluate(&nu1)? >= s.evaluate(&nu2)? {
            (nu1, nu2)
        } else {
            (nu2, nu1)
        };
        if let PropertyCheck::Violated { values } =
            s.check_independence_with_margin(&nu1, &nu2, &nu3, lambda, SEARCH_MARGIN)?
        {
            return Ok(Some(PropertyWitness::Independence {
                nu1,
                nu2,
                nu3,
                lambda,
                values,
            }));
        }
        if let PropertyCheck::Violated { values } =
            s.check_translation_with_margin(&nu1, &nu2, c, SEARCH_MARGIN)?
        {
            return Ok(Some(PropertyWitness::Translation {
                nu1,
                nu2,
                c,
                values,
            }));
        }
    }
    Ok(None)
}

fn small_distribution(rng: &mut impl Rng) -> DiscreteDistribution {
    let n = rng.gen_range(1..=3);
    let atoms: Vec<f64> = (0..n).map(|_| rng.gen_range(-10..=10) as f64).collect();
    // split 8 eighths into n positive parts
    let mut cuts: Vec<u32> = (1..8).collect();
    cuts.shuffle(rng);
    let mut cuts = cuts[..n - 1].to_vec();
    cuts.sort_unstable();
    cuts.insert(0, 0);
    cuts.push(8);
    let weights = cuts
        .windows(2)
        .map(|w| (w[1] - w[0]) as f64 / 8.0)
        .collect();
    DiscreteDistribution::new(atoms, weights).expect("valid by construction")
}
