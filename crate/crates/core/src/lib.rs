//! Finite-horizon tabular distributional reinforcement learning.

pub mod dist;
pub mod dp;
pub mod error;
pub mod experiments;
pub mod functionals;
pub mod mdp;
pub mod numeric;
pub mod qlearn;

pub use dist::DiscreteDistribution;
pub use error::{Error, Result};
pub use functionals::Functional;
pub use mdp::{DeterministicPolicy, MdpBuilder, TabularMdp};
