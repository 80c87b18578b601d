use thiserror::Error;

use crate::mdp::Diagnostic;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("atoms and weights differ in length ({atoms} vs {weights})")]
    LengthMismatch { atoms: usize, weights: usize },

    #[error("a distribution needs at least one atom")]
    Empty,

    #[error("weight {value} at index {index} is negative or not finite")]
    InvalidWeight { index: usize, value: f64 },

    #[error("atom {value} at index {index} is not finite")]
    InvalidAtom { index: usize, value: f64 },

    #[error("total weight is zero")]
    ZeroMass,

    #[error("weights sum to {sum}, more than 1e-9 away from 1")]
    WeightSum { sum: f64 },

    #[error("result would hold {requested} atoms, above the cap of {cap}")]
    AtomCap { requested: usize, cap: usize },

    #[error("{count} policies to enumerate, above the cap of {cap}")]
    PolicyCap { count: f64, cap: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("projection not applicable: {0}")]
    Projection(String),

    #[error("functional has no finite Lipschitz constant: {0}")]
    NotLipschitz(String),

    #[error("numeric overflow: {0}")]
    Overflow(String),

    #[error("invalid MDP: {}", format_diagnostics(.0))]
    InvalidMdp(Vec<Diagnostic>),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_diagnostics(diagnostics: &[Diagnostic]) -> String {
    diagnostics
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
