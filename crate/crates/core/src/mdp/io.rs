use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Diagnostic, MdpBuilder, TabularMdp};
use crate::dist::{DiscreteDistribution, RawDistribution};
use crate::error::{Error, Result};

/// On-disk form of a [`TabularMdp`]. States and actions are referenced by
/// name; `transitions` and `rewards` are indexed `[h][x][a]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpFile {
    pub horizon: usize,
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub initial: String,
    pub transitions: Vec<Vec<Vec<Vec<TransitionEntry>>>>,
    pub rewards: Vec<Vec<Vec<RawDistribution>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionEntry {
    pub to: String,
    pub p: f64,
}

impl From<&TabularMdp> for MdpFile {
    fn from(mdp: &TabularMdp) -> Self {
        let (hs, xs, as_) = (mdp.horizon(), mdp.num_states(), mdp.num_actions());
        let transitions = (0..hs)
            .map(|h| {
                (0..xs)
                    .map(|x| {
                        (0..as_)
                            .map(|a| {
                                mdp.transition(h, x, a)
                                    .iter()
                                    .map(|&(to, p)| TransitionEntry {
                                        to: mdp.state_names()[to].clone(),
                                        p,
                                    })
                                    .collect()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let rewards = (0..hs)
            .map(|h| {
                (0..xs)
                    .map(|x| {
                        (0..as_)
                            .map(|a| mdp.reward(h, x, a).clone().into())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        MdpFile {
            horizon: hs,
            states: mdp.state_names().to_vec(),
            actions: mdp.action_names().to_vec(),
            initial: mdp.state_names()[mdp.initial_state()].clone(),
            transitions,
            rewards,
        }
    }
}

impl MdpFile {
    /// Converts to a model, collecting every problem as a diagnostic.
    pub fn into_mdp(self) -> Result<TabularMdp> {
        let (hs, xs, as_) = (self.horizon, self.states.len(), self.actions.len());
        let mut diags = Vec::new();
        let index: HashMap<&str, usize> = self
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let initial = match index.get(self.initial.as_str()) {
            Some(&x) => x,
            None => {
                diags.push(Diagnostic::global(format!(
                    "initial state {:?} is not a declared state",
                    self.initial
                )));
                0
            }
        };
        check_shape("transitions", &self.transitions, hs, xs, as_, &mut diags);
        check_shape("rewards", &self.rewards, hs, xs, as_, &mut diags);
        if !diags.is_empty() {
            return Err(Error::InvalidMdp(diags));
        }
        let mut b = MdpBuilder::new(hs, xs, as_)
            .state_names(self.states.clone())
            .action_names(self.actions.clone())
            .initial_state(initial);
        for h in 0..hs {
            for x in 0..xs {
                for a in 0..as_ {
                    let mut row = Vec::new();
                    for entry in &self.transitions[h][x][a] {
                        match index.get(entry.to.as_str()) {
                            Some(&to) => row.push((to, entry.p)),
                            None => diags.push(Diagnostic::at(
                                h,
                                x,
                                a,
                                format!("unknown next state {:?}", entry.to),
                            )),
                        }
                    }
                    b.set_transition(h, x, a, row);
                    let raw = self.rewards[h][x][a].clone();
                    match DiscreteDistribution::try_from(raw) {
                        Ok(r) => b.set_reward(h, x, a, r),
                        Err(e) => diags.push(Diagnostic::at(h, x, a, format!("reward: {e}"))),
                    }
                }
            }
        }
        diags.extend(
            b.validate()
                .into_iter()
                .filter(|d| d.message != "missing reward distribution"),
        );
        if !diags.is_empty() {
            return Err(Error::InvalidMdp(diags));
        }
        b.build()
    }
}

fn check_shape<T>(
    what: &str,
    table: &[Vec<Vec<T>>],
    hs: usize,
    xs: usize,
    as_: usize,
    diags: &mut Vec<Diagnostic>,
) {
    let ok = table.len() == hs
        && table
            .iter()
            .all(|row| row.len() == xs && row.iter().all(|cell| cell.len() == as_));
    if !ok {
        diags.push(Diagnostic::global(format!(
            "{what} must be indexed [h][x][a] with shape [{hs}][{xs}][{as_}]"
        )));
    }
}

impl TabularMdp {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: MdpFile = serde_json::from_str(text)?;
        file.into_mdp()
    }

    /// Canonical pretty-printed JSON, newline terminated.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&MdpFile::from(self)).expect("serializable");
        s.push('\n');
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }
}
