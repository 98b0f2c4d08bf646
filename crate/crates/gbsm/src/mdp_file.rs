//! JSON documents holding a single tabular MDP.
//!
//! ```json
//! {"n_states": 2, "n_actions": 1, "gamma": 0.9,
//!  "rewards": [[0.0], [1.0]],
//!  "transitions": [[[0.5, 0.5]], [[0.0, 1.0]]]}
//! ```
//!
//! Floats are written in shortest round-trip form, so save then load is
//! lossless. Every load re-validates the MDP invariants.

use std::fs;
use std::path::Path;

use gbsm_core::TabularMdp;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MdpDocument {
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    rewards: Vec<Vec<f64>>,
    transitions: Vec<Vec<Vec<f64>>>,
}

impl From<&TabularMdp> for MdpDocument {
    fn from(m: &TabularMdp) -> Self {
        let (n, k) = (m.n_states(), m.n_actions());
        Self {
            n_states: n,
            n_actions: k,
            gamma: m.gamma(),
            rewards: (0..n).map(|s| m.reward_row(s).to_vec()).collect(),
            transitions: (0..n)
                .map(|s| (0..k).map(|a| m.transition_row(s, a).to_vec()).collect())
                .collect(),
        }
    }
}

impl MdpDocument {
    fn into_mdp(self) -> Result<TabularMdp> {
        let (n, k) = (self.n_states, self.n_actions);
        if self.rewards.len() != n || self.rewards.iter().any(|r| r.len() != k) {
            return Err(AppError::Format(format!("rewards must be an {n}x{k} array")));
        }
        if self.transitions.len() != n
            || self
                .transitions
                .iter()
                .any(|rows| rows.len() != k || rows.iter().any(|r| r.len() != n))
        {
            return Err(AppError::Format(format!("transitions must be an {n}x{k}x{n} array")));
        }
        let rewards = self.rewards.concat();
        let transitions = self.transitions.into_iter().flatten().flatten().collect();
        TabularMdp::new(n, k, self.gamma, rewards, transitions)
            .map_err(|e| AppError::Format(format!("invariant violated: {e}")))
    }
}

pub fn mdp_to_json(m: &TabularMdp) -> String {
    serde_json::to_string(&MdpDocument::from(m)).expect("MDP documents always serialize")
}

pub fn mdp_from_json(text: &str) -> Result<TabularMdp> {
    let doc: MdpDocument = serde_json::from_str(text).map_err(|e| AppError::Format(e.to_string()))?;
    doc.into_mdp()
}

pub fn save_mdp(m: &TabularMdp, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, mdp_to_json(m) + "\n").map_err(|e| AppError::io(path, e))
}

pub fn load_mdp(path: impl AsRef<Path>) -> Result<TabularMdp> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    mdp_from_json(&text)
}
