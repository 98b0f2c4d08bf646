//! Finite tabular MDPs, policies and value functions.

mod garnet;
mod values;

use alloc::format;
use alloc::vec::Vec;
use core::ops::Deref;

use crate::{Error, Result};

pub use garnet::{garnet, GarnetSpec};
pub use values::{greedy_policy, optimal_values, policy_values};

/// Tolerance on the sum of every probability row.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// A finite MDP with dense rewards and a dense row-stochastic transition tensor.
///
/// Rewards are stored row-major as `[state][action]` and transitions as
/// `[state][action][next_state]`. Construction validates every invariant, so a
/// `TabularMdp` in hand is always well formed.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    rewards: Vec<f64>,
    transitions: Vec<f64>,
}

impl TabularMdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        gamma: f64,
        rewards: Vec<f64>,
        transitions: Vec<f64>,
    ) -> Result<Self> {
        if n_states == 0 {
            return Err(Error::invariant("n_states must be positive"));
        }
        if n_actions == 0 {
            return Err(Error::invariant("n_actions must be positive"));
        }
        if !(gamma.is_finite() && (0.0..1.0).contains(&gamma)) {
            return Err(Error::invariant(format!("gamma must lie in [0, 1), got {gamma}")));
        }
        if rewards.len() != n_states * n_actions {
            return Err(Error::invariant(format!(
                "rewards has {} entries, expected {}x{}",
                rewards.len(),
                n_states,
                n_actions
            )));
        }
        if transitions.len() != n_states * n_actions * n_states {
            return Err(Error::invariant(format!(
                "transitions has {} entries, expected {}x{}x{}",
                transitions.len(),
                n_states,
                n_actions,
                n_states
            )));
        }
        if let Some(i) = rewards.iter().position(|r| !r.is_finite()) {
            return Err(Error::invariant(format!(
                "reward at state {}, action {} is not finite",
                i / n_actions,
                i % n_actions
            )));
        }
        for (row_idx, row) in transitions.chunks_exact(n_states).enumerate() {
            let (s, a) = (row_idx / n_actions, row_idx % n_actions);
            check_probability_row(row)
                .map_err(|why| Error::invariant(format!("transition row for state {s}, action {a} {why}")))?;
        }
        Ok(Self {
            n_states,
            n_actions,
            gamma,
            rewards,
            transitions,
        })
    }

    /// Builds an MDP from nested `[state][action]` and `[state][action][next]` arrays.
    pub fn from_nested(gamma: f64, rewards: &[Vec<f64>], transitions: &[Vec<Vec<f64>>]) -> Result<Self> {
        let n_states = rewards.len();
        let n_actions = rewards.first().map_or(0, Vec::len);
        if transitions.len() != n_states {
            return Err(Error::invariant(format!(
                "transitions cover {} states but rewards cover {}",
                transitions.len(),
                n_states
            )));
        }
        let mut flat_r = Vec::with_capacity(n_states * n_actions);
        let mut flat_p = Vec::with_capacity(n_states * n_actions * n_states);
        for (s, (r_row, p_rows)) in rewards.iter().zip(transitions).enumerate() {
            if r_row.len() != n_actions || p_rows.len() != n_actions {
                return Err(Error::invariant(format!(
                    "state {s} does not list exactly {n_actions} actions"
                )));
            }
            flat_r.extend_from_slice(r_row);
            for (a, p) in p_rows.iter().enumerate() {
                if p.len() != n_states {
                    return Err(Error::invariant(format!(
                        "transition row for state {s}, action {a} has {} entries, expected {n_states}",
                        p.len()
                    )));
                }
                flat_p.extend_from_slice(p);
            }
        }
        Self::new(n_states, n_actions, gamma, flat_r, flat_p)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[s * self.n_actions + a]
    }

    /// Reward row of state `s`, indexed by action.
    pub fn reward_row(&self, s: usize) -> &[f64] {
        &self.rewards[s * self.n_actions..(s + 1) * self.n_actions]
    }

    /// Distribution over next states after taking `a` in `s`.
    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transitions[start..start + self.n_states]
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn transitions(&self) -> &[f64] {
        &self.transitions
    }

    /// Same rewards and dynamics under a different discount factor.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(
            self.n_states,
            self.n_actions,
            gamma,
            self.rewards.clone(),
            self.transitions.clone(),
        )
    }

    /// Largest absolute reward, the scale of the value-iteration error bound.
    pub fn max_abs_reward(&self) -> f64 {
        self.rewards.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Rebuilds the MDP with each transition row replaced by `f(s, a, row)`.
    pub(crate) fn map_rows(&self, mut f: impl FnMut(usize, usize, &[f64], &mut [f64])) -> Result<Self> {
        let mut transitions = alloc::vec![0.0; self.transitions.len()];
        for (idx, out) in transitions.chunks_exact_mut(self.n_states).enumerate() {
            let (s, a) = (idx / self.n_actions, idx % self.n_actions);
            f(s, a, self.transition_row(s, a), out);
        }
        Self::new(
            self.n_states,
            self.n_actions,
            self.gamma,
            self.rewards.clone(),
            transitions,
        )
    }
}

fn check_probability_row(row: &[f64]) -> core::result::Result<(), alloc::string::String> {
    let mut sum = 0.0;
    for (i, &p) in row.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(format!("has invalid probability {p} at index {i}"));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > ROW_SUM_TOL {
        return Err(format!("sums to {sum}, not 1"));
    }
    Ok(())
}

/// A stochastic policy stored as an `n_states x n_actions` row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    n_states: usize,
    n_actions: usize,
    probs: Vec<f64>,
}

impl Policy {
    pub fn new(n_states: usize, n_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if n_states == 0 || n_actions == 0 || probs.len() != n_states * n_actions {
            return Err(Error::parameter(format!(
                "policy needs {n_states}x{n_actions} positive dimensions and matching data, got {} entries",
                probs.len()
            )));
        }
        for (s, row) in probs.chunks_exact(n_actions).enumerate() {
            check_probability_row(row).map_err(|why| Error::invariant(format!("policy row for state {s} {why}")))?;
        }
        Ok(Self {
            n_states,
            n_actions,
            probs,
        })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        let p = 1.0 / n_actions as f64;
        Self {
            n_states,
            n_actions,
            probs: alloc::vec![p; n_states * n_actions],
        }
    }

    /// Deterministic policy choosing `actions[s]` in state `s`.
    pub fn deterministic(n_actions: usize, actions: &[usize]) -> Result<Self> {
        let mut probs = alloc::vec![0.0; actions.len() * n_actions];
        for (s, &a) in actions.iter().enumerate() {
            if a >= n_actions {
                return Err(Error::parameter(format!(
                    "action {a} for state {s} is out of range for {n_actions} actions"
                )));
            }
            probs[s * n_actions + a] = 1.0;
        }
        Self::new(actions.len(), n_actions, probs)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    fn check_fits(&self, mdp: &TabularMdp) -> Result<()> {
        if self.n_states != mdp.n_states() || self.n_actions != mdp.n_actions() {
            return Err(Error::parameter(format!(
                "policy is {}x{} but the MDP has {} states and {} actions",
                self.n_states,
                self.n_actions,
                mdp.n_states(),
                mdp.n_actions()
            )));
        }
        Ok(())
    }
}

/// State values `V(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueVector(Vec<f64>);

impl ValueVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// `max_s |self(s) - other(s)|`.
    pub fn sup_distance(&self, other: &ValueVector) -> f64 {
        self.0.iter().zip(&other.0).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl Deref for ValueVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Policy for target states acting as `source_policy` does in `state_map[s']`.
pub fn transfer_policy(source_policy: &Policy, state_map: &[usize], target_n_states: usize) -> Result<Policy> {
    if state_map.len() != target_n_states {
        return Err(Error::parameter(format!(
            "state map has {} entries for {} target states",
            state_map.len(),
            target_n_states
        )));
    }
    let n_actions = source_policy.n_actions();
    let mut probs = Vec::with_capacity(target_n_states * n_actions);
    for (t, &s) in state_map.iter().enumerate() {
        if s >= source_policy.n_states() {
            return Err(Error::parameter(format!(
                "target state {t} maps to source state {s}, but the source has {} states",
                source_policy.n_states()
            )));
        }
        probs.extend_from_slice(source_policy.row(s));
    }
    Ok(Policy {
        n_states: target_n_states,
        n_actions,
        probs,
    })
}

pub(crate) fn check_comparable(m1: &TabularMdp, m2: &TabularMdp) -> Result<()> {
    if m1.n_actions() != m2.n_actions() {
        return Err(Error::incompatible(format!(
            "action counts differ ({} vs {})",
            m1.n_actions(),
            m2.n_actions()
        )));
    }
    check_same_gamma(m1, m2)
}

pub(crate) fn check_same_gamma(m1: &TabularMdp, m2: &TabularMdp) -> Result<()> {
    if m1.gamma() != m2.gamma() {
        return Err(Error::incompatible(format!(
            "discount factors differ ({} vs {})",
            m1.gamma(),
            m2.gamma()
        )));
    }
    Ok(())
}

/// `max_{s, s', a} |R1(s, a) - R2(s', a)|`.
pub fn reward_span(m1: &TabularMdp, m2: &TabularMdp) -> Result<f64> {
    check_comparable(m1, m2)?;
    Ok(reward_span_unchecked(m1, m2))
}

/// Reward span over all action pairs; for equal action sets restricted to
/// matching actions it reduces to [`reward_span`].
pub(crate) fn reward_span_unchecked(m1: &TabularMdp, m2: &TabularMdp) -> f64 {
    // max |x - y| over two sets is max(max1 - min2, max2 - min1) per action.
    let mut span = 0.0f64;
    for a in 0..m1.n_actions() {
        let (lo1, hi1) = column_range(m1, a);
        let (lo2, hi2) = column_range(m2, a);
        span = span.max(hi1 - lo2).max(hi2 - lo1);
    }
    span
}

fn column_range(m: &TabularMdp, a: usize) -> (f64, f64) {
    (0..m.n_states()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
        let r = m.reward(s, a);
        (lo.min(r), hi.max(r))
    })
}

/// Policy-averaged rewards `R^pi(s)` and transitions `P^pi(s'|s)` (row-major `n x n`).
pub fn on_policy_reduce(mdp: &TabularMdp, policy: &Policy) -> Result<(Vec<f64>, Vec<f64>)> {
    policy.check_fits(mdp)?;
    let n = mdp.n_states();
    let mut rewards = alloc::vec![0.0; n];
    let mut transitions = alloc::vec![0.0; n * n];
    for s in 0..n {
        let out = &mut transitions[s * n..(s + 1) * n];
        for (a, &w) in policy.row(s).iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            rewards[s] += w * mdp.reward(s, a);
            for (o, &p) in out.iter_mut().zip(mdp.transition_row(s, a)) {
                *o += w * p;
            }
        }
    }
    Ok((rewards, transitions))
}

/// The single-action MDP induced by following `policy` in `mdp`.
pub fn on_policy_mdp(mdp: &TabularMdp, policy: &Policy) -> Result<TabularMdp> {
    let (rewards, transitions) = on_policy_reduce(mdp, policy)?;
    TabularMdp::new(mdp.n_states(), 1, mdp.gamma(), rewards, transitions)
}
