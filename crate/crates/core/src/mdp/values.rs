use alloc::vec;
use alloc::vec::Vec;

use super::{Policy, TabularMdp, ValueVector};
use crate::{num, Error, Result};

/// Number of Bellman sweeps from `V = 0` that guarantees sup-norm error `tol`.
///
/// The error after `n` sweeps is at most `gamma^n * r_max / (1 - gamma)`.
pub(crate) fn value_sweeps(gamma: f64, r_max: f64, tol: f64) -> usize {
    if gamma == 0.0 {
        1
    } else {
        num::geometric_steps(gamma, r_max / (1.0 - gamma), tol)
    }
}

fn expected_next(row: &[f64], values: &[f64]) -> f64 {
    row.iter().zip(values).map(|(p, v)| p * v).sum()
}

fn q_value(mdp: &TabularMdp, values: &[f64], s: usize, a: usize) -> f64 {
    mdp.reward(s, a) + mdp.gamma() * expected_next(mdp.transition_row(s, a), values)
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::parameter("tolerance must be positive and finite"))
    }
}

/// Optimal values by value iteration with an a-priori sweep count.
pub fn optimal_values(mdp: &TabularMdp, tol: f64) -> Result<ValueVector> {
    check_tol(tol)?;
    let sweeps = value_sweeps(mdp.gamma(), mdp.max_abs_reward(), tol);
    let n = mdp.n_states();
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    for _ in 0..sweeps {
        for (s, out) in next.iter_mut().enumerate() {
            *out = (0..mdp.n_actions())
                .map(|a| q_value(mdp, &v, s, a))
                .fold(f64::NEG_INFINITY, f64::max);
        }
        core::mem::swap(&mut v, &mut next);
    }
    Ok(ValueVector::new(v))
}

/// Values of `policy` by iterating its Bellman operator.
pub fn policy_values(mdp: &TabularMdp, policy: &Policy, tol: f64) -> Result<ValueVector> {
    check_tol(tol)?;
    policy.check_fits(mdp)?;
    let sweeps = value_sweeps(mdp.gamma(), mdp.max_abs_reward(), tol);
    let n = mdp.n_states();
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    for _ in 0..sweeps {
        for (s, out) in next.iter_mut().enumerate() {
            *out = policy
                .row(s)
                .iter()
                .enumerate()
                .filter(|(_, &w)| w > 0.0)
                .map(|(a, &w)| w * q_value(mdp, &v, s, a))
                .sum();
        }
        core::mem::swap(&mut v, &mut next);
    }
    Ok(ValueVector::new(v))
}

/// Deterministic policy greedy with respect to `values`; ties go to the lowest action.
pub fn greedy_policy(mdp: &TabularMdp, values: &ValueVector) -> Result<Policy> {
    if values.len() != mdp.n_states() {
        return Err(Error::parameter("value vector length differs from the state count"));
    }
    let actions: Vec<usize> = (0..mdp.n_states())
        .map(|s| {
            let mut best = 0;
            let mut best_q = q_value(mdp, values, s, 0);
            for a in 1..mdp.n_actions() {
                let q = q_value(mdp, values, s, a);
                if q > best_q {
                    best = a;
                    best_q = q;
                }
            }
            best
        })
        .collect();
    Policy::deterministic(mdp.n_actions(), &actions)
}
