use alloc::format;
use alloc::vec;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TabularMdp;
use crate::{num, Error, Result};

/// Parameters of a random Garnet MDP.
///
/// Every state-action row gets exactly `ceil(branching * n_states)` successors,
/// chosen uniformly without replacement, with masses drawn uniform on `[0, 1)`
/// and normalized. Rewards are i.i.d. uniform on `[reward_low, reward_high]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GarnetSpec {
    pub n_states: usize,
    pub n_actions: usize,
    pub branching: f64,
    pub reward_low: f64,
    pub reward_high: f64,
    pub gamma: f64,
}

impl GarnetSpec {
    pub fn new(n_states: usize, n_actions: usize, branching: f64, gamma: f64) -> Self {
        Self {
            n_states,
            n_actions,
            branching,
            reward_low: 0.0,
            reward_high: 1.0,
            gamma,
        }
    }

    /// Number of successors of every state-action pair.
    pub fn successors(&self) -> Result<usize> {
        if !(self.branching > 0.0 && self.branching <= 1.0) {
            return Err(Error::parameter(format!(
                "branching must lie in (0, 1], got {}",
                self.branching
            )));
        }
        let k = num::ceil(self.branching * self.n_states as f64) as usize;
        if k == 0 {
            return Err(Error::parameter("branching leaves no successor states"));
        }
        Ok(k.min(self.n_states))
    }

    pub fn generate(&self, seed: u64) -> Result<TabularMdp> {
        if self.n_states == 0 || self.n_actions == 0 {
            return Err(Error::parameter("Garnet MDPs need at least one state and action"));
        }
        if !(self.reward_low.is_finite() && self.reward_high.is_finite()) || self.reward_low > self.reward_high {
            return Err(Error::parameter(format!(
                "reward range [{}, {}] is invalid",
                self.reward_low, self.reward_high
            )));
        }
        let k = self.successors()?;
        let (n, m) = (self.n_states, self.n_actions);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let mut transitions = vec![0.0; n * m * n];
        let mut masses = vec![0.0; k];
        for row in transitions.chunks_exact_mut(n) {
            let support = index::sample(&mut rng, n, k);
            let total = loop {
                masses.iter_mut().for_each(|x| *x = rng.random::<f64>());
                let total: f64 = masses.iter().sum();
                if total > 0.0 {
                    break total;
                }
            };
            for (next, &w) in support.iter().zip(&masses) {
                row[next] = w / total;
            }
        }

        let width = self.reward_high - self.reward_low;
        let rewards = (0..n * m)
            .map(|_| self.reward_low + width * rng.random::<f64>())
            .collect();
        TabularMdp::new(n, m, self.gamma, rewards, transitions)
    }
}

/// Convenience wrapper around [`GarnetSpec::generate`].
pub fn garnet(
    n_states: usize,
    n_actions: usize,
    branching: f64,
    reward_low: f64,
    reward_high: f64,
    gamma: f64,
    seed: u64,
) -> Result<TabularMdp> {
    GarnetSpec {
        n_states,
        n_actions,
        branching,
        reward_low,
        reward_high,
        gamma,
    }
    .generate(seed)
}
