//! Approximate MDPs: state aggregation, empirical sampling and noisy transitions.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};

use crate::num::ceil;
use crate::{Error, Result, TabularMdp};

/// How non-representative states pick their representative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignStrategy {
    /// Uniformly at random from the representatives (seeded).
    Random,
    /// `representatives[s % |U|]`.
    Modulo,
}

/// Which states become representatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RepresentativeChoice {
    /// The first `ceil(fraction * n)` state indices.
    #[default]
    Prefix,
    /// A seeded uniformly random subset of the same size.
    RandomSubset,
}

/// A map from every state to a representative state in `U`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregationMap {
    representatives: Vec<usize>,
    map: Vec<usize>,
}

impl AggregationMap {
    /// Validates that representatives map to themselves and every target is one.
    pub fn new(representatives: Vec<usize>, map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut is_rep = vec![false; n];
        for &u in &representatives {
            if u >= n {
                return Err(Error::parameter(format!("representative {u} is not a state (n = {n})")));
            }
            if is_rep[u] {
                return Err(Error::parameter(format!("representative {u} listed twice")));
            }
            is_rep[u] = true;
            if map[u] != u {
                return Err(Error::parameter(format!("representative {u} maps to {}", map[u])));
            }
        }
        if let Some(s) = (0..n).find(|&s| map[s] >= n || !is_rep[map[s]]) {
            return Err(Error::parameter(format!(
                "state {s} maps to non-representative {}",
                map[s]
            )));
        }
        Ok(Self { representatives, map })
    }

    pub fn identity(n_states: usize) -> Self {
        Self {
            representatives: (0..n_states).collect(),
            map: (0..n_states).collect(),
        }
    }

    pub fn n_states(&self) -> usize {
        self.map.len()
    }

    pub fn representatives(&self) -> &[usize] {
        &self.representatives
    }

    /// Representative of `s`.
    pub fn get(&self, s: usize) -> usize {
        self.map[s]
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }
}

/// Aggregation with the default prefix choice of representatives.
pub fn make_aggregation(n_states: usize, fraction: f64, strategy: AssignStrategy, seed: u64) -> Result<AggregationMap> {
    make_aggregation_with(n_states, fraction, strategy, RepresentativeChoice::Prefix, seed)
}

pub fn make_aggregation_with(
    n_states: usize,
    fraction: f64,
    strategy: AssignStrategy,
    choice: RepresentativeChoice,
    seed: u64,
) -> Result<AggregationMap> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::parameter(format!(
            "aggregation fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let size = (ceil(fraction * n_states as f64) as usize).min(n_states);
    if size == 0 {
        return Err(Error::parameter("aggregation keeps no representative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let representatives: Vec<usize> = match choice {
        RepresentativeChoice::Prefix => (0..size).collect(),
        RepresentativeChoice::RandomSubset => {
            let mut reps = index::sample(&mut rng, n_states, size).into_vec();
            reps.sort_unstable();
            reps
        }
    };
    let mut map = vec![usize::MAX; n_states];
    for &u in &representatives {
        map[u] = u;
    }
    for s in 0..n_states {
        if map[s] == usize::MAX {
            map[s] = match strategy {
                AssignStrategy::Random => representatives[rng.random_range(0..size)],
                AssignStrategy::Modulo => representatives[s % size],
            };
        }
    }
    AggregationMap::new(representatives, map)
}

fn check_agg(m: &TabularMdp, agg: &AggregationMap) -> Result<()> {
    if agg.n_states() != m.n_states() {
        return Err(Error::incompatible(format!(
            "aggregation covers {} states but the MDP has {}",
            agg.n_states(),
            m.n_states()
        )));
    }
    Ok(())
}

/// Every state takes its representative's rewards and transitions, with
/// transition mass collapsed onto representatives.
pub fn aggregate_mdp(m: &TabularMdp, agg: &AggregationMap) -> Result<TabularMdp> {
    check_agg(m, agg)?;
    let (n, k) = (m.n_states(), m.n_actions());
    let mut rewards = Vec::with_capacity(n * k);
    let mut transitions = vec![0.0; n * k * n];
    for s in 0..n {
        let u = agg.get(s);
        rewards.extend_from_slice(m.reward_row(u));
        for a in 0..k {
            let out = &mut transitions[(s * k + a) * n..(s * k + a + 1) * n];
            for (next, &p) in m.transition_row(u, a).iter().enumerate() {
                out[agg.get(next)] += p;
            }
        }
    }
    TabularMdp::new(n, k, m.gamma(), rewards, transitions)
}

/// Every state takes its representative's rewards and transitions unchanged.
///
/// This is the intermediate MDP between `m` and [`aggregate_mdp`]: it shares the
/// representatives' dynamics but not the collapsed successor states.
pub fn representative_mdp(m: &TabularMdp, agg: &AggregationMap) -> Result<TabularMdp> {
    check_agg(m, agg)?;
    let (n, k) = (m.n_states(), m.n_actions());
    let mut rewards = Vec::with_capacity(n * k);
    let mut transitions = Vec::with_capacity(n * k * n);
    for s in 0..n {
        let u = agg.get(s);
        rewards.extend_from_slice(m.reward_row(u));
        for a in 0..k {
            transitions.extend_from_slice(m.transition_row(u, a));
        }
    }
    TabularMdp::new(n, k, m.gamma(), rewards, transitions)
}

/// Replaces every transition row by the empirical distribution of `k` draws.
///
/// Row `(s, a)` uses its own stream seeded with `seed ^ (s * n_actions + a)`.
pub fn empirical_mdp(m: &TabularMdp, k: usize, seed: u64) -> Result<TabularMdp> {
    if k == 0 {
        return Err(Error::parameter("sample count must be positive"));
    }
    let n_a = m.n_actions();
    let mut counts = vec![0usize; m.n_states()];
    m.map_rows(|s, a, row, out| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (s * n_a + a) as u64);
        counts.iter_mut().for_each(|c| *c = 0);
        let last = row.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        for _ in 0..k {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = last;
            for (j, &p) in row.iter().enumerate() {
                acc += p;
                if p > 0.0 && u < acc {
                    pick = j;
                    break;
                }
            }
            counts[pick] += 1;
        }
        for (o, &c) in out.iter_mut().zip(&counts) {
            *o = c as f64 / k as f64;
        }
    })
}

/// Adds `N(0, stddev^2)` noise to every transition entry, clips at zero and
/// renormalizes. A row that clips to all zeros becomes uniform.
pub fn gaussian_perturb_mdp(m: &TabularMdp, stddev: f64, seed: u64) -> Result<TabularMdp> {
    if !(stddev >= 0.0 && stddev.is_finite()) {
        return Err(Error::parameter(format!(
            "noise stddev must be finite and nonnegative, got {stddev}"
        )));
    }
    if stddev == 0.0 {
        return Ok(m.clone());
    }
    let normal = Normal::new(0.0, stddev).map_err(|e| Error::parameter(format!("{e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = m.n_states();
    m.map_rows(|_, _, row, out| {
        for (o, &p) in out.iter_mut().zip(row) {
            *o = (p + normal.sample(&mut rng)).max(0.0);
        }
        let total: f64 = out.iter().sum();
        if total > 0.0 {
            out.iter_mut().for_each(|x| *x /= total);
        } else {
            out.iter_mut().for_each(|x| *x = 1.0 / n as f64);
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::garnet;

    fn sample() -> TabularMdp {
        garnet(8, 2, 0.5, 0.0, 1.0, 0.9, 9).unwrap()
    }

    #[test]
    fn full_fraction_is_identity() {
        let agg = make_aggregation(6, 1.0, AssignStrategy::Random, 3).unwrap();
        assert_eq!(agg, AggregationMap::identity(6));
        let m = sample();
        assert_eq!(aggregate_mdp(&m, &AggregationMap::identity(8)).unwrap(), m);
    }

    #[test]
    fn modulo_rule() {
        let agg = make_aggregation(4, 0.5, AssignStrategy::Modulo, 0).unwrap();
        assert_eq!(agg.representatives(), &[0, 1]);
        assert_eq!(agg.map(), &[0, 1, 0, 1]);
    }

    #[test]
    fn random_half_has_half_representatives() {
        for seed in 0..20 {
            let agg = make_aggregation(20, 0.5, AssignStrategy::Random, seed).unwrap();
            assert_eq!(agg.representatives().len(), 10);
            assert!(agg.map().iter().all(|&u| u < 10));
            let sub = make_aggregation_with(
                20,
                0.5,
                AssignStrategy::Random,
                RepresentativeChoice::RandomSubset,
                seed,
            )
            .unwrap();
            assert_eq!(sub.representatives().len(), 10);
        }
    }

    #[test]
    fn bad_fraction_is_rejected() {
        assert!(make_aggregation(4, 0.0, AssignStrategy::Modulo, 0).is_err());
        assert!(make_aggregation(4, 1.5, AssignStrategy::Modulo, 0).is_err());
    }

    #[test]
    fn map_validation() {
        assert!(AggregationMap::new(vec![0], vec![0, 1]).is_err());
        assert!(AggregationMap::new(vec![1], vec![1, 0]).is_err());
        assert!(AggregationMap::new(vec![1], vec![1, 1]).is_ok());
    }

    #[test]
    fn total_collapse() {
        let m = sample();
        let agg = AggregationMap::new(vec![3], vec![3; 8]).unwrap();
        let out = aggregate_mdp(&m, &agg).unwrap();
        for s in 0..8 {
            assert_eq!(out.reward_row(s), m.reward_row(3));
            for a in 0..2 {
                let row = out.transition_row(s, a);
                assert!((row[3] - 1.0).abs() <= 1e-12);
                assert_eq!(row.iter().filter(|&&p| p > 0.0).count(), 1);
            }
        }
    }

    #[test]
    fn aggregated_mass_sits_on_representatives() {
        let m = sample();
        let agg = make_aggregation(8, 0.5, AssignStrategy::Modulo, 0).unwrap();
        let out = aggregate_mdp(&m, &agg).unwrap();
        for s in 0..8 {
            for a in 0..2 {
                let row = out.transition_row(s, a);
                assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                assert!(row[4..].iter().all(|&p| p == 0.0));
            }
        }
        assert_eq!(aggregate_mdp(&out, &agg).unwrap(), out);
    }

    #[test]
    fn empirical_rows_are_counts() {
        let m = sample();
        let k = 7;
        let e = empirical_mdp(&m, k, 11).unwrap();
        assert_eq!(e.rewards(), m.rewards());
        for s in 0..8 {
            for a in 0..2 {
                for (j, &p) in e.transition_row(s, a).iter().enumerate() {
                    let c = p * k as f64;
                    assert!((c - c.round()).abs() <= 1e-12);
                    if p > 0.0 {
                        assert!(m.transition_row(s, a)[j] > 0.0);
                    }
                }
            }
        }
        assert_eq!(e, empirical_mdp(&m, k, 11).unwrap());
        assert!(empirical_mdp(&m, 0, 11).is_err());
    }

    #[test]
    fn empirical_dirac_is_exact() {
        let m = TabularMdp::from_nested(
            0.5,
            &[vec![0.0], vec![1.0]],
            &[vec![vec![0.0, 1.0]], vec![vec![1.0, 0.0]]],
        )
        .unwrap();
        assert_eq!(empirical_mdp(&m, 13, 4).unwrap(), m);
    }

    #[test]
    fn zero_noise_is_identity() {
        let m = sample();
        assert_eq!(gaussian_perturb_mdp(&m, 0.0, 5).unwrap(), m);
        let p = gaussian_perturb_mdp(&m, 0.2, 5).unwrap();
        assert_ne!(p, m);
        assert_eq!(p.rewards(), m.rewards());
        assert!(gaussian_perturb_mdp(&m, -1.0, 5).is_err());
    }
}
