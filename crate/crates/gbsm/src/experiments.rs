//! Seeded Garnet campaigns that pit each bound against the quantity it bounds.
//!
//! Trial `t` draws its first MDP from seed `base_seed + t` and its second from
//! `base_seed + t + pair_offset` (default `2^32`), for every discount factor.
//! Auxiliary randomness (aggregation maps, noise, samples) is derived from
//! those seeds by XOR with fixed salts, so every row depends only on its own
//! `(gamma, trial)` and campaigns are reproducible bit for bit.
//!
//! Each row is checked before it is returned; a violated inequality aborts
//! the campaign with [`AppError::Violation`].

use gbsm_core::approx::{aggregate_mdp, empirical_mdp, gaussian_perturb_mdp, make_aggregation, AssignStrategy};
use gbsm_core::bounds::{
    bsm_aggregation_bounds, bsm_estimation_bound, gbsm_aggregation_bound, gbsm_estimation_bound, ground_truth_regret,
    identical_space_transfer_bound, metric_approximation_error, optimal_state_mapping, sample_complexity, sigma_pair,
    transfer_regret_bound, BoundReport,
};
use gbsm_core::mdp::{greedy_policy, optimal_values, reward_span, transfer_policy, GarnetSpec};
use gbsm_core::metric::gbsm;
use gbsm_core::TabularMdp;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{AppError, Result};
use crate::table::fmt17;

/// Offset between the seeds of the two MDPs of a trial.
pub const PAIR_SEED_OFFSET: u64 = 1 << 32;

const AGG_SALT: u64 = 0x9e37_79b9_7f4a_7c15;
const NOISE_SALT: u64 = 0xbf58_476d_1ce4_e5b9;
const NOISE_STD_SALT: u64 = 0x94d0_49bb_1331_11eb;
const SAMPLE_SALT: u64 = 0x2545_f491_4f6c_dd1d;

/// Noise level range used when no fixed level is configured.
pub const NOISE_STD_RANGE: (f64, f64) = (0.1, 0.3);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimationMode {
    /// Gaussian noise on the transition rows.
    Noise,
    /// Empirical rows from a fixed number of samples.
    Sample,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub gammas: Vec<f64>,
    pub trials: usize,
    pub n_states: usize,
    pub n_actions: usize,
    pub branching: f64,
    /// Metric tolerance.
    pub tol: f64,
    /// Tolerance used instead of `tol` for `gamma >= 0.9`, where sweeps are slowest.
    pub high_gamma_tol: Option<f64>,
    /// Tolerance for exact value computations.
    pub value_tol: f64,
    pub base_seed: u64,
    /// Seed offset of the second MDP; 0 makes both MDPs identical.
    pub pair_offset: u64,
    pub agg_fraction: f64,
    pub agg_strategy: AssignStrategy,
    /// Fixed noise level; `None` draws one per trial from [`NOISE_STD_RANGE`].
    pub noise_std: Option<f64>,
    pub samples: usize,
    pub mode: EstimationMode,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            gammas: (1..=9).map(|i| f64::from(i) / 10.0).collect(),
            trials: 100,
            n_states: 20,
            n_actions: 5,
            branching: 0.5,
            tol: 1e-6,
            high_gamma_tol: Some(1e-4),
            value_tol: 1e-10,
            base_seed: 0,
            pair_offset: PAIR_SEED_OFFSET,
            agg_fraction: 0.5,
            agg_strategy: AssignStrategy::Random,
            noise_std: None,
            samples: 200,
            mode: EstimationMode::Noise,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(AppError::Config(msg));
        if self.gammas.is_empty() {
            return bad("at least one discount factor is required".into());
        }
        if let Some(g) = self.gammas.iter().find(|g| !(**g > 0.0 && **g < 1.0)) {
            return bad(format!("discount factors must lie in (0, 1), got {g}"));
        }
        if self.trials == 0 {
            return bad("trials must be positive".into());
        }
        if self.n_states == 0 || self.n_actions == 0 {
            return bad("MDPs need at least one state and one action".into());
        }
        if !(self.branching > 0.0 && self.branching <= 1.0) {
            return bad(format!("branching must lie in (0, 1], got {}", self.branching));
        }
        for (name, t) in [("tol", self.tol), ("value tol", self.value_tol)]
            .into_iter()
            .chain(self.high_gamma_tol.map(|t| ("high-gamma tol", t)))
        {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("{name} must be positive, got {t}"));
            }
        }
        if !(self.agg_fraction > 0.0 && self.agg_fraction <= 1.0) {
            return bad(format!(
                "aggregation fraction must lie in (0, 1], got {}",
                self.agg_fraction
            ));
        }
        if let Some(s) = self.noise_std {
            if !(s >= 0.0 && s.is_finite()) {
                return bad(format!("noise stddev must be nonnegative, got {s}"));
            }
        }
        if self.samples == 0 {
            return bad("sample count must be positive".into());
        }
        Ok(())
    }

    pub fn tol_for(&self, gamma: f64) -> f64 {
        match self.high_gamma_tol {
            Some(t) if gamma >= 0.9 - 1e-12 => t,
            _ => self.tol,
        }
    }

    /// Seeds of the two MDPs of trial `t`.
    pub fn seeds(&self, trial: usize) -> (u64, u64) {
        let s1 = self.base_seed.wrapping_add(trial as u64);
        (s1, s1.wrapping_add(self.pair_offset))
    }

    fn pair(&self, gamma: f64, trial: usize) -> Result<(u64, TabularMdp, TabularMdp)> {
        let spec = GarnetSpec::new(self.n_states, self.n_actions, self.branching, gamma);
        let (s1, s2) = self.seeds(trial);
        Ok((s1, spec.generate(s1)?, spec.generate(s2)?))
    }

    fn rows(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.gammas
            .iter()
            .flat_map(move |&g| (0..self.trials).map(move |t| (g, t)))
    }
}

fn ensure(holds: bool, theorem: &'static str, seed: u64, detail: impl FnOnce() -> String) -> Result<()> {
    if holds {
        Ok(())
    } else {
        Err(AppError::Violation {
            theorem,
            seed,
            detail: detail(),
        })
    }
}

/// Transfers the source's greedy-optimal policy through the closest-state map
/// and compares its regret in the target with the metric bound.
pub fn run_transfer_experiment(cfg: &ExperimentConfig) -> Result<Vec<BoundReport>> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(cfg.gammas.len() * cfg.trials);
    for (gamma, trial) in cfg.rows() {
        let tol = cfg.tol_for(gamma);
        let (seed, m1, m2) = cfg.pair(gamma, trial)?;
        let d = gbsm(&m1, &m2, tol)?;
        let f = optimal_state_mapping(&d);
        let source = greedy_policy(&m1, &optimal_values(&m1, cfg.value_tol)?)?;
        // Measured regrets carry up to 2 value_tol of evaluation error.
        let source_regret = ground_truth_regret(&m1, &source, cfg.value_tol)? + 2.0 * cfg.value_tol;
        let moved = transfer_policy(&source, &f, m2.n_states())?;
        let truth = ground_truth_regret(&m2, &moved, cfg.value_tol)?;
        let bound = transfer_regret_bound(&d, &f, source_regret, gamma)?;
        ensure(
            truth <= bound + 2.0 * cfg.value_tol,
            "transfer regret bound",
            seed,
            || format!("gamma {gamma}: regret {truth} exceeds bound {bound}"),
        )?;

        let mut r = BoundReport::new("transfer", gamma, trial, seed, tol, truth);
        r.set_bound("gbsm", bound)?;
        if m1.n_states() == m2.n_states() {
            let tv = identical_space_transfer_bound(&m1, &m2, source_regret)?;
            ensure(
                truth <= tv + 2.0 * cfg.value_tol,
                "total-variation transfer bound",
                seed,
                || format!("gamma {gamma}: regret {truth} exceeds bound {tv}"),
            )?;
            r.set_bound("gbsm_tv", tv)?;
        }
        r.set_meta("iterations", d.iterations_run().to_string());
        r.set_meta("source_regret", fmt17(source_regret));
        out.push(r);
    }
    Ok(out)
}

/// Aggregates each MDP onto a fraction of its states and compares the change in
/// the cross-MDP metric with the aggregation bounds.
pub fn run_aggregation_experiment(cfg: &ExperimentConfig) -> Result<Vec<BoundReport>> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(cfg.gammas.len() * cfg.trials);
    for (gamma, trial) in cfg.rows() {
        let tol = cfg.tol_for(gamma);
        let (seed, m1, m2) = cfg.pair(gamma, trial)?;
        let (s1, s2) = cfg.seeds(trial);
        let n = cfg.n_states;
        let a1 = make_aggregation(n, cfg.agg_fraction, cfg.agg_strategy, s1 ^ AGG_SALT)?;
        let a2 = make_aggregation(n, cfg.agg_fraction, cfg.agg_strategy, s2 ^ AGG_SALT)?;
        let (g1, g2) = (aggregate_mdp(&m1, &a1)?, aggregate_mdp(&m2, &a2)?);
        let sig1 = sigma_pair(&m1, &g1, &a1, tol)?;
        let sig2 = sigma_pair(&m2, &g2, &a2, tol)?;
        let d = gbsm(&m1, &m2, tol)?;
        let dg = gbsm(&g1, &g2, tol)?;
        let truth = metric_approximation_error(&d, &dg)?;
        let bound = gbsm_aggregation_bound(&sig1, &sig2);
        let base = bsm_aggregation_bounds(sig1.sigma_tilde_upper(), sig2.sigma_tilde_upper(), gamma)?;

        let gap = d.a_priori_gap().max(dg.a_priori_gap());
        ensure(truth <= bound + gap, "aggregation bound", seed, || {
            format!("gamma {gamma}: error {truth} exceeds bound {bound}")
        })?;
        ensure(
            bound <= base.zhang + sig1.sigma_gap + sig2.sigma_gap,
            "aggregation ordering",
            seed,
            || {
                format!(
                    "gamma {gamma}: bound {bound} exceeds single-metric baseline {}",
                    base.zhang
                )
            },
        )?;
        ensure(base.zhang <= base.ferns, "aggregation ordering", seed, || {
            format!("gamma {gamma}: baselines out of order")
        })?;
        for (i, s) in [&sig1, &sig2].into_iter().enumerate() {
            ensure(
                s.sigma <= s.sigma_tilde / (1.0 - gamma) + 2.0 * tol,
                "aggregation self-distance relation",
                seed,
                || {
                    format!(
                        "gamma {gamma}, MDP {}: sigma {} vs sigma_tilde {}",
                        i + 1,
                        s.sigma,
                        s.sigma_tilde
                    )
                },
            )?;
        }

        let mut r = BoundReport::new("aggregation", gamma, trial, seed, tol, truth);
        r.set_bound("gbsm", bound)?;
        r.set_bound("zhang", base.zhang)?;
        r.set_bound("ferns", base.ferns)?;
        r.set_bound("gbsm_single", gbsm_aggregation_bound(&sig1, &sig1))?;
        r.set_meta("sigma_1", fmt17(sig1.sigma));
        r.set_meta("sigma_2", fmt17(sig2.sigma));
        r.set_meta("sigma_tilde_1", fmt17(sig1.sigma_tilde));
        r.set_meta("sigma_tilde_2", fmt17(sig2.sigma_tilde));
        r.set_meta("ferns_sigma", "max_sigma_tilde");
        out.push(r);
    }
    Ok(out)
}

/// Noise level of trial `t`: the configured one, or a seeded uniform draw.
pub fn noise_std_for(cfg: &ExperimentConfig, trial: usize) -> f64 {
    cfg.noise_std.unwrap_or_else(|| {
        let (s1, _) = cfg.seeds(trial);
        let mut rng = ChaCha8Rng::seed_from_u64(s1 ^ NOISE_STD_SALT);
        rng.random_range(NOISE_STD_RANGE.0..=NOISE_STD_RANGE.1)
    })
}

/// Replaces both MDPs by noisy or sampled estimates and compares the change in
/// the cross-MDP metric with the estimation bounds.
pub fn run_estimation_experiment(cfg: &ExperimentConfig) -> Result<Vec<BoundReport>> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(cfg.gammas.len() * cfg.trials);
    for (gamma, trial) in cfg.rows() {
        let tol = cfg.tol_for(gamma);
        let (seed, m1, m2) = cfg.pair(gamma, trial)?;
        let (s1, s2) = cfg.seeds(trial);
        let std = noise_std_for(cfg, trial);
        let (h1, h2) = match cfg.mode {
            EstimationMode::Noise => (
                gaussian_perturb_mdp(&m1, std, s1 ^ NOISE_SALT)?,
                gaussian_perturb_mdp(&m2, std, s2 ^ NOISE_SALT)?,
            ),
            EstimationMode::Sample => (
                empirical_mdp(&m1, cfg.samples, s1 ^ SAMPLE_SALT)?,
                empirical_mdp(&m2, cfg.samples, s2 ^ SAMPLE_SALT)?,
            ),
        };
        let d = gbsm(&m1, &m2, tol)?;
        let dh = gbsm(&h1, &h2, tol)?;
        let truth = metric_approximation_error(&d, &dh)?;
        let bound = gbsm_estimation_bound(&m1, &h1, &m2, &h2, tol)?;
        let baseline = bsm_estimation_bound(&m1, &h1, tol)? + bsm_estimation_bound(&m2, &h2, tol)?;

        let gap = d.a_priori_gap().max(dh.a_priori_gap());
        ensure(truth <= bound + gap, "estimation bound", seed, || {
            format!("gamma {gamma}: error {truth} exceeds bound {bound}")
        })?;
        ensure(bound <= baseline + 2.0 * tol, "estimation ordering", seed, || {
            format!("gamma {gamma}: bound {bound} exceeds single-metric baseline {baseline}")
        })?;

        let mut r = BoundReport::new("estimation", gamma, trial, seed, tol, truth);
        r.set_bound("gbsm", bound)?;
        r.set_bound("bsm", baseline)?;
        match cfg.mode {
            EstimationMode::Noise => {
                r.set_meta("mode", "noise");
                r.set_meta("noise_std", fmt17(std));
            }
            EstimationMode::Sample => {
                r.set_meta("mode", "sample");
                r.set_meta("samples", cfg.samples.to_string());
            }
        }
        out.push(r);
    }
    Ok(out)
}

/// Monte-Carlo check of the sample-complexity formula on one small MDP.
#[derive(Debug, Clone, PartialEq)]
pub struct HoeffdingConfig {
    pub n_states: usize,
    pub n_actions: usize,
    pub branching: f64,
    pub gamma: f64,
    pub eps: f64,
    pub alpha: f64,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for HoeffdingConfig {
    fn default() -> Self {
        Self {
            n_states: 4,
            n_actions: 2,
            branching: 0.5,
            gamma: 0.3,
            eps: 0.5,
            alpha: 0.1,
            repeats: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoeffdingOutcome {
    /// Samples per state-action pair.
    pub k: u64,
    pub rbar: f64,
    /// Per-entry deviation the formula controls: `eps (1-gamma)^2 / (gamma rbar n)`.
    pub entry_threshold: f64,
    /// Repeats where the designated entry deviated by at least the threshold.
    pub entry_exceed: usize,
    /// Repeats where the total-variation error estimate exceeded `eps`.
    pub tv_exceed: usize,
    pub repeats: usize,
}

impl HoeffdingOutcome {
    pub fn entry_rate(&self) -> f64 {
        self.entry_exceed as f64 / self.repeats as f64
    }

    pub fn tv_rate(&self) -> f64 {
        self.tv_exceed as f64 / self.repeats as f64
    }
}

/// Draws `repeats` empirical models with `K = sample_complexity(...)` samples
/// and counts how often the estimation error escapes the formula's guarantee.
///
/// The designated entry is the first successor of state 0 under action 0.
pub fn hoeffding_check(cfg: &HoeffdingConfig) -> Result<HoeffdingOutcome> {
    if cfg.repeats == 0 {
        return Err(AppError::Config("repeats must be positive".into()));
    }
    let m = GarnetSpec::new(cfg.n_states, cfg.n_actions, cfg.branching, cfg.gamma).generate(cfg.seed)?;
    let rbar = reward_span(&m, &m)?;
    let n = cfg.n_states as f64;
    let k = sample_complexity(cfg.eps, cfg.alpha, cfg.gamma, rbar, cfg.n_states)?;
    if k == 0 {
        return Err(AppError::Config(
            "the formula asks for no samples; nothing to check".into(),
        ));
    }
    let k_usize = usize::try_from(k).map_err(|_| AppError::Config(format!("sample count {k} is too large")))?;
    let gamma = cfg.gamma;
    let entry_threshold = cfg.eps * (1.0 - gamma).powi(2) / (gamma * rbar * n);
    let row = m.transition_row(0, 0);
    let j = row.iter().position(|&p| p > 0.0).unwrap_or(0);
    let (mut entry_exceed, mut tv_exceed) = (0, 0);
    for rep in 0..cfg.repeats {
        let seed = cfg.seed.wrapping_add(PAIR_SEED_OFFSET).wrapping_add(rep as u64) ^ SAMPLE_SALT;
        let h = empirical_mdp(&m, k_usize, seed)?;
        if (h.transition_row(0, 0)[j] - row[j]).abs() >= entry_threshold {
            entry_exceed += 1;
        }
        let mut worst_tv = 0.0f64;
        for s in 0..cfg.n_states {
            for a in 0..cfg.n_actions {
                let tv: f64 = 0.5
                    * m.transition_row(s, a)
                        .iter()
                        .zip(h.transition_row(s, a))
                        .map(|(p, q)| (p - q).abs())
                        .sum::<f64>();
                worst_tv = worst_tv.max(tv);
            }
        }
        if gamma * rbar / (1.0 - gamma).powi(2) * worst_tv > cfg.eps {
            tv_exceed += 1;
        }
    }
    Ok(HoeffdingOutcome {
        k,
        rbar,
        entry_threshold,
        entry_exceed,
        tv_exceed,
        repeats: cfg.repeats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            gammas: vec![0.5],
            trials: 2,
            n_states: 6,
            n_actions: 2,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn default_is_the_reference_grid() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.gammas.len(), 9);
        assert_eq!((cfg.trials, cfg.n_states, cfg.n_actions), (100, 20, 5));
        assert_eq!(cfg.tol_for(0.9), 1e-4);
        assert_eq!(cfg.tol_for(0.5), 1e-6);
        assert_eq!(cfg.seeds(3), (3, 3 + (1 << 32)));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = small();
        cfg.gammas = vec![1.0];
        assert!(matches!(run_transfer_experiment(&cfg), Err(AppError::Config(_))));
        let mut cfg = small();
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn identical_pair_has_no_regret() {
        let cfg = ExperimentConfig {
            pair_offset: 0,
            trials: 1,
            ..small()
        };
        let rows = run_transfer_experiment(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].ground_truth <= 2.0 * cfg.tol);
        assert!(rows[0].bound("gbsm").unwrap() <= 2.0 / 0.5 * cfg.tol + 1e-8);
    }

    #[test]
    fn noise_levels_stay_in_range() {
        let cfg = small();
        for t in 0..50 {
            let s = noise_std_for(&cfg, t);
            assert!((0.1..=0.3).contains(&s));
        }
    }
}
