//! Generalized bisimulation metrics and their variants.
//!
//! Every metric here is the least fixed point of a monotone `gamma`-contraction
//! and is computed by iterating from `d_0 = 0`. The number of sweeps comes from
//! the a-priori contraction bound rather than a residual test, so run time is
//! deterministic and the reported values are certified underestimates: the true
//! metric lies in `[d, d + a_priori_gap]` entrywise.

mod engine;

use alloc::format;
use alloc::vec::Vec;

use crate::mdp::{check_comparable, check_same_gamma, on_policy_mdp, reward_span_unchecked};
use crate::num::{geometric_steps, powi};
use crate::transport::tv_unchecked;
use crate::{Error, Policy, Result, TabularMdp};

use engine::{Combine, Sweeper};

/// Tolerance used when the caller does not pick one.
pub const DEFAULT_TOL: f64 = 1e-6;

/// Which operator produced a [`DistanceMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetricKind {
    Bsm,
    Gbsm,
    Lax,
    OnPolicy,
}

impl MetricKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Bsm => "bsm",
            MetricKind::Gbsm => "gbsm",
            MetricKind::Lax => "lax",
            MetricKind::OnPolicy => "on_policy",
        }
    }
}

impl core::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Ordered pair of MDP fingerprints: rows index `from`, columns index `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Direction {
    pub from: u64,
    pub to: u64,
}

impl Direction {
    pub fn new(from: &TabularMdp, to: &TabularMdp) -> Self {
        Self {
            from: mdp_fingerprint(from),
            to: mdp_fingerprint(to),
        }
    }

    pub fn transposed(self) -> Self {
        Self {
            from: self.to,
            to: self.from,
        }
    }
}

/// FNV-1a hash over the shape, discount, rewards and transitions of `mdp`.
pub fn mdp_fingerprint(mdp: &TabularMdp) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    let mut feed = |word: u64| {
        for byte in word.to_le_bytes() {
            h ^= u64::from(byte);
            h = h.wrapping_mul(PRIME);
        }
    };
    feed(mdp.n_states() as u64);
    feed(mdp.n_actions() as u64);
    feed(mdp.gamma().to_bits());
    for &r in mdp.rewards() {
        feed(r.to_bits());
    }
    for &p in mdp.transitions() {
        feed(p.to_bits());
    }
    h
}

/// Sweep count that brings the a-priori gap under `tol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationSchedule {
    pub tol: f64,
    pub n_star: usize,
}

/// Smallest `n` with `gamma^n * rbar / (1 - gamma) <= tol`.
///
/// `rbar == 0` needs no sweep at all and `gamma == 0` is exact after one.
pub fn iteration_count(gamma: f64, rbar: f64, tol: f64) -> Result<IterationSchedule> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::parameter(format!("gamma must lie in [0, 1), got {gamma}")));
    }
    if !(rbar >= 0.0 && rbar.is_finite()) {
        return Err(Error::parameter(format!(
            "reward span must be finite and nonnegative, got {rbar}"
        )));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::parameter(format!("tolerance must be positive, got {tol}")));
    }
    let n_star = if rbar == 0.0 {
        0
    } else if gamma == 0.0 {
        1
    } else {
        geometric_steps(gamma, rbar / (1.0 - gamma), tol)
    };
    Ok(IterationSchedule { tol, n_star })
}

/// `gamma^n * rbar / (1 - gamma)`, the distance from `d_n` to the fixed point at most.
pub fn a_priori_gap(gamma: f64, rbar: f64, n: usize) -> f64 {
    if rbar == 0.0 || (gamma == 0.0 && n > 0) {
        return 0.0;
    }
    powi(gamma, n as u32) * rbar / (1.0 - gamma)
}

/// An `|S1| x |S2|` table of metric values with the data needed to bound its error.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    values: Vec<f64>,
    rows: usize,
    cols: usize,
    direction: Direction,
    iterations_run: usize,
    a_priori_gap: f64,
    kind: MetricKind,
    tol: f64,
    rbar: f64,
    gamma: f64,
}

impl DistanceMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, s1: usize, s2: usize) -> f64 {
        self.values[s1 * self.cols + s2]
    }

    pub fn row(&self, s1: usize) -> &[f64] {
        &self.values[s1 * self.cols..(s1 + 1) * self.cols]
    }

    /// Row-major values.
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn iterations_run(&self) -> usize {
        self.iterations_run
    }

    /// Upper bound on how far any entry sits below the exact metric.
    pub fn a_priori_gap(&self) -> f64 {
        self.a_priori_gap
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    /// Tolerance the iteration count was chosen for.
    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Reward span that scales the a-priori bound.
    pub fn rbar(&self) -> f64 {
        self.rbar
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `rbar / (1 - gamma)`, which no entry of any iterate exceeds.
    pub fn upper_limit(&self) -> f64 {
        self.rbar / (1.0 - self.gamma)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// `d(s, s)` for square matrices.
    pub fn diagonal(&self) -> Result<Vec<f64>> {
        if self.rows != self.cols {
            return Err(Error::incompatible(format!(
                "diagonal needs a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        Ok((0..self.rows).map(|s| self.get(s, s)).collect())
    }

    /// The same metric read in the opposite direction.
    pub fn transposed(&self) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        for j in 0..self.cols {
            values.extend((0..self.rows).map(|i| self.get(i, j)));
        }
        Self {
            values,
            rows: self.cols,
            cols: self.rows,
            direction: self.direction.transposed(),
            ..self.clone()
        }
    }

    /// Iterator over `(s1, s2, distance)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(k, &v)| (k / self.cols, k % self.cols, v))
    }
}

struct Run<'a> {
    m1: &'a TabularMdp,
    m2: &'a TabularMdp,
    direction: Direction,
    kind: MetricKind,
    combine: Combine,
    rbar: f64,
}

impl Run<'_> {
    fn to_tol(&self, tol: f64) -> Result<DistanceMatrix> {
        let schedule = iteration_count(self.m1.gamma(), self.rbar, tol)?;
        let mut sweeper = Sweeper::new(self.m1, self.m2, self.combine);
        for _ in 0..schedule.n_star {
            sweeper.sweep()?;
        }
        Ok(self.wrap(sweeper.into_current(), schedule.n_star, tol))
    }

    fn iterates(&self, n_max: usize) -> Result<Vec<DistanceMatrix>> {
        let mut sweeper = Sweeper::new(self.m1, self.m2, self.combine);
        let mut out = Vec::with_capacity(n_max);
        for _ in 0..n_max {
            sweeper.sweep()?;
            let n = sweeper.sweeps();
            let gap = a_priori_gap(self.m1.gamma(), self.rbar, n);
            out.push(self.wrap(sweeper.current().to_vec(), n, gap));
        }
        Ok(out)
    }

    fn wrap(&self, values: Vec<f64>, n: usize, tol: f64) -> DistanceMatrix {
        DistanceMatrix {
            values,
            rows: self.m1.n_states(),
            cols: self.m2.n_states(),
            direction: self.direction,
            iterations_run: n,
            a_priori_gap: a_priori_gap(self.m1.gamma(), self.rbar, n),
            kind: self.kind,
            tol,
            rbar: self.rbar,
            gamma: self.m1.gamma(),
        }
    }
}

fn matched_run<'a>(m1: &'a TabularMdp, m2: &'a TabularMdp, kind: MetricKind) -> Result<Run<'a>> {
    check_comparable(m1, m2)?;
    Ok(Run {
        m1,
        m2,
        direction: Direction::new(m1, m2),
        kind,
        combine: Combine::Matched,
        rbar: reward_span_unchecked(m1, m2),
    })
}

/// Generalized bisimulation metric between the states of `m1` (rows) and `m2` (columns).
pub fn gbsm(m1: &TabularMdp, m2: &TabularMdp, tol: f64) -> Result<DistanceMatrix> {
    matched_run(m1, m2, MetricKind::Gbsm)?.to_tol(tol)
}

/// Bisimulation metric of a single MDP, computed as `gbsm(m, m)`.
pub fn bsm(m: &TabularMdp, tol: f64) -> Result<DistanceMatrix> {
    matched_run(m, m, MetricKind::Bsm)?.to_tol(tol)
}

/// The iterates `d_1, ..., d_{n_max}`; each carries its own a-priori gap as `tol`.
pub fn gbsm_iterates(m1: &TabularMdp, m2: &TabularMdp, n_max: usize) -> Result<Vec<DistanceMatrix>> {
    matched_run(m1, m2, MetricKind::Gbsm)?.iterates(n_max)
}

/// Lax metric: actions are matched through the Hausdorff distance, so the two
/// action sets may differ in size.
pub fn lax_gbsm(m1: &TabularMdp, m2: &TabularMdp, tol: f64) -> Result<DistanceMatrix> {
    check_same_gamma(m1, m2)?;
    Run {
        m1,
        m2,
        direction: Direction::new(m1, m2),
        kind: MetricKind::Lax,
        combine: Combine::Hausdorff,
        rbar: lax_reward_span(m1, m2),
    }
    .to_tol(tol)
}

/// Metric between the chains induced by running `policy` in each MDP, which
/// must therefore share a state space.
///
/// The reward span used for the stopping rule is taken over the
/// policy-averaged rewards.
pub fn on_policy_gbsm(m1: &TabularMdp, m2: &TabularMdp, policy: &Policy, tol: f64) -> Result<DistanceMatrix> {
    check_comparable(m1, m2)?;
    if m1.n_states() != m2.n_states() {
        return Err(Error::incompatible(format!(
            "one policy needs a shared state space, got {} and {} states",
            m1.n_states(),
            m2.n_states()
        )));
    }
    let c1 = on_policy_mdp(m1, policy)?;
    let c2 = on_policy_mdp(m2, policy)?;
    let mut run = matched_run(&c1, &c2, MetricKind::OnPolicy)?;
    run.direction = Direction::new(m1, m2);
    run.to_tol(tol)
}

/// `max_s d_TV(s, s)`-style upper metric on a shared state space:
/// `max_a { |R1(s,a) - R2(s,a)| + gamma * rbar / (1 - gamma) * TV(P1(.|s,a), P2(.|s,a)) }`.
pub fn tv_upper_metric(m1: &TabularMdp, m2: &TabularMdp) -> Result<Vec<f64>> {
    check_comparable(m1, m2)?;
    if m1.n_states() != m2.n_states() {
        return Err(Error::incompatible(format!(
            "state counts differ ({} vs {})",
            m1.n_states(),
            m2.n_states()
        )));
    }
    let gamma = m1.gamma();
    let scale = gamma * reward_span_unchecked(m1, m2) / (1.0 - gamma);
    Ok((0..m1.n_states())
        .map(|s| {
            (0..m1.n_actions())
                .map(|a| {
                    let r = (m1.reward(s, a) - m2.reward(s, a)).abs();
                    let tv = tv_unchecked(m1.transition_row(s, a), m2.transition_row(s, a));
                    r + scale * tv
                })
                .fold(0.0, f64::max)
        })
        .collect())
}

/// [`tv_upper_metric`] for the policy-averaged chains, with the reward span
/// taken over the averaged rewards.
pub fn on_policy_tv_upper_metric(m1: &TabularMdp, m2: &TabularMdp, policy: &Policy) -> Result<Vec<f64>> {
    check_comparable(m1, m2)?;
    tv_upper_metric(&on_policy_mdp(m1, policy)?, &on_policy_mdp(m2, policy)?)
}

/// `max_{s, s', a, a'} |R1(s, a) - R2(s', a')|`.
pub fn lax_reward_span(m1: &TabularMdp, m2: &TabularMdp) -> f64 {
    let range = |m: &TabularMdp| {
        m.rewards()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
                (lo.min(r), hi.max(r))
            })
    };
    let (lo1, hi1) = range(m1);
    let (lo2, hi2) = range(m2);
    (hi1 - lo2).max(hi2 - lo1).max(0.0)
}
