//! Error and regret bounds derived from the metrics.
//!
//! Metric values are certified underestimates, so every bound that consumes
//! one adds the matrix's a-priori gap. The results are therefore upper bounds
//! on what the exact metrics would give, not just approximations of them.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::approx::{aggregate_mdp, AggregationMap};
use crate::mdp::{check_comparable, optimal_values, policy_values};
use crate::metric::{bsm, gbsm, tv_upper_metric, DistanceMatrix};
use crate::num::{ceil, ln, powi};
use crate::transport::{w1_rows, TransportSimplex};
use crate::{Error, Policy, Result, TabularMdp};

/// Ground truth and named bounds for one trial of a campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub experiment: String,
    pub gamma: f64,
    pub trial: usize,
    pub seed: u64,
    /// Metric tolerance the bounds were computed with.
    pub tol: f64,
    pub ground_truth: f64,
    bounds: Vec<(String, f64)>,
    metadata: Vec<(String, String)>,
}

impl BoundReport {
    pub fn new(
        experiment: impl Into<String>,
        gamma: f64,
        trial: usize,
        seed: u64,
        tol: f64,
        ground_truth: f64,
    ) -> Self {
        Self {
            experiment: experiment.into(),
            gamma,
            trial,
            seed,
            tol,
            ground_truth,
            bounds: Vec::new(),
            metadata: Vec::new(),
        }
    }

    /// Adds or replaces a bound; bounds must be finite and nonnegative.
    pub fn set_bound(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(Error::invariant(format!(
                "bound {name} = {value} is not a nonnegative number"
            )));
        }
        match self.bounds.iter_mut().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = value,
            None => self.bounds.push((name.to_string(), value)),
        }
        Ok(())
    }

    pub fn bound(&self, name: &str) -> Option<f64> {
        self.bounds.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }

    /// Bounds in insertion order.
    pub fn bounds(&self) -> &[(String, f64)] {
        &self.bounds
    }

    pub fn set_meta(&mut self, key: &str, value: impl Into<String>) {
        let value = value.into();
        match self.metadata.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.metadata.push((key.to_string(), value)),
        }
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn metadata(&self) -> &[(String, String)] {
        &self.metadata
    }
}

/// Aggregation errors of one MDP, each with its certification gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaPair {
    /// `max_s d(s, s)` between the MDP and its aggregation.
    pub sigma: f64,
    /// `max_s d~(s, [s])` under the MDP's own bisimulation metric.
    pub sigma_tilde: f64,
    pub sigma_gap: f64,
    pub sigma_tilde_gap: f64,
    pub gamma: f64,
}

impl SigmaPair {
    pub fn sigma_upper(&self) -> f64 {
        self.sigma + self.sigma_gap
    }

    pub fn sigma_tilde_upper(&self) -> f64 {
        self.sigma_tilde + self.sigma_tilde_gap
    }
}

/// Baselines for the aggregation error built on the single-MDP metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregationBaselines {
    pub ferns: f64,
    pub zhang: f64,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::parameter(format!("gamma must lie in [0, 1), got {gamma}")))
    }
}

fn check_nonneg(name: &str, x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::parameter(format!(
            "{name} must be finite and nonnegative, got {x}"
        )))
    }
}

/// For every target state (column), the closest source state (row); ties go low.
pub fn optimal_state_mapping(d: &DistanceMatrix) -> Vec<usize> {
    (0..d.cols())
        .map(|t| {
            let mut best = 0;
            for s in 1..d.rows() {
                if d.get(s, t) < d.get(best, t) {
                    best = s;
                }
            }
            best
        })
        .collect()
}

/// Regret bound for a source policy transferred through `f`:
/// `2/(1-gamma) * (max_t d(f(t), t) + gap) + (1+gamma)/(1-gamma) * source_regret`.
pub fn transfer_regret_bound(d: &DistanceMatrix, f: &[usize], source_regret: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    check_nonneg("source regret", source_regret)?;
    if gamma != d.gamma() {
        return Err(Error::incompatible(format!(
            "metric was computed with gamma {} but the bound uses {gamma}",
            d.gamma()
        )));
    }
    if f.len() != d.cols() {
        return Err(Error::incompatible(format!(
            "state mapping has {} entries for {} target states",
            f.len(),
            d.cols()
        )));
    }
    let mut worst = 0.0f64;
    for (t, &s) in f.iter().enumerate() {
        if s >= d.rows() {
            return Err(Error::parameter(format!(
                "state mapping sends {t} to missing source state {s}"
            )));
        }
        worst = worst.max(d.get(s, t));
    }
    Ok(2.0 / (1.0 - gamma) * (worst + d.a_priori_gap()) + (1.0 + gamma) / (1.0 - gamma) * source_regret)
}

/// Transfer bound on a shared state space with the identity mapping, using the
/// total-variation upper metric instead of the fixed point.
pub fn identical_space_transfer_bound(m1: &TabularMdp, m2: &TabularMdp, source_regret: f64) -> Result<f64> {
    check_nonneg("source regret", source_regret)?;
    let d_tv = tv_upper_metric(m1, m2)?;
    let gamma = m1.gamma();
    let worst = d_tv.iter().copied().fold(0.0, f64::max);
    Ok(2.0 / powi(1.0 - gamma, 2) * worst + (1.0 + gamma) / (1.0 - gamma) * source_regret)
}

/// `max_s |V*(s) - V^pi(s)|` in `m2`.
pub fn ground_truth_regret(m2: &TabularMdp, transferred: &Policy, tol: f64) -> Result<f64> {
    let optimal = optimal_values(m2, tol)?;
    let achieved = policy_values(m2, transferred, tol)?;
    Ok(optimal.sup_distance(&achieved))
}

/// For every target state `t` and source action `a`, the target action closest
/// to `a` under the lax one-step distance from `(f(t), a)`; ties go low.
///
/// Returns a row-major `|S2| x |A1|` table of target actions.
pub fn lax_action_mapping(m1: &TabularMdp, m2: &TabularMdp, f: &[usize], d_lax: &DistanceMatrix) -> Result<Vec<usize>> {
    if d_lax.rows() != m1.n_states() || d_lax.cols() != m2.n_states() {
        return Err(Error::incompatible(format!(
            "metric is {}x{} but the MDPs have {} and {} states",
            d_lax.rows(),
            d_lax.cols(),
            m1.n_states(),
            m2.n_states()
        )));
    }
    if f.len() != m2.n_states() || f.iter().any(|&s| s >= m1.n_states()) {
        return Err(Error::parameter("state mapping does not fit the MDPs"));
    }
    let gamma = m1.gamma();
    let mut solver = TransportSimplex::new();
    let mut out = Vec::with_capacity(m2.n_states() * m1.n_actions());
    for (t, &s) in f.iter().enumerate() {
        for a in 0..m1.n_actions() {
            let mut best = (0, f64::INFINITY);
            for b in 0..m2.n_actions() {
                let w = w1_rows(
                    m1.transition_row(s, a),
                    m2.transition_row(t, b),
                    d_lax.as_slice(),
                    &mut solver,
                )?;
                let delta = (m1.reward(s, a) - m2.reward(t, b)).abs() + gamma * w;
                if delta < best.1 {
                    best = (b, delta);
                }
            }
            out.push(best.0);
        }
    }
    Ok(out)
}

/// Aggregation errors of `m` under `agg`, where `m_agg` must be `aggregate_mdp(m, agg)`.
///
/// The single-MDP metric is computed to `tol * (1 - gamma)` so that
/// `sigma <= sigma_tilde / (1 - gamma) + tol` holds for the reported values.
pub fn sigma_pair(m: &TabularMdp, m_agg: &TabularMdp, agg: &AggregationMap, tol: f64) -> Result<SigmaPair> {
    let expected = aggregate_mdp(m, agg)?;
    let matches = expected.n_states() == m_agg.n_states()
        && expected.n_actions() == m_agg.n_actions()
        && expected.gamma() == m_agg.gamma()
        && expected.rewards() == m_agg.rewards()
        && expected
            .transitions()
            .iter()
            .zip(m_agg.transitions())
            .all(|(x, y)| (x - y).abs() <= 1e-12);
    if !matches {
        return Err(Error::incompatible("aggregated MDP does not match the aggregation map"));
    }
    let d = gbsm(m, m_agg, tol)?;
    let gamma = m.gamma();
    let d_tilde = bsm(m, tol * (1.0 - gamma))?;
    let sigma = d.diagonal()?.into_iter().fold(0.0, f64::max);
    let sigma_tilde = (0..m.n_states())
        .map(|s| d_tilde.get(s, agg.get(s)))
        .fold(0.0, f64::max);
    Ok(SigmaPair {
        sigma,
        sigma_tilde,
        sigma_gap: d.a_priori_gap(),
        sigma_tilde_gap: d_tilde.a_priori_gap(),
        gamma,
    })
}

/// `sigma_1 + sigma_2`, each raised by its certification gap.
pub fn gbsm_aggregation_bound(s1: &SigmaPair, s2: &SigmaPair) -> f64 {
    s1.sigma_upper() + s2.sigma_upper()
}

/// `zhang = 2 max(st1, st2) / (1 - gamma)` and `ferns = 2 max(st1, st2) (2 + gamma) / (1 - gamma)`.
pub fn bsm_aggregation_bounds(sigma_tilde_1: f64, sigma_tilde_2: f64, gamma: f64) -> Result<AggregationBaselines> {
    check_gamma(gamma)?;
    check_nonneg("sigma_tilde_1", sigma_tilde_1)?;
    check_nonneg("sigma_tilde_2", sigma_tilde_2)?;
    let worst = sigma_tilde_1.max(sigma_tilde_2);
    Ok(AggregationBaselines {
        ferns: 2.0 * worst * (2.0 + gamma) / (1.0 - gamma),
        zhang: 2.0 * worst / (1.0 - gamma),
    })
}

fn self_distance(m: &TabularMdp, m_hat: &TabularMdp, tol: f64) -> Result<f64> {
    check_same_states(m, m_hat)?;
    let d = gbsm(m, m_hat, tol)?;
    Ok(d.diagonal()?.into_iter().fold(0.0, f64::max) + d.a_priori_gap())
}

fn check_same_states(m: &TabularMdp, m_hat: &TabularMdp) -> Result<()> {
    check_comparable(m, m_hat)?;
    if m.n_states() != m_hat.n_states() {
        return Err(Error::incompatible(format!(
            "estimate has {} states but the original has {}",
            m_hat.n_states(),
            m.n_states()
        )));
    }
    Ok(())
}

/// `max_s d(s, s)` between each MDP and its estimate, summed, gaps included.
pub fn gbsm_estimation_bound(
    m1: &TabularMdp,
    m1_hat: &TabularMdp,
    m2: &TabularMdp,
    m2_hat: &TabularMdp,
    tol: f64,
) -> Result<f64> {
    Ok(self_distance(m1, m1_hat, tol)? + self_distance(m2, m2_hat, tol)?)
}

/// `2 gamma / (1 - gamma) * max_{s, a} W1(P_hat(.|s,a), P(.|s,a); d~)` with
/// `d~` the bisimulation metric of `m` raised by its gap.
pub fn bsm_estimation_bound(m: &TabularMdp, m_hat: &TabularMdp, tol: f64) -> Result<f64> {
    check_same_states(m, m_hat)?;
    let gamma = m.gamma();
    if gamma == 0.0 {
        return Ok(0.0);
    }
    let d = bsm(m, tol)?;
    let mut solver = TransportSimplex::new();
    let mut worst = 0.0f64;
    for s in 0..m.n_states() {
        for a in 0..m.n_actions() {
            let w = w1_rows(
                m_hat.transition_row(s, a),
                m.transition_row(s, a),
                d.as_slice(),
                &mut solver,
            )?;
            worst = worst.max(w);
        }
    }
    Ok(2.0 * gamma / (1.0 - gamma) * (worst + d.a_priori_gap()))
}

/// Samples per state-action pair so that the estimation error stays below
/// `eps` with probability at least `1 - alpha`:
/// `ceil(-ln(alpha/2) gamma^2 rbar^2 n^2 / (2 eps^2 (1-gamma)^4))`.
///
/// Pass the number of representatives as `n_states` for an aggregated model.
pub fn sample_complexity(eps: f64, alpha: f64, gamma: f64, rbar: f64, n_states: usize) -> Result<u64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::parameter(format!("eps must be positive, got {eps}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::parameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    check_gamma(gamma)?;
    check_nonneg("reward span", rbar)?;
    let n = n_states as f64;
    let k = -ln(alpha / 2.0) * powi(gamma * rbar * n, 2) / (2.0 * eps * eps * powi(1.0 - gamma, 4));
    Ok(ceil(k) as u64)
}

/// `max |dA - dB|` over all entries.
pub fn metric_approximation_error(da: &DistanceMatrix, db: &DistanceMatrix) -> Result<f64> {
    if da.rows() != db.rows() || da.cols() != db.cols() {
        return Err(Error::incompatible(format!(
            "matrices are {}x{} and {}x{}",
            da.rows(),
            da.cols(),
            db.rows(),
            db.cols()
        )));
    }
    Ok(da
        .as_slice()
        .iter()
        .zip(db.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}
