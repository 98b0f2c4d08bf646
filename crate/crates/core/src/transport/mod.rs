//! Exact optimal transport between finite distributions.
//!
//! [`wasserstein`] solves the transportation LP with a network simplex and
//! returns the primal plan; [`dual_certificate`] produces Kantorovich
//! potentials that prove a plan optimal. [`glue_couplings`] composes two
//! couplings through a shared middle marginal and [`brute_force_wasserstein`]
//! is an enumeration oracle for small instances.

mod gluing;
mod oracle;
mod simplex;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use crate::{Error, Result};

pub use gluing::{glue_couplings, GluedCoupling};
pub use oracle::{brute_force_wasserstein, ORACLE_MAX_SUPPORT};
pub use simplex::{Basis, TransportSimplex};

/// Tolerances shared by every transport routine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportSettings {
    /// Allowed deviation of plan marginals and dual constraints.
    pub feasibility: f64,
    /// Allowed gap between primal cost and dual objective.
    pub duality_gap: f64,
}

impl Default for TransportSettings {
    fn default() -> Self {
        Self {
            feasibility: 1e-9,
            duality_gap: 1e-8,
        }
    }
}

/// A probability vector over a finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(mass: Vec<f64>) -> Result<Self> {
        if mass.is_empty() {
            return Err(Error::parameter("distribution support is empty"));
        }
        if let Some(p) = mass.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::parameter(format!("invalid probability mass {p}")));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > crate::mdp::ROW_SUM_TOL {
            return Err(Error::parameter(format!("distribution sums to {total}, not 1")));
        }
        Ok(Self(mass))
    }

    pub fn point_mass(size: usize, at: usize) -> Result<Self> {
        if at >= size {
            return Err(Error::parameter(format!(
                "point mass index {at} outside support of {size}"
            )));
        }
        let mut mass = vec![0.0; size];
        mass[at] = 1.0;
        Ok(Self(mass))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Distribution {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Nonnegative ground costs between two supports, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    costs: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, costs: Vec<f64>) -> Result<Self> {
        if costs.len() != rows * cols {
            return Err(Error::parameter(format!(
                "cost matrix has {} entries, expected {rows}x{cols}",
                costs.len()
            )));
        }
        if let Some(c) = costs.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::parameter(format!(
                "cost entries must be finite and nonnegative, got {c}"
            )));
        }
        Ok(Self { rows, cols, costs })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::parameter("cost matrix rows have different lengths"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.costs[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.costs
    }

    pub fn max_cost(&self) -> f64 {
        self.costs.iter().fold(0.0, |m, &c| m.max(c))
    }

    fn check_fits(&self, p: &[f64], q: &[f64]) -> Result<()> {
        if self.rows != p.len() || self.cols != q.len() {
            return Err(Error::parameter(format!(
                "cost matrix is {}x{} but the supports have sizes {} and {}",
                self.rows,
                self.cols,
                p.len(),
                q.len()
            )));
        }
        Ok(())
    }
}

/// A transport plan `lambda` with its prescribed marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingPlan {
    rows: usize,
    cols: usize,
    plan: Vec<f64>,
    row_marginal: Distribution,
    col_marginal: Distribution,
}

impl CouplingPlan {
    /// Validates nonnegativity and both marginals at the default feasibility tolerance.
    pub fn new(plan: Vec<f64>, row_marginal: Distribution, col_marginal: Distribution) -> Result<Self> {
        Self::with_tolerance(
            plan,
            row_marginal,
            col_marginal,
            TransportSettings::default().feasibility,
        )
    }

    pub fn with_tolerance(
        plan: Vec<f64>,
        row_marginal: Distribution,
        col_marginal: Distribution,
        tol: f64,
    ) -> Result<Self> {
        let (rows, cols) = (row_marginal.len(), col_marginal.len());
        if plan.len() != rows * cols {
            return Err(Error::parameter(format!(
                "plan has {} entries, expected {rows}x{cols}",
                plan.len()
            )));
        }
        if plan.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::invariant("plan entries must be finite and nonnegative"));
        }
        let out = Self {
            rows,
            cols,
            plan,
            row_marginal,
            col_marginal,
        };
        let worst = out.marginal_error();
        if worst > tol {
            return Err(Error::invariant(format!(
                "plan marginals deviate by {worst:e}, more than {tol:e}"
            )));
        }
        Ok(out)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.plan[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.plan
    }

    pub fn row_marginal(&self) -> &Distribution {
        &self.row_marginal
    }

    pub fn col_marginal(&self) -> &Distribution {
        &self.col_marginal
    }

    /// `sum_ij lambda_ij c_ij`.
    pub fn cost(&self, cost: &CostMatrix) -> f64 {
        self.plan.iter().zip(&cost.costs).map(|(x, c)| x * c).sum()
    }

    /// Largest absolute deviation of a row or column sum from its marginal.
    pub fn marginal_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, row) in self.plan.chunks_exact(self.cols).enumerate() {
            worst = worst.max((row.iter().sum::<f64>() - self.row_marginal[i]).abs());
        }
        for j in 0..self.cols {
            let col: f64 = (0..self.rows).map(|i| self.plan[i * self.cols + j]).sum();
            worst = worst.max((col - self.col_marginal[j]).abs());
        }
        worst
    }
}

/// Kantorovich potentials: `mu_i - nu_j <= c_ij`, objective `sum mu p - sum nu q`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate {
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
}

impl DualCertificate {
    pub fn objective(&self, p: &[f64], q: &[f64]) -> f64 {
        let a: f64 = self.mu.iter().zip(p).map(|(m, x)| m * x).sum();
        let b: f64 = self.nu.iter().zip(q).map(|(n, y)| n * y).sum();
        a - b
    }

    /// Largest `mu_i - nu_j - c_ij` (nonpositive for a feasible certificate).
    pub fn max_violation(&self, cost: &CostMatrix) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for (i, &mu) in self.mu.iter().enumerate() {
            for (j, &nu) in self.nu.iter().enumerate() {
                worst = worst.max(mu - nu - cost.get(i, j));
            }
        }
        worst
    }
}

/// Half the L1 distance between two probability vectors.
pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::parameter(format!(
            "total variation needs equal supports, got {} and {}",
            p.len(),
            q.len()
        )));
    }
    Ok(tv_unchecked(p, q))
}

pub(crate) fn tv_unchecked(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Full solution of one transport instance.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportSolution {
    pub value: f64,
    pub plan: CouplingPlan,
    pub certificate: DualCertificate,
}

/// Exact 1-Wasserstein distance and an optimal coupling.
pub fn wasserstein(p: &Distribution, q: &Distribution, cost: &CostMatrix) -> Result<(f64, CouplingPlan)> {
    let sol = solve_transport(p, q, cost)?;
    Ok((sol.value, sol.plan))
}

/// `W1(p, q)` for raw probability rows under a row-major cost with `q.len()` columns.
///
/// Inputs are trusted: the caller guarantees stochastic rows and a matching
/// cost table.
pub(crate) fn w1_rows(p: &[f64], q: &[f64], cost: &[f64], solver: &mut TransportSimplex) -> Result<f64> {
    let rows: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
    let cols: Vec<usize> = (0..q.len()).filter(|&j| q[j] > 0.0).collect();
    if rows.len() == 1 && cols.len() == 1 {
        return Ok(cost[rows[0] * q.len() + cols[0]]);
    }
    let supply: Vec<f64> = rows.iter().map(|&i| p[i]).collect();
    let demand: Vec<f64> = cols.iter().map(|&j| q[j]).collect();
    let mut sub = Vec::with_capacity(rows.len() * cols.len());
    for &i in &rows {
        sub.extend(cols.iter().map(|&j| cost[i * q.len() + j]));
    }
    solver.solve(&supply, &demand, &sub, &mut Basis::new())
}

/// Solves the transport LP, returning the plan together with optimal potentials.
///
/// Zero-mass support points stay in the returned plan and certificate so their
/// indices line up with the inputs; the simplex itself only runs on the
/// positive-mass points.
pub fn solve_transport(p: &Distribution, q: &Distribution, cost: &CostMatrix) -> Result<TransportSolution> {
    cost.check_fits(p, q)?;
    let rows: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
    let cols: Vec<usize> = (0..q.len()).filter(|&j| q[j] > 0.0).collect();
    let supply: Vec<f64> = rows.iter().map(|&i| p[i]).collect();
    let demand: Vec<f64> = cols.iter().map(|&j| q[j]).collect();
    let mut sub = Vec::with_capacity(rows.len() * cols.len());
    for &i in &rows {
        sub.extend(cols.iter().map(|&j| cost.get(i, j)));
    }

    let mut solver = TransportSimplex::new();
    let mut basis = Basis::new();
    solver.solve(&supply, &demand, &sub, &mut basis)?;

    let mut plan = vec![0.0; p.len() * q.len()];
    let n = cols.len();
    for (cell, flow) in basis.iter() {
        plan[rows[cell / n] * q.len() + cols[cell % n]] += flow;
    }
    let value = plan.iter().zip(cost.as_slice()).map(|(x, c)| x * c).sum();

    // Kantorovich form: mu = u, nu = -v on the support, then extend to
    // zero-mass points so every constraint holds.
    let mut mu = vec![0.0; p.len()];
    let mut nu = vec![0.0; q.len()];
    let mut has_mu = vec![false; p.len()];
    for (k, &i) in rows.iter().enumerate() {
        mu[i] = solver.row_potentials()[k];
        has_mu[i] = true;
    }
    let mut has_nu = vec![false; q.len()];
    for (k, &j) in cols.iter().enumerate() {
        nu[j] = -solver.col_potentials()[k];
        has_nu[j] = true;
    }
    for j in (0..q.len()).filter(|&j| !has_nu[j]) {
        nu[j] = rows
            .iter()
            .map(|&i| mu[i] - cost.get(i, j))
            .fold(f64::NEG_INFINITY, f64::max);
    }
    for i in (0..p.len()).filter(|&i| !has_mu[i]) {
        mu[i] = (0..q.len())
            .map(|j| cost.get(i, j) + nu[j])
            .fold(f64::INFINITY, f64::min);
    }

    let plan = CouplingPlan::new(plan, p.clone(), q.clone())?;
    Ok(TransportSolution {
        value,
        plan,
        certificate: DualCertificate { mu, nu },
    })
}

/// Dual certificate proving `plan` optimal, at the default tolerances.
pub fn dual_certificate(
    p: &Distribution,
    q: &Distribution,
    cost: &CostMatrix,
    plan: &CouplingPlan,
) -> Result<DualCertificate> {
    dual_certificate_with(p, q, cost, plan, &TransportSettings::default())
}

/// Computes optimal potentials for `(p, q, cost)` and checks that `plan`
/// attains the dual objective within `settings.duality_gap`.
pub fn dual_certificate_with(
    p: &Distribution,
    q: &Distribution,
    cost: &CostMatrix,
    plan: &CouplingPlan,
    settings: &TransportSettings,
) -> Result<DualCertificate> {
    cost.check_fits(p, q)?;
    if plan.rows() != p.len() || plan.cols() != q.len() {
        return Err(Error::parameter("plan shape does not match the supports"));
    }
    let mut worst = 0.0f64;
    for i in 0..p.len() {
        let row: f64 = (0..q.len()).map(|j| plan.get(i, j)).sum();
        worst = worst.max((row - p[i]).abs());
    }
    for j in 0..q.len() {
        let col: f64 = (0..p.len()).map(|i| plan.get(i, j)).sum();
        worst = worst.max((col - q[j]).abs());
    }
    if worst > settings.feasibility {
        return Err(Error::invariant(format!(
            "plan marginals deviate from (p, q) by {worst:e}"
        )));
    }

    let sol = solve_transport(p, q, cost)?;
    let cert = sol.certificate;
    let violation = cert.max_violation(cost);
    if violation > settings.feasibility {
        return Err(Error::Internal(format!(
            "potentials violate a dual constraint by {violation:e}"
        )));
    }
    let dual = cert.objective(p, q);
    let plan_cost = plan.cost(cost);
    if plan_cost - dual > settings.duality_gap {
        return Err(Error::NonOptimalPlan {
            plan_cost,
            optimum: dual,
        });
    }
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(v: &[f64]) -> Distribution {
        Distribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn tv_examples() {
        assert_eq!(total_variation(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
        assert_eq!(total_variation(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert!((total_variation(&[0.7, 0.3], &[0.4, 0.6]).unwrap() - 0.3).abs() < 1e-15);
        assert!(total_variation(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn unique_coupling() {
        let cost = CostMatrix::from_rows(&[vec![0.0, 3.0], vec![5.0, 0.0]]).unwrap();
        let (p, q) = (dist(&[1.0, 0.0]), dist(&[0.0, 1.0]));
        let (value, plan) = wasserstein(&p, &q, &cost).unwrap();
        assert_eq!(value, 3.0);
        assert_eq!(plan.as_slice(), &[0.0, 1.0, 0.0, 0.0]);
        let cert = dual_certificate(&p, &q, &cost, &plan).unwrap();
        assert!((cert.objective(&p, &q) - value).abs() <= 1e-8);
        assert!(cert.max_violation(&cost) <= 1e-9);
    }

    #[test]
    fn identical_marginals_cost_nothing() {
        let cost = CostMatrix::from_rows(&[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]]).unwrap();
        let p = dist(&[0.2, 0.5, 0.3]);
        let (value, plan) = wasserstein(&p, &p, &cost).unwrap();
        assert_eq!(value, 0.0);
        let cert = dual_certificate(&p, &p, &cost, &plan).unwrap();
        assert!(cert.objective(&p, &p).abs() <= 1e-12);
        // The all-zero potentials are also a valid certificate here.
        let zero = DualCertificate {
            mu: vec![0.0; 3],
            nu: vec![0.0; 3],
        };
        assert!(zero.max_violation(&cost) <= 0.0);
    }

    #[test]
    fn two_point_closed_form() {
        let cost = CostMatrix::from_rows(&[vec![0.0, 2.0], vec![10.0, 0.0]]).unwrap();
        let (value, _) = wasserstein(&dist(&[0.7, 0.3]), &dist(&[0.4, 0.6]), &cost).unwrap();
        assert!((value - 0.6).abs() < 1e-15);
    }

    #[test]
    fn non_optimal_plan_is_reported() {
        let cost = CostMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let p = dist(&[0.5, 0.5]);
        let product = CouplingPlan::new(vec![0.25; 4], p.clone(), p.clone()).unwrap();
        let err = dual_certificate(&p, &p, &cost, &product).unwrap_err();
        assert!(matches!(err, Error::NonOptimalPlan { .. }));
    }

    #[test]
    fn dimension_mismatch() {
        let cost = CostMatrix::from_rows(&[vec![0.0, 1.0]]).unwrap();
        assert!(wasserstein(&dist(&[0.5, 0.5]), &dist(&[0.5, 0.5]), &cost).is_err());
    }

    #[test]
    fn zero_mass_points_keep_feasible_potentials() {
        let p = dist(&[0.0, 0.6, 0.4, 0.0]);
        let q = dist(&[0.5, 0.0, 0.5]);
        let costs: Vec<f64> = (0..12).map(|k| ((k * 5) % 7) as f64).collect();
        let cost = CostMatrix::new(4, 3, costs).unwrap();
        let sol = solve_transport(&p, &q, &cost).unwrap();
        assert!(sol.certificate.max_violation(&cost) <= 1e-12);
        assert!((sol.certificate.objective(&p, &q) - sol.value).abs() <= 1e-12);
        assert_eq!(sol.plan.rows(), 4);
        assert!(sol.plan.marginal_error() <= 1e-12);
    }
}
