use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{CouplingPlan, TransportSettings};
use crate::{Error, Result};

/// Three-way coupling `lambda[i][k][j]` over supports of sizes `n1 x n3 x n2`.
#[derive(Debug, Clone, PartialEq)]
pub struct GluedCoupling {
    n1: usize,
    n3: usize,
    n2: usize,
    data: Vec<f64>,
}

impl GluedCoupling {
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n1, self.n3, self.n2)
    }

    pub fn get(&self, i: usize, k: usize, j: usize) -> f64 {
        self.data[(i * self.n3 + k) * self.n2 + j]
    }

    /// `sum_j lambda[i][k][j]`, which reproduces the first input plan.
    pub fn outer_middle_marginal(&self) -> Vec<f64> {
        self.data.chunks_exact(self.n2).map(|r| r.iter().sum()).collect()
    }

    /// `sum_i lambda[i][k][j]`, which reproduces the second input plan.
    pub fn middle_inner_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n3 * self.n2];
        for i in 0..self.n1 {
            let block = &self.data[i * self.n3 * self.n2..(i + 1) * self.n3 * self.n2];
            out.iter_mut().zip(block).for_each(|(o, x)| *o += x);
        }
        out
    }

    /// `sum_k lambda[i][k][j]`: a feasible coupling of the outer marginals.
    pub fn outer_plan(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n1 * self.n2];
        for i in 0..self.n1 {
            for k in 0..self.n3 {
                for j in 0..self.n2 {
                    out[i * self.n2 + j] += self.get(i, k, j);
                }
            }
        }
        out
    }
}

/// Glues a coupling of `(P1, P3)` with a coupling of `(P3, P2)` along `P3`:
/// `lambda[i][k][j] = lambda13[i][k] * lambda32[k][j] / P3[k]` (zero where `P3[k] = 0`).
pub fn glue_couplings(lambda13: &CouplingPlan, lambda32: &CouplingPlan) -> Result<GluedCoupling> {
    let middle = lambda13.col_marginal();
    let other = lambda32.row_marginal();
    if middle.len() != other.len() {
        return Err(Error::parameter(format!(
            "middle supports differ in size ({} vs {})",
            middle.len(),
            other.len()
        )));
    }
    let tol = TransportSettings::default().feasibility;
    if let Some(k) = (0..middle.len()).find(|&k| (middle[k] - other[k]).abs() > tol) {
        return Err(Error::parameter(format!(
            "middle marginals disagree at point {k}: {} vs {}",
            middle[k], other[k]
        )));
    }
    let (n1, n3, n2) = (lambda13.rows(), middle.len(), lambda32.cols());
    let mut data = vec![0.0; n1 * n3 * n2];
    for k in (0..n3).filter(|&k| middle[k] > 0.0) {
        for i in 0..n1 {
            let w = lambda13.get(i, k) / middle[k];
            if w == 0.0 {
                continue;
            }
            for j in 0..n2 {
                data[(i * n3 + k) * n2 + j] = w * lambda32.get(k, j);
            }
        }
    }
    Ok(GluedCoupling { n1, n3, n2, data })
}
