//! Sweep machinery shared by every metric variant.
//!
//! One sweep maps the previous iterate `d_{n-1}` to `d_n` cell by cell. Each
//! cell needs one Wasserstein distance per action (or per action pair for the
//! lax metric), all against the same cost matrix `d_{n-1}`. Transition rows are
//! stored sparsely, and every (cell, action) keeps its optimal transport basis
//! so the next sweep warm-starts from it: the marginals never change between
//! sweeps, only the costs do.

use alloc::vec;
use alloc::vec::Vec;

use crate::mdp::TabularMdp;
use crate::transport::{Basis, TransportSimplex};
use crate::Result;

/// How per-action distances are folded into one cell value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Combine {
    /// `max_a delta((s, a), (s', a))`; both MDPs share the action set.
    Matched,
    /// Hausdorff distance between the action sets under `delta`.
    Hausdorff,
}

struct SparseRows {
    offsets: Vec<usize>,
    index: Vec<usize>,
    mass: Vec<f64>,
}

impl SparseRows {
    fn new(mdp: &TabularMdp) -> Self {
        let mut offsets = vec![0];
        let mut index = Vec::new();
        let mut mass = Vec::new();
        for s in 0..mdp.n_states() {
            for a in 0..mdp.n_actions() {
                for (k, &p) in mdp.transition_row(s, a).iter().enumerate() {
                    if p > 0.0 {
                        index.push(k);
                        mass.push(p);
                    }
                }
                offsets.push(index.len());
            }
        }
        Self { offsets, index, mass }
    }

    fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let range = self.offsets[r]..self.offsets[r + 1];
        (&self.index[range.clone()], &self.mass[range])
    }
}

pub(crate) struct Sweeper<'a> {
    m1: &'a TabularMdp,
    m2: &'a TabularMdp,
    rows1: SparseRows,
    rows2: SparseRows,
    combine: Combine,
    symmetric: bool,
    bases: Vec<Basis>,
    solver: TransportSimplex,
    cost: Vec<f64>,
    delta: Vec<f64>,
    current: Vec<f64>,
    next: Vec<f64>,
    sweeps: usize,
}

impl<'a> Sweeper<'a> {
    pub(crate) fn new(m1: &'a TabularMdp, m2: &'a TabularMdp, combine: Combine) -> Self {
        let (n1, n2) = (m1.n_states(), m2.n_states());
        let pairs_per_cell = match combine {
            Combine::Matched => m1.n_actions(),
            Combine::Hausdorff => m1.n_actions() * m2.n_actions(),
        };
        // Identical inputs give a symmetric iterate at every step, so only the
        // upper triangle is evaluated.
        let symmetric = core::ptr::eq(m1, m2) || m1 == m2;
        Self {
            m1,
            m2,
            rows1: SparseRows::new(m1),
            rows2: SparseRows::new(m2),
            combine,
            symmetric,
            bases: (0..n1 * n2 * pairs_per_cell).map(|_| Basis::new()).collect(),
            solver: TransportSimplex::new(),
            cost: Vec::new(),
            delta: vec![0.0; pairs_per_cell],
            current: vec![0.0; n1 * n2],
            next: vec![0.0; n1 * n2],
            sweeps: 0,
        }
    }

    pub(crate) fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub(crate) fn current(&self) -> &[f64] {
        &self.current
    }

    pub(crate) fn into_current(self) -> Vec<f64> {
        self.current
    }

    /// Advances the iterate by one application of the metric operator.
    pub(crate) fn sweep(&mut self) -> Result<()> {
        let (n1, n2) = (self.m1.n_states(), self.m2.n_states());
        let transport = self.sweeps > 0 && self.m1.gamma() > 0.0;
        for s in 0..n1 {
            let start = if self.symmetric { s } else { 0 };
            for t in start..n2 {
                let cell = s * n2 + t;
                let value = self.cell_value(s, t, cell, transport)?;
                // The operator is monotone and d_0 = 0, so iterates never
                // decrease; clamping only removes rounding noise.
                let value = value.max(self.current[cell]);
                self.next[cell] = value;
                if self.symmetric {
                    self.next[t * n2 + s] = value;
                }
            }
        }
        core::mem::swap(&mut self.current, &mut self.next);
        self.sweeps += 1;
        Ok(())
    }

    fn cell_value(&mut self, s: usize, t: usize, cell: usize, transport: bool) -> Result<f64> {
        let gamma = self.m1.gamma();
        let (k1, k2) = (self.m1.n_actions(), self.m2.n_actions());
        match self.combine {
            Combine::Matched => {
                let mut best = 0.0f64;
                for a in 0..k1 {
                    let r = (self.m1.reward(s, a) - self.m2.reward(t, a)).abs();
                    let w = if transport {
                        self.w1(s * k1 + a, t * k2 + a, cell * k1 + a)?
                    } else {
                        0.0
                    };
                    best = best.max(r + gamma * w);
                }
                Ok(best)
            }
            Combine::Hausdorff => {
                for a in 0..k1 {
                    for b in 0..k2 {
                        let r = (self.m1.reward(s, a) - self.m2.reward(t, b)).abs();
                        let w = if transport {
                            self.w1(s * k1 + a, t * k2 + b, (cell * k1 + a) * k2 + b)?
                        } else {
                            0.0
                        };
                        self.delta[a * k2 + b] = r + gamma * w;
                    }
                }
                Ok(hausdorff(&self.delta, k1, k2))
            }
        }
    }

    /// `W1(P1(.|row1), P2(.|row2); current)` using the stored basis of `slot`.
    fn w1(&mut self, row1: usize, row2: usize, slot: usize) -> Result<f64> {
        let n2 = self.m2.n_states();
        let (idx1, p) = self.rows1.row(row1);
        let (idx2, q) = self.rows2.row(row2);
        if idx1.len() == 1 && idx2.len() == 1 {
            return Ok(self.current[idx1[0] * n2 + idx2[0]]);
        }
        self.cost.clear();
        for &i in idx1 {
            let row = &self.current[i * n2..(i + 1) * n2];
            self.cost.extend(idx2.iter().map(|&j| row[j]));
        }
        self.solver.solve(p, q, &self.cost, &mut self.bases[slot])
    }
}

/// `max(max_a min_b delta[a][b], max_b min_a delta[a][b])` for a row-major `k1 x k2` table.
pub(crate) fn hausdorff(delta: &[f64], k1: usize, k2: usize) -> f64 {
    let mut forward = 0.0f64;
    for a in 0..k1 {
        let row_min = delta[a * k2..(a + 1) * k2]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        forward = forward.max(row_min);
    }
    let mut backward = 0.0f64;
    for b in 0..k2 {
        let col_min = (0..k1).map(|a| delta[a * k2 + b]).fold(f64::INFINITY, f64::min);
        backward = backward.max(col_min);
    }
    forward.max(backward)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hausdorff_of_single_pair_is_the_entry() {
        assert_eq!(hausdorff(&[0.7], 1, 1), 0.7);
    }

    #[test]
    fn hausdorff_takes_worst_best_match() {
        // rows: a0 -> min 1, a1 -> min 2; cols: b0 -> min 1, b1 -> min 3, b2 -> min 2
        let delta = [1.0, 3.0, 5.0, 4.0, 6.0, 2.0];
        assert_eq!(hausdorff(&delta, 2, 3), 3.0);
    }
}
