//! Transportation simplex on a dense bipartite instance.
//!
//! The basis is a spanning tree of `m + n - 1` cells over the `m` row nodes and
//! `n` column nodes. Degenerate bases keep their zero-flow cells, so the tree
//! stays spanning and the potentials stay well defined. Pricing uses the most
//! negative reduced cost; after a run of degenerate pivots it switches to
//! Bland's rule until the objective strictly decreases again, which rules out
//! cycling.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

const NONE: usize = usize::MAX;

/// Optimal (or warm-start) basis of one transportation instance.
///
/// An empty basis requests a cold start. After [`TransportSimplex::solve`]
/// returns, the basis holds the optimal tree and its flows and can be handed
/// back for the same marginals with a different cost matrix.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Basis {
    /// Cell ids `i * n + j`.
    pub(crate) cells: Vec<usize>,
    pub(crate) flows: Vec<f64>,
}

impl Basis {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn clear(&mut self) {
        self.cells.clear();
        self.flows.clear();
    }

    /// `(cell id, flow)` pairs of the basic cells.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.cells.iter().copied().zip(self.flows.iter().copied())
    }
}

/// Reusable scratch space for solving many small transportation problems.
#[derive(Debug, Default)]
pub struct TransportSimplex {
    u: Vec<f64>,
    v: Vec<f64>,
    adj_start: Vec<usize>,
    adj_slots: Vec<usize>,
    parent_slot: Vec<usize>,
    parent_node: Vec<usize>,
    depth: Vec<usize>,
    queue: Vec<usize>,
    path_up: Vec<usize>,
    path_down: Vec<usize>,
    row_rem: Vec<f64>,
    col_rem: Vec<f64>,
    row_live: Vec<bool>,
    col_live: Vec<bool>,
}

impl TransportSimplex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Row potentials `u` of the last solve (`u_i + v_j <= c_ij`, tight on the basis).
    pub fn row_potentials(&self) -> &[f64] {
        &self.u
    }

    /// Column potentials `v` of the last solve.
    pub fn col_potentials(&self) -> &[f64] {
        &self.v
    }

    /// Minimizes `sum c_ij x_ij` subject to row sums `supply` and column sums
    /// `demand`. Both marginals must be strictly positive and have equal totals
    /// up to rounding; `cost` is row-major `supply.len() x demand.len()`.
    ///
    /// Returns the optimal cost. `basis` is used as a warm start when it is
    /// non-empty and is overwritten with the optimal basis.
    pub fn solve(&mut self, supply: &[f64], demand: &[f64], cost: &[f64], basis: &mut Basis) -> Result<f64> {
        let (m, n) = (supply.len(), demand.len());
        debug_assert_eq!(cost.len(), m * n);
        if m == 0 || n == 0 {
            return Err(Error::Internal("empty transport instance".into()));
        }
        if basis.is_empty() {
            self.least_cost_start(supply, demand, cost, basis);
        }
        debug_assert_eq!(basis.cells.len(), m + n - 1);

        let scale = cost.iter().fold(1.0f64, |s, c| s.max(c.abs()));
        let threshold = -1e-12 * scale;
        let max_pivots = 100_000 + 10 * m * n;
        let mut degenerate_run = 0usize;
        let mut bland = false;

        for _ in 0..max_pivots {
            self.build_tree(m, n, cost, basis)?;

            let entering = if bland {
                self.first_improving(m, n, cost, threshold)
            } else {
                self.most_improving(m, n, cost, threshold)
            };
            let Some(entering) = entering else {
                return Ok(basis.cells.iter().zip(&basis.flows).map(|(&c, &x)| x * cost[c]).sum());
            };

            let theta = self.pivot(m, n, entering, basis, bland);
            if theta > 0.0 {
                degenerate_run = 0;
                bland = false;
            } else {
                degenerate_run += 1;
                if degenerate_run > 2 * (m + n) {
                    bland = true;
                }
            }
        }
        Err(Error::Internal(format!(
            "transportation simplex did not terminate on a {m}x{n} instance"
        )))
    }

    /// Least-cost rule: repeatedly saturate the cheapest cell among live lines,
    /// retiring exactly one line per step so the chosen cells form a spanning tree.
    fn least_cost_start(&mut self, supply: &[f64], demand: &[f64], cost: &[f64], basis: &mut Basis) {
        let (m, n) = (supply.len(), demand.len());
        self.row_rem.clear();
        self.row_rem.extend_from_slice(supply);
        self.col_rem.clear();
        self.col_rem.extend_from_slice(demand);
        self.row_live.clear();
        self.row_live.resize(m, true);
        self.col_live.clear();
        self.col_live.resize(n, true);
        basis.clear();

        let (mut rows_left, mut cols_left) = (m, n);
        while rows_left + cols_left > 1 {
            let mut best = (NONE, NONE);
            let mut best_cost = f64::INFINITY;
            for i in (0..m).filter(|&i| self.row_live[i]) {
                let row = &cost[i * n..(i + 1) * n];
                for j in (0..n).filter(|&j| self.col_live[j]) {
                    if row[j] < best_cost || best.0 == NONE {
                        best_cost = row[j];
                        best = (i, j);
                    }
                }
            }
            let (i, j) = best;
            let retire_row = if rows_left == 1 && cols_left == 1 {
                basis.cells.push(i * n + j);
                basis.flows.push(self.row_rem[i].max(0.0));
                break;
            } else if rows_left == 1 {
                false
            } else if cols_left == 1 {
                true
            } else {
                self.row_rem[i] <= self.col_rem[j]
            };
            let flow = if retire_row { self.row_rem[i] } else { self.col_rem[j] }.max(0.0);
            basis.cells.push(i * n + j);
            basis.flows.push(flow);
            if retire_row {
                self.row_live[i] = false;
                rows_left -= 1;
                self.col_rem[j] = (self.col_rem[j] - flow).max(0.0);
            } else {
                self.col_live[j] = false;
                cols_left -= 1;
                self.row_rem[i] = (self.row_rem[i] - flow).max(0.0);
            }
        }
    }

    /// Rebuilds tree adjacency, parents and depths, and the potentials with `u_0 = 0`.
    fn build_tree(&mut self, m: usize, n: usize, cost: &[f64], basis: &Basis) -> Result<()> {
        let nodes = m + n;
        self.adj_start.clear();
        self.adj_start.resize(nodes + 1, 0);
        for &c in &basis.cells {
            self.adj_start[c / n + 1] += 1;
            self.adj_start[m + c % n + 1] += 1;
        }
        for k in 0..nodes {
            self.adj_start[k + 1] += self.adj_start[k];
        }
        self.adj_slots.clear();
        self.adj_slots.resize(2 * basis.cells.len(), 0);
        // Reuse `queue` as a fill cursor before it is needed for the BFS.
        self.queue.clear();
        self.queue.extend_from_slice(&self.adj_start[..nodes]);
        for (slot, &c) in basis.cells.iter().enumerate() {
            for node in [c / n, m + c % n] {
                self.adj_slots[self.queue[node]] = slot;
                self.queue[node] += 1;
            }
        }

        self.u.clear();
        self.u.resize(m, 0.0);
        self.v.clear();
        self.v.resize(n, 0.0);
        self.parent_slot.clear();
        self.parent_slot.resize(nodes, NONE);
        self.parent_node.clear();
        self.parent_node.resize(nodes, NONE);
        self.depth.clear();
        self.depth.resize(nodes, NONE);

        self.queue.clear();
        self.queue.push(0);
        self.depth[0] = 0;
        let mut head = 0;
        while head < self.queue.len() {
            let node = self.queue[head];
            head += 1;
            for k in self.adj_start[node]..self.adj_start[node + 1] {
                let slot = self.adj_slots[k];
                let c = basis.cells[slot];
                let (i, j) = (c / n, c % n);
                let other = if node < m { m + j } else { i };
                if self.depth[other] != NONE {
                    continue;
                }
                if node < m {
                    self.v[j] = cost[c] - self.u[i];
                } else {
                    self.u[i] = cost[c] - self.v[j];
                }
                self.depth[other] = self.depth[node] + 1;
                self.parent_node[other] = node;
                self.parent_slot[other] = slot;
                self.queue.push(other);
            }
        }
        if self.queue.len() != nodes {
            return Err(Error::Internal("transport basis is not a spanning tree".into()));
        }
        Ok(())
    }

    fn most_improving(&self, m: usize, n: usize, cost: &[f64], threshold: f64) -> Option<usize> {
        let mut best = None;
        let mut best_r = threshold;
        for i in 0..m {
            let row = &cost[i * n..(i + 1) * n];
            let ui = self.u[i];
            for (j, (&c, &vj)) in row.iter().zip(&self.v).enumerate() {
                let r = c - ui - vj;
                if r < best_r {
                    best_r = r;
                    best = Some(i * n + j);
                }
            }
        }
        best
    }

    fn first_improving(&self, m: usize, n: usize, cost: &[f64], threshold: f64) -> Option<usize> {
        (0..m * n).find(|&c| cost[c] - self.u[c / n] - self.v[c % n] < threshold)
    }

    /// Pushes flow around the cycle closed by `entering` and swaps it into the
    /// basis. Returns the amount of flow moved.
    fn pivot(&mut self, m: usize, n: usize, entering: usize, basis: &mut Basis, bland: bool) -> f64 {
        // Path from column node up to the common ancestor, then down to the row node.
        let mut a = entering / n;
        let mut b = m + entering % n;
        self.path_up.clear();
        self.path_down.clear();
        while a != b {
            if self.depth[b] >= self.depth[a] {
                self.path_up.push(self.parent_slot[b]);
                b = self.parent_node[b];
            } else {
                self.path_down.push(self.parent_slot[a]);
                a = self.parent_node[a];
            }
        }
        let cycle_len = self.path_up.len() + self.path_down.len();
        let slot_at = |k: usize, up: &[usize], down: &[usize]| {
            if k < up.len() {
                up[k]
            } else {
                down[down.len() - 1 - (k - up.len())]
            }
        };

        // Even positions along the path lose flow.
        let mut leaving = NONE;
        let mut theta = f64::INFINITY;
        for k in (0..cycle_len).step_by(2) {
            let slot = slot_at(k, &self.path_up, &self.path_down);
            let x = basis.flows[slot];
            let better = x < theta || (bland && x == theta && basis.cells[slot] < basis.cells[leaving]);
            if better {
                theta = x;
                leaving = slot;
            }
        }
        for k in 0..cycle_len {
            let slot = slot_at(k, &self.path_up, &self.path_down);
            if k % 2 == 0 {
                basis.flows[slot] -= theta;
            } else {
                basis.flows[slot] += theta;
            }
        }
        basis.cells[leaving] = entering;
        basis.flows[leaving] = theta;
        theta
    }
}
