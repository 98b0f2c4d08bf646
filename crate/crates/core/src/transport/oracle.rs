//! Enumeration oracle for tiny transport instances.
//!
//! Every basic feasible solution of the transportation polytope is supported on
//! a spanning tree of the bipartite row/column graph. The oracle enumerates all
//! `(m + n - 1)`-subsets of cells, keeps the spanning trees, solves each tree's
//! flows by peeling leaves and returns the cheapest nonnegative one. It shares
//! no code with the simplex solver.

use alloc::vec;
use alloc::vec::Vec;

use super::{CostMatrix, Distribution};
use crate::{Error, Result};

/// Largest support size on either side that the oracle accepts.
pub const ORACLE_MAX_SUPPORT: usize = 4;

pub fn brute_force_wasserstein(p: &Distribution, q: &Distribution, cost: &CostMatrix) -> Result<f64> {
    let (m, n) = (p.len(), q.len());
    if m > ORACLE_MAX_SUPPORT || n > ORACLE_MAX_SUPPORT {
        return Err(Error::OracleScope { rows: m, cols: n });
    }
    if cost.rows() != m || cost.cols() != n {
        return Err(Error::parameter("cost matrix shape does not match the supports"));
    }
    let cells = m * n;
    let size = m + n - 1;
    let mut best = f64::INFINITY;
    let mut chosen: Vec<usize> = (0..size).collect();
    loop {
        if let Some(flows) = tree_flows(&chosen, m, n, p, q) {
            if flows.iter().all(|&x| x >= -1e-12) {
                let c: f64 = chosen.iter().zip(&flows).map(|(&e, x)| x * cost.as_slice()[e]).sum();
                best = best.min(c);
            }
        }
        if !next_combination(&mut chosen, cells) {
            break;
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::Internal("oracle found no feasible basis".into()))
    }
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for t in i + 1..k {
                idx[t] = idx[t - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Flows on the cells if they form a spanning tree of the `m + n` nodes.
fn tree_flows(chosen: &[usize], m: usize, n: usize, p: &[f64], q: &[f64]) -> Option<Vec<f64>> {
    let nodes = m + n;
    let ends = |e: usize| (e / n, m + e % n);

    let mut parent: Vec<usize> = (0..nodes).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &e in chosen {
        let (a, b) = ends(e);
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            return None;
        }
        parent[ra] = rb;
    }

    let mut remaining: Vec<f64> = p.iter().chain(q.iter()).copied().collect();
    let mut degree = vec![0usize; nodes];
    for &e in chosen {
        let (a, b) = ends(e);
        degree[a] += 1;
        degree[b] += 1;
    }
    let mut flows = vec![0.0; chosen.len()];
    let mut done = vec![false; chosen.len()];
    for _ in 0..chosen.len() {
        let (slot, leaf, other) = chosen.iter().enumerate().find_map(|(slot, &e)| {
            if done[slot] {
                return None;
            }
            let (a, b) = ends(e);
            if degree[a] == 1 {
                Some((slot, a, b))
            } else if degree[b] == 1 {
                Some((slot, b, a))
            } else {
                None
            }
        })?;
        let x = remaining[leaf];
        flows[slot] = x;
        done[slot] = true;
        remaining[leaf] = 0.0;
        remaining[other] -= x;
        degree[leaf] -= 1;
        degree[other] -= 1;
    }
    Some(flows)
}
