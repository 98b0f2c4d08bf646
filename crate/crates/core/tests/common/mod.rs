#![allow(dead_code)]

use gbsm_core::mdp::garnet;
use gbsm_core::TabularMdp;

pub fn g(n: usize, k: usize, gamma: f64, seed: u64) -> TabularMdp {
    garnet(n, k, 0.5, 0.0, 1.0, gamma, seed).unwrap()
}

/// Dense Gaussian elimination with partial pivoting for `A x = b`.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// `V = (I - gamma P)^-1 R` for a single chain.
pub fn chain_values(rewards: &[f64], transitions: &[f64], gamma: f64) -> Vec<f64> {
    let n = rewards.len();
    let a = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| f64::from(u8::from(i == j)) - gamma * transitions[i * n + j])
                .collect()
        })
        .collect();
    solve_dense(a, rewards.to_vec())
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
