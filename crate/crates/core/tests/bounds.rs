mod common;

use common::{chain_values, g};
use gbsm_core::approx::{
    aggregate_mdp, empirical_mdp, gaussian_perturb_mdp, make_aggregation, representative_mdp, AggregationMap,
    AssignStrategy,
};
use gbsm_core::bounds::{
    bsm_aggregation_bounds, bsm_estimation_bound, gbsm_aggregation_bound, gbsm_estimation_bound, ground_truth_regret,
    identical_space_transfer_bound, lax_action_mapping, metric_approximation_error, optimal_state_mapping, sigma_pair,
    transfer_regret_bound,
};
use gbsm_core::mdp::{greedy_policy, on_policy_reduce, optimal_values, transfer_policy};
use gbsm_core::metric::{bsm, gbsm, lax_gbsm, tv_upper_metric};
use gbsm_core::transport::{brute_force_wasserstein, total_variation, CostMatrix, Distribution};
use gbsm_core::{Policy, TabularMdp};
use proptest::prelude::*;

fn source_optimal(m: &TabularMdp) -> Policy {
    greedy_policy(m, &optimal_values(m, 1e-10).unwrap()).unwrap()
}

#[test]
fn identity_mapping_for_identical_mdps() {
    let m = g(6, 2, 0.5, 3);
    let d = bsm(&m, 1e-6).unwrap();
    assert_eq!(optimal_state_mapping(&d), (0..6).collect::<Vec<_>>());
    let pi = source_optimal(&m);
    let bound = transfer_regret_bound(&d, &(0..6).collect::<Vec<_>>(), 0.0, 0.5).unwrap();
    assert!(bound <= 2.0 / 0.5 * 1e-6);
    assert!(ground_truth_regret(&m, &pi, 1e-8).unwrap() <= 2e-8);
}

#[test]
fn single_source_state_maps_everything_to_it() {
    let src = g(1, 2, 0.5, 1);
    let d = gbsm(&src, &g(5, 2, 0.5, 2), 1e-6).unwrap();
    assert_eq!(optimal_state_mapping(&d), vec![0; 5]);
}

#[test]
fn mapping_is_the_column_argmin() {
    let d = gbsm(&g(7, 2, 0.7, 11), &g(6, 2, 0.7, 12), 1e-6).unwrap();
    for (t, &s) in optimal_state_mapping(&d).iter().enumerate() {
        for r in 0..7 {
            assert!(d.get(s, t) < d.get(r, t) || (d.get(s, t) == d.get(r, t) && s <= r));
        }
    }
}

#[test]
fn transfer_bound_holds_over_seeded_trials() {
    for trial in 0..100 {
        let (m1, m2) = (g(8, 3, 0.5, 1000 + trial), g(8, 3, 0.5, 5000 + trial));
        let d = gbsm(&m1, &m2, 1e-6).unwrap();
        let f = optimal_state_mapping(&d);
        let moved = transfer_policy(&source_optimal(&m1), &f, 8).unwrap();
        let truth = ground_truth_regret(&m2, &moved, 1e-10).unwrap();
        let bound = transfer_regret_bound(&d, &f, 0.0, 0.5).unwrap();
        assert!(truth <= bound, "trial {trial}: {truth} > {bound}");
        let corollary = identical_space_transfer_bound(&m1, &m2, 0.0).unwrap();
        let identity = transfer_regret_bound(&d, &(0..8).collect::<Vec<_>>(), 0.0, 0.5).unwrap();
        assert!(identity <= corollary + 2.0 / 0.5 * d.a_priori_gap() + 1e-8);
    }
}

#[test]
fn corollary_reduces_to_regret_term() {
    let m = g(5, 2, 0.6, 4);
    let b = identical_space_transfer_bound(&m, &m, 0.1).unwrap();
    assert!((b - 1.6 / 0.4 * 0.1).abs() <= 1e-15);
    assert_eq!(identical_space_transfer_bound(&m, &m, 0.0).unwrap(), 0.0);
}

#[test]
fn regret_matches_linear_solve() {
    let m = g(6, 3, 0.9, 21);
    let pi = Policy::uniform(6, 3);
    let v_star = optimal_values(&m, 1e-12).unwrap();
    let (r, p) = on_policy_reduce(&m, &pi).unwrap();
    let v_pi = chain_values(&r, &p, 0.9);
    let oracle = v_star.iter().zip(&v_pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!((ground_truth_regret(&m, &pi, 1e-10).unwrap() - oracle).abs() <= 1e-6);
}

#[test]
fn regret_zero_when_actions_are_interchangeable() {
    let m = TabularMdp::new(1, 2, 0.5, vec![0.4, 0.4], vec![1.0, 1.0]).unwrap();
    let pi = Policy::new(1, 2, vec![0.3, 0.7]).unwrap();
    assert!(ground_truth_regret(&m, &pi, 1e-10).unwrap() <= 1e-9);
}

#[test]
fn lax_action_map_is_row_argmin() {
    let (m1, m2) = (g(6, 3, 0.6, 31), g(6, 5, 0.6, 32));
    let d = lax_gbsm(&m1, &m2, 1e-7).unwrap();
    let f = optimal_state_mapping(&d);
    let map = lax_action_mapping(&m1, &m2, &f, &d).unwrap();
    let cost = CostMatrix::new(6, 6, d.as_slice().to_vec()).unwrap();
    for t in 0..6 {
        let s = f[t];
        for a in 0..3 {
            let delta: Vec<f64> = (0..5)
                .map(|b| {
                    let p = Distribution::new(m1.transition_row(s, a).to_vec()).unwrap();
                    let q = Distribution::new(m2.transition_row(t, b).to_vec()).unwrap();
                    (m1.reward(s, a) - m2.reward(t, b)).abs() + 0.6 * support_oracle(&p, &q, &cost)
                })
                .collect();
            let best = delta.iter().copied().fold(f64::INFINITY, f64::min);
            let chosen = map[t * 3 + a];
            assert!(delta[chosen] <= best + 1e-9);
            assert!(delta[..chosen]
                .iter()
                .all(|&x| x > best - 1e-9 || x > delta[chosen] - 1e-9));
        }
    }
    let single = g(6, 1, 0.6, 33);
    let d1 = lax_gbsm(&m1, &single, 1e-6).unwrap();
    let map1 = lax_action_mapping(&m1, &single, &optimal_state_mapping(&d1), &d1).unwrap();
    assert!(map1.iter().all(|&b| b == 0));
}

#[test]
fn lax_action_map_is_identity_for_identical_mdps() {
    let m = g(5, 3, 0.5, 41);
    let d = lax_gbsm(&m, &m, 1e-8).unwrap();
    let map = lax_action_mapping(&m, &m, &(0..5).collect::<Vec<_>>(), &d).unwrap();
    for s in 0..5 {
        for a in 0..3 {
            // Diagonal delta is at most 2 tol while distinct actions differ in reward here.
            assert_eq!(map[s * 3 + a], a);
        }
    }
}

fn support_oracle(p: &Distribution, q: &Distribution, cost: &CostMatrix) -> f64 {
    let rows: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
    let cols: Vec<usize> = (0..q.len()).filter(|&j| q[j] > 0.0).collect();
    let sub = rows
        .iter()
        .flat_map(|&i| cols.iter().map(move |&j| cost.get(i, j)))
        .collect();
    brute_force_wasserstein(
        &Distribution::new(rows.iter().map(|&i| p[i]).collect()).unwrap(),
        &Distribution::new(cols.iter().map(|&j| q[j]).collect()).unwrap(),
        &CostMatrix::new(rows.len(), cols.len(), sub).unwrap(),
    )
    .unwrap()
}

#[test]
fn eq_relation_between_sigmas() {
    let m = gbsm_core::mdp::garnet(8, 2, 0.5, 0.0, 1.0, 0.9, 9).unwrap();
    let agg = make_aggregation(8, 0.5, AssignStrategy::Modulo, 0).unwrap();
    let tol = 1e-6;
    let sp = sigma_pair(&m, &aggregate_mdp(&m, &agg).unwrap(), &agg, tol).unwrap();
    assert!(sp.sigma <= sp.sigma_tilde / (1.0 - 0.9) + 2.0 * tol);
    assert!(sp.sigma > 0.0);
}

#[test]
fn identical_states_aggregate_without_error() {
    let rows = vec![vec![0.1, 0.8]; 4];
    let trans = vec![vec![vec![0.4, 0.1, 0.3, 0.2], vec![0.25; 4]]; 4];
    let m = TabularMdp::from_nested(0.8, &rows, &trans).unwrap();
    let agg = make_aggregation(4, 0.5, AssignStrategy::Random, 7).unwrap();
    let sp = sigma_pair(&m, &aggregate_mdp(&m, &agg).unwrap(), &agg, 1e-6).unwrap();
    assert!(sp.sigma <= 1e-6 && sp.sigma_tilde <= 1e-6);
}

#[test]
fn aggregation_orderings_over_trials() {
    let tol = 1e-6;
    for trial in 0..10 {
        let gamma = 0.1 + 0.08 * trial as f64;
        let (m1, m2) = (g(10, 3, gamma, 300 + trial), g(10, 3, gamma, 400 + trial));
        let a1 = make_aggregation(10, 0.5, AssignStrategy::Random, trial).unwrap();
        let a2 = make_aggregation(10, 0.5, AssignStrategy::Random, trial + 99).unwrap();
        let (g1, g2) = (aggregate_mdp(&m1, &a1).unwrap(), aggregate_mdp(&m2, &a2).unwrap());
        let s1 = sigma_pair(&m1, &g1, &a1, tol).unwrap();
        let s2 = sigma_pair(&m2, &g2, &a2, tol).unwrap();
        let d = gbsm(&m1, &m2, tol).unwrap();
        let dg = gbsm(&g1, &g2, tol).unwrap();
        let truth = metric_approximation_error(&d, &dg).unwrap();
        let bound = gbsm_aggregation_bound(&s1, &s2);
        let base = bsm_aggregation_bounds(s1.sigma_tilde_upper(), s2.sigma_tilde_upper(), gamma).unwrap();
        assert!(truth <= bound + d.a_priori_gap().max(dg.a_priori_gap()));
        assert!(bound <= base.zhang + 2.0 * tol);
        assert!(base.zhang <= base.ferns);

        // Single-MDP reduction.
        let single = gbsm_aggregation_bound(&s1, &s1);
        assert!((single - 2.0 * s1.sigma_upper()).abs() <= 1e-12);
    }
}

#[test]
fn intermediate_mdp_matches_aggregate_on_diagonal() {
    let tol = 1e-7;
    for seed in 0..5 {
        let m = g(8, 2, 0.7, 500 + seed);
        let agg = make_aggregation(8, 0.5, AssignStrategy::Random, seed).unwrap();
        let d = gbsm(
            &representative_mdp(&m, &agg).unwrap(),
            &aggregate_mdp(&m, &agg).unwrap(),
            tol,
        )
        .unwrap();
        assert!(d.diagonal().unwrap().iter().all(|&x| x <= tol));
    }
}

#[test]
fn estimation_orderings_with_samples() {
    let tol = 1e-6;
    for trial in 0..10 {
        let (m1, m2) = (g(8, 2, 0.6, 700 + trial), g(8, 2, 0.6, 800 + trial));
        let (h1, h2) = (
            empirical_mdp(&m1, 200, trial).unwrap(),
            empirical_mdp(&m2, 200, trial + 50).unwrap(),
        );
        let d = gbsm(&m1, &m2, tol).unwrap();
        let dh = gbsm(&h1, &h2, tol).unwrap();
        let truth = metric_approximation_error(&d, &dh).unwrap();
        let bound = gbsm_estimation_bound(&m1, &h1, &m2, &h2, tol).unwrap();
        assert!(truth <= bound + tol);
        let base = (bsm_estimation_bound(&m1, &h1, tol).unwrap() + bsm_estimation_bound(&m2, &h2, tol).unwrap()) / 2.0;
        assert!(bound <= base + 4.0 * tol);
    }
}

#[test]
fn estimation_of_identical_and_dirac_models() {
    let tol = 1e-6;
    let m = g(6, 2, 0.8, 3);
    assert!(gbsm_estimation_bound(&m, &m, &m, &m, tol).unwrap() <= 4.0 * tol);
    // Only the certification gap remains, scaled by 2 gamma / (1 - gamma).
    assert!(bsm_estimation_bound(&m, &m, tol).unwrap() <= 2.0 * 0.8 / 0.2 * 2.0 * tol);
    let dirac = TabularMdp::from_nested(
        0.8,
        &[vec![0.0, 1.0], vec![0.5, 0.2]],
        &[
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![vec![1.0, 0.0], vec![1.0, 0.0]],
        ],
    )
    .unwrap();
    let sampled = empirical_mdp(&dirac, 17, 2).unwrap();
    assert!(gbsm_estimation_bound(&dirac, &sampled, &dirac, &sampled, tol).unwrap() <= 2.0 * tol);
    let zero = g(6, 2, 0.0, 3);
    assert_eq!(
        bsm_estimation_bound(&zero, &gaussian_perturb_mdp(&zero, 0.3, 1).unwrap(), tol).unwrap(),
        0.0
    );
}

#[test]
fn baseline_tightness_under_noise() {
    let tol = 1e-6;
    for seed in 0..5 {
        let m = g(20, 5, 0.7, 900 + seed);
        let noisy = gaussian_perturb_mdp(&m, 0.2, seed).unwrap();
        let d = gbsm(&m, &noisy, tol).unwrap();
        let sigma = d.diagonal().unwrap().into_iter().fold(0.0, f64::max);
        assert!(2.0 * sigma <= bsm_estimation_bound(&m, &noisy, tol).unwrap() + 4.0 * tol);

        let mut worst_tv = 0.0f64;
        for s in 0..20 {
            for a in 0..5 {
                worst_tv = worst_tv.max(total_variation(m.transition_row(s, a), noisy.transition_row(s, a)).unwrap());
            }
        }
        assert!(worst_tv > 0.0);
        let tv = tv_upper_metric(&m, &noisy).unwrap();
        assert!(sigma <= tv.iter().copied().fold(0.0, f64::max) / (1.0 - 0.7) + 1e-8);
    }
}

#[test]
fn empirical_rows_concentrate() {
    let m = TabularMdp::new(2, 1, 0.5, vec![0.0, 1.0], vec![0.5, 0.5, 0.5, 0.5]).unwrap();
    let mut failures = 0;
    for seed in 0..100 {
        let e = empirical_mdp(&m, 10_000, seed).unwrap();
        if total_variation(m.transition_row(0, 0), e.transition_row(0, 0)).unwrap() > 0.02 {
            failures += 1;
        }
    }
    assert!(failures <= 1);
}

#[test]
fn approximation_error_examples() {
    let d = gbsm(&g(5, 2, 0.5, 1), &g(4, 2, 0.5, 2), 1e-6).unwrap();
    assert_eq!(metric_approximation_error(&d, &d).unwrap(), 0.0);
    let other = gbsm(&g(5, 2, 0.5, 3), &g(4, 2, 0.5, 4), 1e-6).unwrap();
    let scan = (0..5)
        .flat_map(|s| (0..4).map(move |t| (s, t)))
        .map(|(s, t)| (d.get(s, t) - other.get(s, t)).abs())
        .fold(0.0, f64::max);
    assert_eq!(metric_approximation_error(&d, &other).unwrap(), scan);
    let wrong = gbsm(&g(4, 2, 0.5, 3), &g(4, 2, 0.5, 4), 1e-6).unwrap();
    assert!(metric_approximation_error(&d, &wrong).is_err());
}

#[test]
fn identity_aggregation_map() {
    let agg = AggregationMap::identity(3);
    assert_eq!(agg.representatives(), &[0, 1, 2]);
    assert_eq!(make_aggregation(3, 1.0, AssignStrategy::Modulo, 0).unwrap(), agg);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn constructors_keep_rows_stochastic(seed in 0u64..10_000, std in 0.0f64..0.5, k in 1usize..50, frac in 0.1f64..=1.0) {
        let m = g(7, 2, 0.6, seed);
        let noisy = gaussian_perturb_mdp(&m, std, seed).unwrap();
        let sampled = empirical_mdp(&m, k, seed).unwrap();
        let agg = make_aggregation(7, frac, AssignStrategy::Random, seed).unwrap();
        let merged = aggregate_mdp(&m, &agg).unwrap();
        for mdp in [&noisy, &sampled, &merged] {
            for s in 0..7 {
                for a in 0..2 {
                    prop_assert!((mdp.transition_row(s, a).iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                }
            }
        }
        for s in 0..7 {
            for a in 0..2 {
                for (j, &p) in sampled.transition_row(s, a).iter().enumerate() {
                    prop_assert!(p == 0.0 || m.transition_row(s, a)[j] > 0.0);
                }
            }
        }
        prop_assert_eq!(aggregate_mdp(&merged, &agg).unwrap(), merged.clone());
        prop_assert!(agg.map().iter().all(|&u| agg.get(u) == u));
    }

    #[test]
    fn sigma_relation_holds(seed in 0u64..10_000, gamma in 0.05f64..0.9) {
        let tol = 1e-6;
        let m = g(6, 2, gamma, seed);
        let agg = make_aggregation(6, 0.5, AssignStrategy::Random, seed).unwrap();
        let sp = sigma_pair(&m, &aggregate_mdp(&m, &agg).unwrap(), &agg, tol).unwrap();
        prop_assert!(sp.sigma <= sp.sigma_tilde / (1.0 - gamma) + 2.0 * tol);
    }
}
