use gbsm::experiments::{
    hoeffding_check, run_aggregation_experiment, run_estimation_experiment, EstimationMode, ExperimentConfig,
    HoeffdingConfig,
};
use gbsm::AppError;

fn small() -> ExperimentConfig {
    ExperimentConfig {
        gammas: vec![0.4, 0.8],
        trials: 3,
        n_states: 6,
        n_actions: 2,
        ..ExperimentConfig::default()
    }
}

#[test]
fn full_fraction_aggregation_is_exact() {
    let cfg = ExperimentConfig {
        agg_fraction: 1.0,
        ..small()
    };
    for r in run_aggregation_experiment(&cfg).unwrap() {
        assert!(r.ground_truth <= 2.0 * cfg.tol, "{}", r.ground_truth);
        assert!(r.bound("gbsm").unwrap() <= 4.0 * cfg.tol);
    }
}

#[test]
fn zero_noise_leaves_the_metric_unchanged() {
    let cfg = ExperimentConfig {
        noise_std: Some(0.0),
        ..small()
    };
    for r in run_estimation_experiment(&cfg).unwrap() {
        assert!(r.ground_truth <= 2.0 * cfg.tol);
        assert_eq!(r.meta("noise_std"), Some("0"));
    }
}

#[test]
fn sampling_mode_records_the_sample_count() {
    let cfg = ExperimentConfig {
        mode: EstimationMode::Sample,
        samples: 50,
        ..small()
    };
    let rows = run_estimation_experiment(&cfg).unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows
        .iter()
        .all(|r| r.meta("samples") == Some("50") && r.ground_truth <= r.bound("gbsm").unwrap()));
}

#[test]
fn campaign_rows_come_in_gamma_then_trial_order() {
    let rows = run_aggregation_experiment(&small()).unwrap();
    let keys: Vec<(f64, usize)> = rows.iter().map(|r| (r.gamma, r.trial)).collect();
    assert_eq!(keys, [(0.4, 0), (0.4, 1), (0.4, 2), (0.8, 0), (0.8, 1), (0.8, 2)]);
}

#[test]
fn hoeffding_check_reports_rates() {
    let o = hoeffding_check(&HoeffdingConfig {
        repeats: 20,
        ..HoeffdingConfig::default()
    })
    .unwrap();
    assert_eq!(o.repeats, 20);
    assert!(o.k > 0 && o.entry_rate() <= 1.0);
    let err = hoeffding_check(&HoeffdingConfig {
        repeats: 0,
        ..HoeffdingConfig::default()
    })
    .unwrap_err();
    assert!(matches!(err, AppError::Config(_)));
}
