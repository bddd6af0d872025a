//! End-to-end pipeline smoke test: generate traces, extract windows, train,
//! learn the threshold, evaluate early-prediction accuracy. A scaled-down
//! version of the full benchmark the harness runs.

use bs_predictor::{
    availability_upper_bound, evaluate, extract_dataset, learn_threshold, lstm_train, LstmConfig,
    TrainConfig, WindowSpec,
};
use radio_trace::{generate_trace, Trace, TraceFamily};

fn make_traces(seed: u64, count: u64) -> Vec<Trace> {
    let family = TraceFamily {
        seed,
        shadowing_sigma_db: 3.0,
        ..Default::default()
    };
    (0..count)
        .map(|i| generate_trace(&family.instance(i)).expect("valid config"))
        .collect()
}

#[test]
fn trained_pipeline_predicts_most_handovers_early() {
    let train_traces = make_traces(101, 60);
    let eval_traces = make_traces(202, 20);

    let spec = WindowSpec::default();
    let dataset = extract_dataset(&train_traces, &spec, 7).expect("both classes");
    let (n_train, n_val) = {
        let split = dataset.len() * 9 / 10;
        (split, dataset.len() - split)
    };
    assert!(n_val > 20);
    let (train_set, val_set) = dataset.split_at(n_train);

    let arch = LstmConfig::new(4, 32, 2, spec.n);
    let config = TrainConfig {
        epochs: 10,
        seed: 5,
        ..Default::default()
    };
    let (model, report) = lstm_train(train_set, arch, &config).expect("train");
    assert!(
        report.epoch_losses.last().unwrap() < &report.epoch_losses[0],
        "loss curve: {:?}",
        report.epoch_losses
    );
    assert!(report.final_accuracy > 0.9, "training accuracy {}", report.final_accuracy);

    let threshold = learn_threshold(&model, val_set).expect("threshold");
    assert!(threshold > 0.0 && threshold < 1.0);

    let metrics = evaluate(&eval_traces, &model, threshold, 100, 50);
    let bound = availability_upper_bound(&eval_traces, 100);
    assert!(metrics.handovers > 10, "need handovers to evaluate");
    let sum = metrics.true_at_horizon + metrics.late_true + metrics.wrong_or_missed;
    assert!((sum - 1.0).abs() < 1e-9);
    // Loose floor for the scaled-down smoke test; the full benchmark pins
    // the acceptance bound.
    assert!(
        metrics.true_at_horizon >= 0.75,
        "true_at_horizon {} (bound {bound})",
        metrics.true_at_horizon
    );

    // A trained model scores a held-out positive above the threshold.
    let eval_dataset = extract_dataset(&eval_traces, &spec, 8).expect("eval windows");
    let positive = eval_dataset.iter().find(|(_, y)| *y).expect("a positive");
    let prob = model.forward(&positive.0).expect("forward");
    assert!(
        prob > threshold,
        "held-out positive scored {prob} <= threshold {threshold}"
    );
}
