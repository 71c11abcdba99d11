use osos_elm::metrics::{compute_metrics, roc_auc};
use osos_elm::rng::stream_rng;
use osos_elm::synth::Task;
use osos_elm::Matrix;
use proptest::prelude::*;
use rand::Rng;

/// Probability that a random positive outranks a random negative, ties
/// counting one half.
fn mann_whitney(scores: &[f64], positive: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        if !positive[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if positive[j] {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

#[test]
fn random_scores_have_chance_auc() {
    let mut rng = stream_rng(2024, 0);
    let scores: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
    let labels: Vec<bool> = (0..10_000).map(|_| rng.random_bool(0.5)).collect();
    let auc = roc_auc(&scores, &labels);
    assert!((auc - 0.5).abs() <= 0.05, "{auc}");
}

#[test]
fn confusion_rows_count_each_class() {
    let mut rng = stream_rng(5, 1);
    let truth_idx: Vec<usize> = (0..500).map(|_| rng.random_range(0..4)).collect();
    let truth = Matrix::from_fn(500, 4, |i, j| (truth_idx[i] == j) as u8 as f64);
    let pred = Matrix::from_fn(500, 4, |_, _| rng.random::<f64>());
    let r = compute_metrics(&pred, &truth, Task::Classification).unwrap();
    for c in 0..4 {
        let count = truth_idx.iter().filter(|&&t| t == c).count() as u64;
        assert_eq!(r.confusion[c].iter().sum::<u64>(), count);
    }
    let trace: u64 = (0..4).map(|c| r.confusion[c][c]).sum();
    assert_eq!(r.accuracy, Some(trace as f64 / 500.0));
    assert!(r.auc.iter().all(|a| (0.0..=1.0).contains(a)));
}

proptest! {
    #[test]
    fn auc_equals_mann_whitney(
        data in prop::collection::vec((0u8..6, any::<bool>()), 2..60)
    ) {
        let scores: Vec<f64> = data.iter().map(|(s, _)| *s as f64).collect();
        let positive: Vec<bool> = data.iter().map(|(_, p)| *p).collect();
        prop_assume!(positive.iter().any(|&p| p) && positive.iter().any(|&p| !p));
        let auc = roc_auc(&scores, &positive);
        prop_assert!((auc - mann_whitney(&scores, &positive)).abs() < 1e-12);
    }
}
