//! Regression errors, argmax classification scores and one-vs-rest ROC AUC.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::synth::Task;

/// Wall-clock timings in seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Timings {
    pub it: f64,
    pub obt_total: f64,
    pub obt_per_sample: f64,
    pub infer_per_sample: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub task: Task,
    pub mae: Vec<f64>,
    pub mse: Vec<f64>,
    /// `confusion[truth][predicted]`; empty for regression.
    pub confusion: Vec<Vec<u64>>,
    pub auc: Vec<f64>,
    pub accuracy: Option<f64>,
    pub timings: Option<Timings>,
}

fn check_shapes(op: &'static str, pred: &Matrix, truth: &Matrix) -> Result<()> {
    if pred.shape() != truth.shape() {
        return Err(Error::dim(op, truth.shape(), pred.shape()));
    }
    Ok(())
}

/// Per-output mean absolute and mean squared error.
pub fn regression_errors(pred: &Matrix, truth: &Matrix) -> Result<(Vec<f64>, Vec<f64>)> {
    check_shapes("regression_errors", pred, truth)?;
    let (n, k) = pred.shape();
    let mut mae = vec![0.0; k];
    let mut mse = vec![0.0; k];
    for i in 0..n {
        for o in 0..k {
            let d = pred[(i, o)] - truth[(i, o)];
            mae[o] += d.abs();
            mse[o] += d * d;
        }
    }
    let n = n.max(1) as f64;
    mae.iter_mut().for_each(|v| *v /= n);
    mse.iter_mut().for_each(|v| *v /= n);
    Ok((mae, mse))
}

/// Fraction of rows whose argmax agrees.
pub fn agreement(a: &Matrix, b: &Matrix) -> Result<f64> {
    check_shapes("agreement", a, b)?;
    if a.rows() == 0 {
        return Ok(1.0);
    }
    let same = a.argmax_rows().iter().zip(b.argmax_rows()).filter(|(x, y)| **x == *y).count();
    Ok(same as f64 / a.rows() as f64)
}

pub fn confusion_matrix(pred: &Matrix, truth: &Matrix) -> Result<Vec<Vec<u64>>> {
    check_shapes("confusion_matrix", pred, truth)?;
    let k = truth.cols();
    let mut cm = vec![vec![0u64; k]; k];
    for (t, p) in truth.argmax_rows().into_iter().zip(pred.argmax_rows()) {
        cm[t][p] += 1;
    }
    Ok(cm)
}

/// Area under the ROC curve of `scores` against boolean `positive` labels.
/// Tied scores advance the curve diagonally. Returns NaN when either class is
/// absent.
pub fn roc_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return f64::NAN;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0usize, 0usize);
    let (mut prev_tpr, mut prev_fpr) = (0.0, 0.0);
    let mut area = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let tpr = tp as f64 / n_pos as f64;
        let fpr = fp as f64 / n_neg as f64;
        area += (fpr - prev_fpr) * (tpr + prev_tpr) * 0.5;
        prev_tpr = tpr;
        prev_fpr = fpr;
    }
    area
}

pub fn compute_metrics(pred: &Matrix, truth: &Matrix, task: Task) -> Result<MetricsReport> {
    let (mae, mse) = regression_errors(pred, truth)?;
    let mut report = MetricsReport {
        task,
        mae,
        mse,
        confusion: Vec::new(),
        auc: Vec::new(),
        accuracy: None,
        timings: None,
    };
    if task == Task::Classification {
        let cm = confusion_matrix(pred, truth)?;
        let total: u64 = cm.iter().flatten().sum();
        let trace: u64 = (0..cm.len()).map(|c| cm[c][c]).sum();
        report.accuracy = Some(if total == 0 { 1.0 } else { trace as f64 / total as f64 });
        let labels = truth.argmax_rows();
        report.auc = (0..truth.cols())
            .map(|c| {
                let positive: Vec<bool> = labels.iter().map(|&l| l == c).collect();
                roc_auc(&pred.column(c), &positive)
            })
            .collect();
        report.confusion = cm;
    }
    Ok(report)
}

impl MetricsReport {
    /// `metric,index,value` rows. Timings are left out so the file depends
    /// only on the predictions.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,index,value\n");
        for (o, v) in self.mae.iter().enumerate() {
            let _ = writeln!(out, "mae,{o},{v:?}");
        }
        for (o, v) in self.mse.iter().enumerate() {
            let _ = writeln!(out, "mse,{o},{v:?}");
        }
        if let Some(a) = self.accuracy {
            let _ = writeln!(out, "accuracy,all,{a:?}");
        }
        for (c, v) in self.auc.iter().enumerate() {
            let _ = writeln!(out, "auc,{c},{v:?}");
        }
        for (t, row) in self.confusion.iter().enumerate() {
            for (p, n) in row.iter().enumerate() {
                let _ = writeln!(out, "confusion,{t}:{p},{n}");
            }
        }
        out
    }

    pub fn timing_csv(&self) -> Option<String> {
        self.timings.map(|t| {
            format!(
                "metric,seconds\nit,{:?}\nobt_total,{:?}\nobt_per_sample,{:?}\ninfer_per_sample,{:?}\n",
                t.it, t.obt_total, t.obt_per_sample, t.infer_per_sample
            )
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn onehot(classes: &[usize], k: usize) -> Matrix {
        Matrix::from_fn(classes.len(), k, |i, j| if classes[i] == j { 1.0 } else { 0.0 })
    }

    #[test]
    fn perfect_predictions() {
        let y = onehot(&[0, 2, 1, 2], 3);
        let r = compute_metrics(&y, &y, Task::Classification).unwrap();
        assert!(r.mae.iter().all(|&v| v == 0.0));
        assert_eq!(r.accuracy, Some(1.0));
        assert_eq!(r.confusion, vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 2]]);
        assert!(r.auc.iter().all(|&a| a == 1.0));
    }

    #[test]
    fn three_sample_confusion_by_hand() {
        let truth = onehot(&[0, 1, 1], 2);
        let pred = Matrix::from_rows(&[[0.2, 0.9], [0.1, 0.8], [0.7, 0.3]]).unwrap();
        let cm = confusion_matrix(&pred, &truth).unwrap();
        assert_eq!(cm, vec![vec![0, 1], vec![1, 1]]);
        let r = compute_metrics(&pred, &truth, Task::Classification).unwrap();
        assert!((r.accuracy.unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn auc_ties_count_half() {
        assert_eq!(roc_auc(&[0.5, 0.5], &[true, false]), 0.5);
        assert_eq!(roc_auc(&[0.9, 0.1], &[false, true]), 0.0);
        assert!(roc_auc(&[0.1, 0.2], &[true, true]).is_nan());
    }

    #[test]
    fn shape_mismatch_is_a_dimension_error() {
        let a = Matrix::zeros(2, 2);
        let b = Matrix::zeros(3, 2);
        assert!(matches!(compute_metrics(&a, &b, Task::Regression), Err(Error::Dimension { .. })));
    }

    #[test]
    fn regression_errors_by_hand() {
        let p = Matrix::from_rows(&[[1.0, 0.0], [3.0, 0.0]]).unwrap();
        let t = Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0]]).unwrap();
        let (mae, mse) = regression_errors(&p, &t).unwrap();
        assert_eq!(mae, vec![1.5, 0.0]);
        assert_eq!(mse, vec![2.5, 0.0]);
    }
}
