use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};

use super::{Model, Real};

const EVAL_CHUNK: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsCore {
    pub accuracy: f64,
    pub per_class_f1: Vec<f64>,
    /// `confusion[true][predicted]`
    pub confusion: Vec<Vec<usize>>,
}

/// Accuracy, per-class F1 (with 0/0 taken as 0) and the confusion matrix.
pub fn metrics_from_predictions(truth: &[usize], predicted: &[usize], n_classes: usize) -> Result<MetricsCore> {
    if truth.len() != predicted.len() {
        return Err(Error::Dimension { expected: truth.len(), got: predicted.len() });
    }
    if truth.is_empty() {
        return Err(Error::config("test_set", "cannot evaluate on an empty set"));
    }
    let mut confusion = vec![vec![0usize; n_classes]; n_classes];
    for (&t, &p) in truth.iter().zip(predicted) {
        if t >= n_classes || p >= n_classes {
            return Err(Error::Label { label: t.max(p), n_classes });
        }
        confusion[t][p] += 1;
    }
    let correct: usize = (0..n_classes).map(|c| confusion[c][c]).sum();
    let per_class_f1 = (0..n_classes)
        .map(|c| {
            let tp = confusion[c][c] as f64;
            let predicted_c: usize = confusion.iter().map(|row| row[c]).sum();
            let actual_c: usize = confusion[c].iter().sum();
            let denom = predicted_c as f64 + actual_c as f64;
            if denom == 0.0 {
                0.0
            } else {
                2.0 * tp / denom
            }
        })
        .collect();
    Ok(MetricsCore { accuracy: correct as f64 / truth.len() as f64, per_class_f1, confusion })
}

/// Predicts the whole dataset in chunks and scores it.
pub fn evaluate<T: Real>(model: &Model<T>, test: &Dataset) -> Result<MetricsCore> {
    let predicted = predict_dataset(model, test)?;
    metrics_from_predictions(&test.labels(), &predicted, model.spec().n_classes)
}

/// Predicted class of every sample, in order.
pub fn predict_dataset<T: Real>(model: &Model<T>, ds: &Dataset) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(ds.len());
    for chunk in ds.samples().chunks(EVAL_CHUNK) {
        let batch: Vec<T> = chunk.iter().flat_map(|s| s.x.iter().map(|&v| T::lit(v))).collect();
        out.extend(model.predict(&batch)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let y = [0, 1, 2, 1];
        let m = metrics_from_predictions(&y, &y, 3).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.per_class_f1, vec![1.0; 3]);
        assert_eq!(m.confusion, vec![vec![1, 0, 0], vec![0, 2, 0], vec![0, 0, 1]]);
    }

    #[test]
    fn absent_classes_score_zero() {
        let m = metrics_from_predictions(&[1, 1], &[1, 1], 3).unwrap();
        assert_eq!(m.per_class_f1, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn one_error_each_way() {
        let truth = [0, 0, 0, 1, 1, 1];
        let pred = [0, 0, 1, 1, 1, 0];
        let m = metrics_from_predictions(&truth, &pred, 2).unwrap();
        assert!((m.accuracy - 4.0 / 6.0).abs() < 1e-15);
        for f in m.per_class_f1 {
            assert!((f - 2.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(m.confusion, vec![vec![2, 1], vec![1, 2]]);
    }
}
