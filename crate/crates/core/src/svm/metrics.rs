use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Classification metrics. Rows of `confusion` follow `classes` (true labels);
/// columns follow `predicted_classes`, which starts with `classes` and appends any
/// predicted label outside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    /// Recall of each class with at least one test example, in `classes` order.
    pub per_class_accuracy: Vec<(String, f64)>,
    /// Unweighted mean of `per_class_accuracy`.
    pub mean_accuracy: f64,
    pub classes: Vec<String>,
    pub predicted_classes: Vec<String>,
    pub confusion: Vec<Vec<usize>>,
}

pub fn compute_metrics(
    class_set: &[String],
    truth: &[String],
    predicted: &[String],
) -> Result<Metrics> {
    if truth.len() != predicted.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            found: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::invalid("no examples to evaluate"));
    }
    let mut cols: Vec<String> = class_set.to_vec();
    let mut extras: Vec<String> = predicted
        .iter()
        .filter(|p| !class_set.contains(p))
        .cloned()
        .collect();
    extras.sort();
    extras.dedup();
    cols.extend(extras);

    let mut confusion = vec![vec![0usize; cols.len()]; class_set.len()];
    let mut correct = 0usize;
    for (t, p) in truth.iter().zip(predicted) {
        let row = class_set
            .iter()
            .position(|c| c == t)
            .ok_or_else(|| Error::invalid(format!("label `{t}` not in class set")))?;
        let col = cols.iter().position(|c| c == p).expect("column added above");
        confusion[row][col] += 1;
        if t == p {
            correct += 1;
        }
    }
    let per_class: Vec<(String, f64)> = class_set
        .iter()
        .enumerate()
        .filter_map(|(i, c)| {
            let support: usize = confusion[i].iter().sum();
            (support > 0).then(|| (c.clone(), confusion[i][i] as f64 / support as f64))
        })
        .collect();
    let mean = per_class.iter().map(|(_, a)| a).sum::<f64>() / per_class.len() as f64;
    Ok(Metrics {
        accuracy: correct as f64 / truth.len() as f64,
        per_class_accuracy: per_class,
        mean_accuracy: mean,
        classes: class_set.to_vec(),
        predicted_classes: cols,
        confusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn perfect_predictions() {
        let classes = s(&["a", "b", "c"]);
        let t = s(&["a", "b", "c", "a"]);
        let m = compute_metrics(&classes, &t, &t).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.mean_accuracy, 1.0);
        assert!(m.per_class_accuracy.iter().all(|(_, a)| *a == 1.0));
    }

    #[test]
    fn constant_predictor_on_balanced_set() {
        let classes = s(&["a", "b", "c", "d"]);
        let t = s(&["a", "b", "c", "d", "a", "b", "c", "d"]);
        let p = s(&["c"; 8]);
        let m = compute_metrics(&classes, &t, &p).unwrap();
        assert_eq!(m.mean_accuracy, 0.25);
        assert_eq!(m.accuracy, 0.25);
    }

    #[test]
    fn hand_computed_confusion() {
        // truth a a a b b c ; pred a b a b c c
        let classes = s(&["a", "b", "c"]);
        let t = s(&["a", "a", "a", "b", "b", "c"]);
        let p = s(&["a", "b", "a", "b", "c", "c"]);
        let m = compute_metrics(&classes, &t, &p).unwrap();
        assert_eq!(m.confusion, vec![vec![2, 1, 0], vec![0, 1, 1], vec![0, 0, 1]]);
        assert!((m.accuracy - 4.0 / 6.0).abs() < 1e-15);
        let want = (2.0 / 3.0 + 0.5 + 1.0) / 3.0;
        assert!((m.mean_accuracy - want).abs() < 1e-15);
    }

    #[test]
    fn unseen_prediction_gets_extra_column() {
        let m = compute_metrics(&s(&["a", "b"]), &s(&["a", "b"]), &s(&["z", "b"])).unwrap();
        assert_eq!(m.predicted_classes, s(&["a", "b", "z"]));
        assert_eq!(m.confusion[0][2], 1);
    }

    #[test]
    fn empty_class_is_excluded_from_mean() {
        let m = compute_metrics(&s(&["a", "b"]), &s(&["a"]), &s(&["a"])).unwrap();
        assert_eq!(m.per_class_accuracy.len(), 1);
        assert_eq!(m.mean_accuracy, 1.0);
    }
}
