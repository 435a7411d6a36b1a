use serde::{Deserialize, Serialize};

/// Counts with rows = truth and columns = prediction, classes 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(counts: Vec<Vec<u64>>) -> Self {
        Self { counts }
    }

    /// From 1-based label sequences over `class_count` classes.
    pub fn from_labels(truth: &[usize], pred: &[usize], class_count: usize) -> Self {
        let mut counts = vec![vec![0u64; class_count]; class_count];
        for (&t, &p) in truth.iter().zip(pred) {
            counts[t - 1][p - 1] += 1;
        }
        Self { counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        self.counts.iter().enumerate().map(|(i, r)| r[i]).sum()
    }
}

/// Mean per-class recall over classes that occur in the truth.
pub fn balanced_accuracy(cm: &ConfusionMatrix) -> f64 {
    let recalls: Vec<f64> = cm
        .counts
        .iter()
        .enumerate()
        .filter_map(|(i, row)| {
            let n: u64 = row.iter().sum();
            if n == 0 {
                log::warn!("class {} absent from the evaluated set; excluded from BAC", i + 1);
                None
            } else {
                Some(row[i] as f64 / n as f64)
            }
        })
        .collect();
    if recalls.is_empty() {
        return 0.0;
    }
    recalls.iter().sum::<f64>() / recalls.len() as f64
}

pub fn balanced_accuracy_labels(truth: &[usize], pred: &[usize], class_count: usize) -> f64 {
    balanced_accuracy(&ConfusionMatrix::from_labels(truth, pred, class_count))
}

/// Cohen's kappa; 0 when chance agreement is already 1.
pub fn cohens_kappa(cm: &ConfusionMatrix) -> f64 {
    let total = cm.total() as f64;
    if total == 0.0 {
        return 0.0;
    }
    let po = cm.trace() as f64 / total;
    let m = cm.counts.len();
    let pe: f64 = (0..m)
        .map(|i| {
            let row: u64 = cm.counts[i].iter().sum();
            let col: u64 = cm.counts.iter().map(|r| r[i]).sum();
            row as f64 * col as f64
        })
        .sum::<f64>()
        / (total * total);
    if pe >= 1.0 {
        0.0
    } else {
        (po - pe) / (1.0 - pe)
    }
}

/// Micro-averaged F1, which for single-label predictions is the accuracy.
pub fn micro_f1(cm: &ConfusionMatrix) -> f64 {
    let total = cm.total();
    if total == 0 {
        return 0.0;
    }
    // Micro precision and recall share numerator (Σ TP) and denominator (Σ TP + FP = Σ TP + FN = total).
    let tp = cm.trace() as f64;
    let fp = total as f64 - tp;
    let fn_ = fp;
    let precision = tp / (tp + fp);
    let recall = tp / (tp + fn_);
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cm(v: &[&[u64]]) -> ConfusionMatrix {
        ConfusionMatrix::new(v.iter().map(|r| r.to_vec()).collect())
    }

    #[test]
    fn bac_examples() {
        assert_eq!(balanced_accuracy(&cm(&[&[5, 0], &[0, 7]])), 1.0);
        assert!((balanced_accuracy(&cm(&[&[8, 2], &[6, 4]])) - 0.6).abs() < 1e-15);
        assert_eq!(balanced_accuracy(&cm(&[&[3, 1], &[0, 0]])), 0.75);
    }

    #[test]
    fn bac_of_random_guessing_is_one_over_m() {
        use rand::Rng;
        let mut rng = crate::rng::seeded(4);
        let truth: Vec<usize> = (0..20_000).map(|i| 1 + i % 4).collect();
        let pred: Vec<usize> = (0..20_000).map(|_| rng.random_range(1..=4)).collect();
        assert!((balanced_accuracy_labels(&truth, &pred, 4) - 0.25).abs() < 0.02);
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(cohens_kappa(&cm(&[&[5, 0], &[0, 7]])), 1.0);
        assert_eq!(cohens_kappa(&cm(&[&[1, 1], &[1, 1]])), 0.0);
        assert!((cohens_kappa(&cm(&[&[8, 2], &[6, 4]])) - 0.2).abs() < 1e-12);
        assert_eq!(cohens_kappa(&cm(&[&[4, 0], &[0, 0]])), 0.0);
    }

    #[test]
    fn f1_examples() {
        assert!((micro_f1(&cm(&[&[8, 2], &[6, 4]])) - 0.6).abs() < 1e-15);
        assert_eq!(micro_f1(&cm(&[&[3, 0], &[0, 3]])), 1.0);
    }

    proptest! {
        #[test]
        fn micro_f1_is_accuracy(cells in proptest::collection::vec(0u64..50, 9)) {
            let c = ConfusionMatrix::new(cells.chunks(3).map(|r| r.to_vec()).collect());
            prop_assume!(c.total() > 0);
            let acc = c.trace() as f64 / c.total() as f64;
            prop_assert!((micro_f1(&c) - acc).abs() < 1e-12);
        }

        #[test]
        fn bac_invariant_to_row_scaling(cells in proptest::collection::vec(1u64..50, 9), scale in 1u64..10) {
            let c = ConfusionMatrix::new(cells.chunks(3).map(|r| r.to_vec()).collect());
            let mut scaled = c.clone();
            for v in &mut scaled.counts[1] { *v *= scale; }
            prop_assert!((balanced_accuracy(&c) - balanced_accuracy(&scaled)).abs() < 1e-12);
        }

        #[test]
        fn metric_ranges(cells in proptest::collection::vec(0u64..30, 16)) {
            let c = ConfusionMatrix::new(cells.chunks(4).map(|r| r.to_vec()).collect());
            prop_assume!(c.total() > 0);
            let k = cohens_kappa(&c);
            prop_assert!((-1.0..=1.0).contains(&k));
            prop_assert!((0.0..=1.0).contains(&balanced_accuracy(&c)));
        }
    }
}
