//! Logistic calibration of raw detector scores (Platt scaling).

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `p(clean | s) = σ(a·s + b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibrator {
    pub a: f64,
    pub b: f64,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl Calibrator {
    pub fn apply(&self, score: f64) -> f64 {
        sigmoid(self.a * score + self.b)
    }
}

/// Fits the sigmoid by Newton's method with backtracking on the cross-entropy.
///
/// Targets are Platt's smoothed labels `(N₊+1)/(N₊+2)` and `1/(N₋+2)`, which
/// keeps the optimum finite on separable scores. `labels[i]` is `true` for
/// target-class (clean) examples.
pub fn fit_calibrator(scores: &[f64], labels: &[bool]) -> Result<Calibrator> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: scores.len(), got: labels.len() });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::invalid("calibration scores must be finite"));
    }
    let pos = labels.iter().filter(|&&l| l).count() as f64;
    let neg = labels.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return Err(Error::SingleClassLabels);
    }
    let hi = (pos + 1.0) / (pos + 2.0);
    let lo = 1.0 / (neg + 2.0);
    let targets: Vec<f64> = labels.iter().map(|&l| if l { hi } else { lo }).collect();

    let loss = |a: f64, b: f64| -> f64 {
        scores
            .iter()
            .zip(&targets)
            .map(|(&s, &t)| {
                let z = a * s + b;
                // −t·ln σ(z) − (1−t)·ln(1−σ(z))
                t * softplus(-z) + (1.0 - t) * softplus(z)
            })
            .sum()
    };

    let (mut a, mut b) = (0.0, ((pos + 1.0) / (neg + 1.0)).ln());
    let mut f = loss(a, b);
    const RIDGE: f64 = 1e-12;
    for _ in 0..100 {
        let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (0.0, 0.0, RIDGE, 0.0, RIDGE);
        for (&s, &t) in scores.iter().zip(&targets) {
            let p = sigmoid(a * s + b);
            let r = p - t;
            let w = p * (1.0 - p);
            ga += r * s;
            gb += r;
            haa += w * s * s;
            hab += w * s;
            hbb += w;
        }
        if ga.abs() < 1e-9 && gb.abs() < 1e-9 {
            break;
        }
        let det = haa * hbb - hab * hab;
        let (da, db) =
            if det.abs() > 1e-300 { (-(hbb * ga - hab * gb) / det, -(haa * gb - hab * ga) / det) } else { (-ga, -gb) };
        let slope = ga * da + gb * db;
        let mut step = 1.0;
        let mut moved = false;
        while step >= 1e-10 {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = loss(na, nb);
            if nf <= f + 1e-4 * step * slope {
                a = na;
                b = nb;
                f = nf;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Ok(Calibrator { a, b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn separated_scores_are_ordered() {
        let c = fit_calibrator(&[-1.0, -1.0, 1.0, 1.0], &[false, false, true, true]).unwrap();
        assert!(c.a > 0.0);
        assert!(c.apply(-1.0) < 0.5 && 0.5 < c.apply(1.0));
    }

    #[test]
    fn symmetric_balanced_scores_center_at_half() {
        let scores: Vec<f64> =
            (0..50).map(|i| -2.0 + i as f64 * 0.04).chain((0..50).map(|i| 0.04 + i as f64 * 0.04)).collect();
        let labels: Vec<bool> = (0..100).map(|i| i >= 50).collect();
        let c = fit_calibrator(&scores, &labels).unwrap();
        assert!((c.apply(0.0) - 0.5).abs() < 0.05);
    }

    #[test]
    fn overlapping_scores_fit_finite_slope() {
        let scores = [-2.0, -1.0, 0.5, -0.5, 1.0, 2.0, 0.2, -0.1];
        let labels = [false, false, false, true, true, true, true, false];
        let c = fit_calibrator(&scores, &labels).unwrap();
        assert!(c.a.is_finite() && c.a > 0.0);
    }

    #[test]
    fn single_class_is_error() {
        assert!(matches!(fit_calibrator(&[1.0, 2.0], &[true, true]), Err(Error::SingleClassLabels)));
        assert!(fit_calibrator(&[1.0], &[true, false]).is_err());
    }

    proptest! {
        #[test]
        fn calibrated_output_is_monotone(gap in 0.1f64..5.0, n in 2usize..30) {
            let scores: Vec<f64> = (0..n).map(|i| -gap - i as f64 * 0.1).chain((0..n).map(|i| gap + i as f64 * 0.1)).collect();
            let labels: Vec<bool> = (0..2 * n).map(|i| i >= n).collect();
            let c = fit_calibrator(&scores, &labels).unwrap();
            prop_assert!(c.a > 0.0);
            let probe: Vec<f64> = (0..40).map(|i| -10.0 + i as f64 * 0.5).collect();
            for w in probe.windows(2) {
                let (p0, p1) = (c.apply(w[0]), c.apply(w[1]));
                prop_assert!(p0 <= p1);
                prop_assert!((0.0..=1.0).contains(&p0));
            }
        }
    }
}
