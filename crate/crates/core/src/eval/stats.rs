use crate::{Error, Result};
use statrs::distribution::{ContinuousCDF, Normal};

/// Largest number of nonzero differences handled by exact enumeration.
pub const EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, PartialEq)]
pub struct WilcoxonResult {
    pub n: usize,
    pub w_plus: f64,
    pub w_minus: f64,
    pub p_value: f64,
}

/// Average ranks (1-based) of `values`, ties sharing the mean of their positions.
pub fn average_ranks_of(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let r = (start + 1 + end) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = r;
        }
        start = end;
    }
    ranks
}

struct SignedRanks {
    ranks: Vec<f64>,
    positive: Vec<bool>,
}

fn signed_ranks(a: &[f64], b: &[f64]) -> Result<SignedRanks> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    Ok(SignedRanks { ranks: average_ranks_of(&abs), positive: diffs.iter().map(|d| *d > 0.0).collect() })
}

/// Exact two-sided p from the null distribution of W+ over all sign patterns.
/// Average ranks are doubled so every rank is an integer.
pub fn exact_p(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; max + 1];
    counts[0] = 1.0;
    for &r in &doubled {
        for s in (r..=max).rev() {
            counts[s] += counts[s - r];
        }
    }
    let total = 2f64.powi(ranks.len() as i32);
    let w = (2.0 * w_plus).round() as usize;
    let lower: f64 = counts[..=w].iter().sum::<f64>() / total;
    let upper: f64 = counts[w..].iter().sum::<f64>() / total;
    (2.0 * lower.min(upper)).min(1.0)
}

/// Normal approximation with tie and continuity corrections.
pub fn normal_p(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let dev = ((w_plus - mean).abs() - 0.5).max(0.0);
    let z = dev / var.sqrt();
    let normal = Normal::standard();
    (2.0 * (1.0 - normal.cdf(z))).min(1.0)
}

/// Two-sided Wilcoxon signed-rank test on paired samples.
pub fn wilcoxon(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    let sr = signed_ranks(a, b)?;
    let n = sr.ranks.len();
    let w_plus: f64 = sr.ranks.iter().zip(&sr.positive).filter(|(_, p)| **p).map(|(r, _)| r).sum();
    let w_minus = (n * (n + 1)) as f64 / 2.0 - w_plus;
    if n == 0 {
        return Ok(WilcoxonResult { n, w_plus, w_minus, p_value: 1.0 });
    }
    if n < 5 {
        log::debug!("Wilcoxon test on only {n} nonzero differences");
    }
    let p_value = if n <= EXACT_MAX_N { exact_p(&sr.ranks, w_plus) } else { normal_p(&sr.ranks, w_plus) };
    Ok(WilcoxonResult { n, w_plus, w_minus, p_value })
}

pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<f64> {
    Ok(wilcoxon(a, b)?.p_value)
}

/// Holm step-down adjusted p-values, returned in input order.
pub fn holm_correction(pvalues: &[f64]) -> Vec<f64> {
    let m = pvalues.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| pvalues[i].total_cmp(&pvalues[j]));
    let mut adjusted = vec![0.0; m];
    let mut running: f64 = 0.0;
    for (i, &k) in order.iter().enumerate() {
        running = running.max(pvalues[k] * (m - i) as f64).min(1.0);
        adjusted[k] = running;
    }
    adjusted
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn five_positive_differences() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [0.0; 5];
        let r = wilcoxon(&a, &b).unwrap();
        assert_eq!(r.w_plus, 15.0);
        assert!((r.p_value - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn identical_samples() {
        let a = [0.3, 0.5, 0.9, 0.1, 0.2];
        assert_eq!(wilcoxon_signed_rank(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn mismatched_lengths() {
        assert!(wilcoxon_signed_rank(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn exact_distribution_small_case() {
        // n=3 ranks 1..3: W+ distribution over 8 patterns is {0,1,2,3,3,4,5,6}.
        let p = exact_p(&[1.0, 2.0, 3.0], 1.0);
        assert!((p - 0.5).abs() < 1e-15);
        let p = exact_p(&[1.0, 2.0, 3.0], 3.0);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn average_rank_ties() {
        assert_eq!(average_ranks_of(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn exact_and_normal_agree_at_25() {
        let mut rng = crate::rng::seeded(77);
        let mut worst: f64 = 0.0;
        for _ in 0..200 {
            let shift: f64 = rng.random_range(-0.6..0.6);
            let d: Vec<f64> = (0..25).map(|_| rng.random_range(-1.0..1.0) + shift).collect();
            let zeros = vec![0.0; 25];
            let sr = signed_ranks(&d, &zeros).unwrap();
            let w: f64 = sr.ranks.iter().zip(&sr.positive).filter(|(_, p)| **p).map(|(r, _)| r).sum();
            worst = worst.max((exact_p(&sr.ranks, w) - normal_p(&sr.ranks, w)).abs());
        }
        assert!(worst < 0.01, "max disagreement {worst}");
    }

    #[test]
    fn holm_examples() {
        let h = holm_correction(&[0.01, 0.04]);
        assert!((h[0] - 0.02).abs() < 1e-15 && (h[1] - 0.04).abs() < 1e-15);
        assert_eq!(holm_correction(&[0.3]), vec![0.3]);
        assert_eq!(holm_correction(&[0.5, 0.5, 0.5]), vec![1.0, 1.0, 1.0]);
        let h = holm_correction(&[0.04, 0.01]);
        assert!((h[0] - 0.04).abs() < 1e-15 && (h[1] - 0.02).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn swap_symmetry(pairs in proptest::collection::vec((-5i32..5, -5i32..5), 5..40)) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let b: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
            let p1 = wilcoxon_signed_rank(&a, &b).unwrap();
            let p2 = wilcoxon_signed_rank(&b, &a).unwrap();
            prop_assert!((p1 - p2).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&p1));
        }

        #[test]
        fn holm_monotone_and_dominating(ps in proptest::collection::vec(0.0f64..1.0, 1..12)) {
            let adj = holm_correction(&ps);
            let mut order: Vec<usize> = (0..ps.len()).collect();
            order.sort_by(|&i, &j| ps[i].total_cmp(&ps[j]));
            for w in order.windows(2) {
                prop_assert!(adj[w[0]] <= adj[w[1]]);
            }
            for (a, p) in adj.iter().zip(&ps) {
                prop_assert!(*a >= *p && *a <= 1.0);
            }
        }
    }
}
