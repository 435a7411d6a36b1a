//! One-dimensional Gaussian mixtures fitted by EM from k-means++ seeds.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::gaussian::{check_training, gaussian_log_pdf, rows_by_class, variance_floors};
use crate::rng::Rng;
use crate::{Error, Result};

pub const DEFAULT_K_GRID: [usize; 4] = [1, 3, 5, 7];
pub const EM_MAX_ITERATIONS: usize = 200;
pub const EM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub mean: f64,
    pub var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mixture1d {
    pub components: Vec<Component>,
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl Mixture1d {
    pub fn log_pdf(&self, x: f64) -> f64 {
        let terms: Vec<f64> =
            self.components.iter().map(|c| c.weight.ln() + gaussian_log_pdf(x, c.mean, c.var)).collect();
        log_sum_exp(&terms)
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }
}

/// k-means++ seeding: first center uniform, later ones with probability
/// proportional to the squared distance to the nearest chosen center.
///
/// `k` is reduced to the number of distinct values when fewer are available.
pub fn kmeans_pp_init(values: &[f64], k: usize, rng: &mut Rng) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut distinct = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let k = k.clamp(1, distinct.len());

    let mut centers = vec![values[rng.random_range(0..values.len())]];
    let mut d2: Vec<f64> = values.iter().map(|v| (v - centers[0]).powi(2)).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random_range(0.0..total);
            let mut pick = values.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if u < w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            // Guard against landing on a zero-weight tail from rounding.
            if d2[pick] == 0.0 {
                pick = d2.iter().rposition(|&w| w > 0.0).unwrap_or(pick);
            }
            values[pick]
        } else {
            break;
        };
        centers.push(next);
        for (d, v) in d2.iter_mut().zip(values) {
            *d = d.min((v - next).powi(2));
        }
    }
    Ok(centers)
}

/// Result of EM on one feature.
#[derive(Debug, Clone)]
pub struct EmFit {
    pub mixture: Mixture1d,
    /// Log-likelihood after every E-step.
    pub log_likelihood: Vec<f64>,
}

fn m_step(values: &[f64], resp: &[Vec<f64>], var_floor: f64) -> Vec<Component> {
    let n = values.len() as f64;
    resp.iter()
        .filter_map(|r| {
            let nk: f64 = r.iter().sum();
            if nk <= 1e-10 {
                return None;
            }
            let mean = r.iter().zip(values).map(|(w, v)| w * v).sum::<f64>() / nk;
            let var = r.iter().zip(values).map(|(w, v)| w * (v - mean).powi(2)).sum::<f64>() / nk;
            Some(Component { weight: nk / n, mean, var: var.max(var_floor) })
        })
        .collect()
}

/// EM for a `k`-component mixture; stops when the log-likelihood gain drops
/// below 1e-6 or after 200 iterations.
pub fn fit_gmm_feature(values: &[f64], k: usize, var_floor: f64, rng: &mut Rng) -> Result<EmFit> {
    let centers = kmeans_pp_init(values, k, rng)?;
    // Hard assignment to the nearest seed for the first M-step.
    let mut resp = vec![vec![0.0; values.len()]; centers.len()];
    for (i, v) in values.iter().enumerate() {
        let nearest =
            centers.iter().enumerate().min_by(|a, b| (v - a.1).abs().total_cmp(&(v - b.1).abs())).map_or(0, |(c, _)| c);
        resp[nearest][i] = 1.0;
    }
    let mut components = m_step(values, &resp, var_floor);
    let mut trace = Vec::new();
    for _ in 0..EM_MAX_ITERATIONS {
        let mut ll = 0.0;
        resp = vec![vec![0.0; values.len()]; components.len()];
        let mut terms = vec![0.0; components.len()];
        for (i, &v) in values.iter().enumerate() {
            for (t, c) in terms.iter_mut().zip(&components) {
                *t = c.weight.ln() + gaussian_log_pdf(v, c.mean, c.var);
            }
            let lse = log_sum_exp(&terms);
            ll += lse;
            for (r, t) in resp.iter_mut().zip(&terms) {
                r[i] = (t - lse).exp();
            }
        }
        let converged = trace.last().is_some_and(|&prev: &f64| ll - prev < EM_TOLERANCE);
        trace.push(ll);
        if converged {
            break;
        }
        components = m_step(values, &resp, var_floor);
    }
    Ok(EmFit { mixture: Mixture1d { components }, log_likelihood: trace })
}

/// Per-(class, feature) mixtures with a global component count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmFeatureModel {
    pub k: usize,
    /// `mixtures[j][f]` for class `j` (0-based) and flattened feature `f`.
    pub mixtures: Vec<Vec<Mixture1d>>,
    pub var_floor: Vec<f64>,
}

impl GmmFeatureModel {
    pub fn log_pdf(&self, class: usize, feature: usize, x: f64) -> f64 {
        self.mixtures[class][feature].log_pdf(x)
    }
}

pub fn fit_gmm(
    rows: &[Vec<f64>],
    labels: &[usize],
    class_count: usize,
    k: usize,
    rng: &mut Rng,
) -> Result<GmmFeatureModel> {
    if k == 0 {
        return Err(Error::invalid("mixture needs at least one component"));
    }
    let d = check_training(rows, labels, class_count)?;
    let var_floor = variance_floors(rows);
    let by_class = rows_by_class(rows, labels, class_count);
    let mut mixtures = Vec::with_capacity(class_count);
    for members in &by_class {
        let mut per_feature = Vec::with_capacity(d);
        for (f, floor) in var_floor.iter().enumerate() {
            let values: Vec<f64> = members.iter().map(|r| r[f]).collect();
            per_feature.push(fit_gmm_feature(&values, k.min(values.len()), *floor, rng)?.mixture);
        }
        mixtures.push(per_feature);
    }
    Ok(GmmFeatureModel { k, mixtures, var_floor })
}
