use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Densities below this value are clamped before taking logs.
pub const DENSITY_FLOOR: f64 = 1e-300;

pub fn log_density_floor() -> f64 {
    DENSITY_FLOOR.ln()
}

/// Class priors `p_j` from empirical frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassPrior {
    pub p: Vec<f64>,
}

impl ClassPrior {
    pub fn class_count(&self) -> usize {
        self.p.len()
    }
}

/// Frequencies of the 1-based `labels` over `class_count` classes.
pub fn fit_priors(labels: &[usize], class_count: usize) -> Result<ClassPrior> {
    if labels.is_empty() {
        return Err(Error::invalid("no labels"));
    }
    let mut counts = vec![0usize; class_count];
    for &c in labels {
        if c == 0 || c > class_count {
            return Err(Error::invalid(format!("label {c} outside 1..={class_count}")));
        }
        counts[c - 1] += 1;
    }
    let n = labels.len() as f64;
    Ok(ClassPrior { p: counts.into_iter().map(|c| c as f64 / n).collect() })
}

pub fn gaussian_log_pdf(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (x - mean) * (x - mean) / (2.0 * var)
}

/// Per-feature variance floor `1e-9 · (Var_all(feature) + 1e-12)`.
pub fn variance_floors(rows: &[Vec<f64>]) -> Vec<f64> {
    let d = rows.first().map_or(0, Vec::len);
    let n = rows.len().max(1) as f64;
    (0..d)
        .map(|k| {
            let mean = rows.iter().map(|r| r[k]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[k] - mean).powi(2)).sum::<f64>() / n;
            1e-9 * (var + 1e-12)
        })
        .collect()
}

/// Per-(class, feature) normal densities with biased variance estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianFeatureModel {
    /// `mean[j][k]` for class `j` (0-based) and flattened feature `k`.
    pub mean: Vec<Vec<f64>>,
    pub var: Vec<Vec<f64>>,
    pub var_floor: Vec<f64>,
}

impl GaussianFeatureModel {
    pub fn log_pdf(&self, class: usize, feature: usize, x: f64) -> f64 {
        gaussian_log_pdf(x, self.mean[class][feature], self.var[class][feature])
    }
}

/// Rows of each class (0-based), in input order.
pub(crate) fn rows_by_class<'a>(rows: &'a [Vec<f64>], labels: &[usize], class_count: usize) -> Vec<Vec<&'a [f64]>> {
    let mut out = vec![Vec::new(); class_count];
    for (r, &c) in rows.iter().zip(labels) {
        out[c - 1].push(r.as_slice());
    }
    out
}

pub(crate) fn check_training(rows: &[Vec<f64>], labels: &[usize], class_count: usize) -> Result<usize> {
    if rows.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: rows.len(), got: labels.len() });
    }
    let d = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::invalid("feature rows differ in length"));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite feature value"));
    }
    let mut counts = vec![0usize; class_count];
    for &c in labels {
        if c == 0 || c > class_count {
            return Err(Error::invalid(format!("label {c} outside 1..={class_count}")));
        }
        counts[c - 1] += 1;
    }
    if let Some(c) = counts.iter().position(|&n| n < 2) {
        return Err(Error::invalid(format!("class {} has {} samples; at least 2 required", c + 1, counts[c])));
    }
    Ok(d)
}

pub fn fit_gaussian(rows: &[Vec<f64>], labels: &[usize], class_count: usize) -> Result<GaussianFeatureModel> {
    let d = check_training(rows, labels, class_count)?;
    let var_floor = variance_floors(rows);
    let by_class = rows_by_class(rows, labels, class_count);
    let mut mean = Vec::with_capacity(class_count);
    let mut var = Vec::with_capacity(class_count);
    for members in &by_class {
        let n = members.len() as f64;
        let mu: Vec<f64> = (0..d).map(|k| members.iter().map(|r| r[k]).sum::<f64>() / n).collect();
        let v: Vec<f64> = (0..d)
            .map(|k| {
                let s = members.iter().map(|r| (r[k] - mu[k]).powi(2)).sum::<f64>() / n;
                s.max(var_floor[k])
            })
            .collect();
        mean.push(mu);
        var.push(v);
    }
    Ok(GaussianFeatureModel { mean, var, var_floor })
}
