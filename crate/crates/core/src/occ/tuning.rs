//! ν selection by cross-validation against artificial uniform outliers.

use rand::seq::SliceRandom;
use rand::Rng as _;

use super::svm::{default_gamma, train_ocsvm_with, OcsvmModel, SolverParams};
use crate::rng::Rng;
use crate::{Error, Result};

pub const DEFAULT_NU_GRID: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
pub const TUNING_FOLDS: usize = 4;
pub const OUTLIER_MARGIN: f64 = 0.1;

/// Per-dimension `(lo, hi)` of `x`, widened on each side by `margin` times the range.
pub fn bounds_with_margin(x: &[Vec<f64>], margin: f64) -> Vec<(f64, f64)> {
    let d = x.first().map_or(0, Vec::len);
    (0..d)
        .map(|k| {
            let lo = x.iter().map(|r| r[k]).fold(f64::INFINITY, f64::min);
            let hi = x.iter().map(|r| r[k]).fold(f64::NEG_INFINITY, f64::max);
            let pad = margin * (hi - lo);
            (lo - pad, hi + pad)
        })
        .collect()
}

/// `count` points drawn uniformly from the box `bounds`.
pub fn generate_uniform_outliers(bounds: &[(f64, f64)], count: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| bounds.iter().map(|&(lo, hi)| if hi > lo { rng.random_range(lo..hi) } else { lo }).collect())
        .collect()
}

/// Cross-validation fixture shared by every ν candidate.
pub struct TuningFolds {
    /// Validation row indices per fold.
    pub validation: Vec<Vec<usize>>,
    /// Artificial outliers per fold, as many as validation rows.
    pub outliers: Vec<Vec<Vec<f64>>>,
}

impl TuningFolds {
    pub fn new(x: &[Vec<f64>], folds: usize, rng: &mut Rng) -> Result<Self> {
        if x.len() < 2 * folds {
            return Err(Error::invalid(format!("ν tuning needs at least {} rows, got {}", 2 * folds, x.len())));
        }
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.shuffle(rng);
        let mut validation = vec![Vec::new(); folds];
        for (k, i) in order.into_iter().enumerate() {
            validation[k % folds].push(i);
        }
        for v in &mut validation {
            v.sort_unstable();
        }
        let outliers = validation
            .iter()
            .map(|val| {
                let train = training_rows(x, val);
                generate_uniform_outliers(&bounds_with_margin(&train, OUTLIER_MARGIN), val.len(), rng)
            })
            .collect();
        Ok(Self { validation, outliers })
    }
}

fn training_rows(x: &[Vec<f64>], validation: &[usize]) -> Vec<Vec<f64>> {
    let mut skip = validation.iter().peekable();
    x.iter()
        .enumerate()
        .filter(|(i, _)| {
            if skip.peek() == Some(&i) {
                skip.next();
                false
            } else {
                true
            }
        })
        .map(|(_, r)| r.clone())
        .collect()
}

/// Cross-validated quality of one ν.
#[derive(Debug, Clone)]
pub struct NuEvaluation {
    pub nu: f64,
    /// Mean balanced accuracy over folds (target = positive); `None` when ν was infeasible on some fold.
    pub bac: Option<f64>,
    /// Pooled out-of-fold `(score, is_target)` pairs.
    pub scores: Vec<(f64, bool)>,
}

pub fn evaluate_nu(x: &[Vec<f64>], nu: f64, folds: &TuningFolds, solver: &SolverParams) -> Result<NuEvaluation> {
    let mut bac_sum = 0.0;
    let mut scores = Vec::new();
    for (val, outliers) in folds.validation.iter().zip(&folds.outliers) {
        let train = training_rows(x, val);
        let model = match train_ocsvm_with(&train, nu, default_gamma(&train), solver) {
            Ok(m) => m,
            Err(Error::InfeasibleNu(_)) => return Ok(NuEvaluation { nu, bac: None, scores: Vec::new() }),
            Err(e) => return Err(e),
        };
        let mut hits_target = 0usize;
        for &i in val {
            let s = model.decision(&x[i]);
            hits_target += usize::from(s >= 0.0);
            scores.push((s, true));
        }
        let mut hits_outlier = 0usize;
        for o in outliers {
            let s = model.decision(o);
            hits_outlier += usize::from(s < 0.0);
            scores.push((s, false));
        }
        let recall_t = hits_target as f64 / val.len() as f64;
        let recall_o = if outliers.is_empty() { 1.0 } else { hits_outlier as f64 / outliers.len() as f64 };
        bac_sum += 0.5 * (recall_t + recall_o);
    }
    Ok(NuEvaluation { nu, bac: Some(bac_sum / folds.validation.len() as f64), scores })
}

/// Best candidate by BAC; ties go to the smaller ν.
pub fn select_best(evals: &[NuEvaluation]) -> Option<&NuEvaluation> {
    evals.iter().filter(|e| e.bac.is_some()).fold(None, |best: Option<&NuEvaluation>, e| match best {
        None => Some(e),
        Some(b) => {
            let (eb, bb) = (e.bac.unwrap_or(f64::NEG_INFINITY), b.bac.unwrap_or(f64::NEG_INFINITY));
            if eb > bb || (eb == bb && e.nu < b.nu) {
                Some(e)
            } else {
                Some(b)
            }
        }
    })
}

#[derive(Debug, Clone)]
pub struct NuTuning {
    pub nu: f64,
    pub model: OcsvmModel,
    pub evaluations: Vec<NuEvaluation>,
}

/// Picks ν from `grid` by 4-fold CV BAC and retrains on all of `x`.
///
/// A single-value grid is returned as is, without cross-validation.
pub fn tune_nu(x: &[Vec<f64>], grid: &[f64], rng: &mut Rng) -> Result<NuTuning> {
    tune_nu_with(x, grid, rng, &SolverParams::default())
}

pub fn tune_nu_with(x: &[Vec<f64>], grid: &[f64], rng: &mut Rng, solver: &SolverParams) -> Result<NuTuning> {
    match grid {
        [] => Err(Error::invalid("empty ν grid")),
        [nu] => {
            let model = train_ocsvm_with(x, *nu, default_gamma(x), solver)?;
            Ok(NuTuning { nu: *nu, model, evaluations: Vec::new() })
        }
        _ => {
            let folds = TuningFolds::new(x, TUNING_FOLDS, rng)?;
            let evaluations = grid.iter().map(|&nu| evaluate_nu(x, nu, &folds, solver)).collect::<Result<Vec<_>>>()?;
            let nu = select_best(&evaluations)
                .ok_or_else(|| Error::invalid("no ν in the grid is feasible on the tuning folds"))?
                .nu;
            let model = train_ocsvm_with(x, nu, default_gamma(x), solver)?;
            Ok(NuTuning { nu, model, evaluations })
        }
    }
}
