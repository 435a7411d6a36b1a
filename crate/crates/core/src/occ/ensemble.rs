use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::calibrate::{fit_calibrator, Calibrator};
use super::svm::{default_gamma, train_ocsvm_with, OcsvmModel, SolverParams};
use super::tuning::{evaluate_nu, select_best, TuningFolds, DEFAULT_NU_GRID, TUNING_FOLDS};
use crate::features::FullFeatureVector;
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DecisionMode {
    /// `r_l ∈ {0, 1}`: a channel is either kept or dropped.
    Crisp,
    /// `r_l ∈ [0, 1]`: calibrated probability that the channel is clean.
    Soft,
}

/// Per-channel cleanliness `r = (r_1, ..., r_L)`; 1 means clean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContaminationVector(pub Vec<f64>);

impl ContaminationVector {
    pub fn clean(channels: usize) -> Self {
        Self(vec![1.0; channels])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Per-feature z-scoring fitted on clean training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let d = x.first().map_or(0, Vec::len);
        let n = x.len().max(1) as f64;
        let mean: Vec<f64> = (0..d).map(|k| x.iter().map(|r| r[k]).sum::<f64>() / n).collect();
        let scale = (0..d)
            .map(|k| {
                let var = x.iter().map(|r| (r[k] - mean[k]).powi(2)).sum::<f64>() / n;
                if var.sqrt() > 1e-12 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn identity(d: usize) -> Self {
        Self { mean: vec![0.0; d], scale: vec![1.0; d] }
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccConfig {
    pub nu_grid: Vec<f64>,
    /// Z-score each feature before the SVM.
    pub standardize: bool,
    pub solver: SolverParams,
}

impl Default for OccConfig {
    fn default() -> Self {
        Self { nu_grid: DEFAULT_NU_GRID.to_vec(), standardize: true, solver: SolverParams::default() }
    }
}

/// Detector φ_l for one channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detector {
    pub channel: usize,
    pub feature_dim: usize,
    pub scaler: Standardizer,
    pub model: OcsvmModel,
    pub calibrator: Calibrator,
}

impl Detector {
    /// Raw decision value `f_l(x_l)`.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.feature_dim {
            return Err(Error::DimensionMismatch { expected: self.feature_dim, got: x.len() });
        }
        Ok(self.model.decision(&self.scaler.transform(x)))
    }

    pub fn predict(&self, x: &[f64], mode: DecisionMode) -> Result<f64> {
        let s = self.score(x)?;
        Ok(match mode {
            DecisionMode::Crisp => {
                if s >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            DecisionMode::Soft => self.calibrator.apply(s),
        })
    }
}

/// Tunes ν, trains the final model on all rows and fits the calibrator on
/// the pooled out-of-fold scores of the selected ν.
pub fn fit_detector(channel: usize, x: &[Vec<f64>], config: &OccConfig, rng: &mut rng::Rng) -> Result<Detector> {
    let feature_dim = x.first().map_or(0, Vec::len);
    let scaler = if config.standardize { Standardizer::fit(x) } else { Standardizer::identity(feature_dim) };
    let z: Vec<Vec<f64>> = x.iter().map(|r| scaler.transform(r)).collect();
    if config.nu_grid.is_empty() {
        return Err(Error::invalid("empty ν grid"));
    }

    let folds = TuningFolds::new(&z, TUNING_FOLDS, rng)?;
    let evaluations =
        config.nu_grid.iter().map(|&nu| evaluate_nu(&z, nu, &folds, &config.solver)).collect::<Result<Vec<_>>>()?;
    let best = select_best(&evaluations)
        .ok_or_else(|| Error::invalid(format!("channel {channel}: no feasible ν on the tuning folds")))?;
    let model = train_ocsvm_with(&z, best.nu, default_gamma(&z), &config.solver)?;
    let (scores, labels): (Vec<f64>, Vec<bool>) = best.scores.iter().copied().unzip();
    let calibrator = fit_calibrator(&scores, &labels)?;
    Ok(Detector { channel, feature_dim, scaler, model, calibrator })
}

/// The ensemble Φ = {φ_1, ..., φ_L}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccEnsemble {
    pub detectors: Vec<Detector>,
}

impl OccEnsemble {
    /// Trains one detector per channel on clean feature vectors. Channels are
    /// independent and trained in parallel; channel `l` draws from the stream
    /// keyed `(seed, l)`.
    pub fn fit(clean: &[FullFeatureVector], config: &OccConfig, seed: u64) -> Result<Self> {
        let l =
            clean.first().map(FullFeatureVector::channel_count).ok_or_else(|| Error::invalid("no training vectors"))?;
        let detectors = (0..l)
            .into_par_iter()
            .map(|ch| {
                let rows: Vec<Vec<f64>> = clean.iter().map(|x| x.channel(ch).to_vec()).collect();
                let mut rng = rng::keyed(seed, &[rng::stream::OCC_TUNE, ch as u64]);
                fit_detector(ch, &rows, config, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { detectors })
    }

    pub fn channel_count(&self) -> usize {
        self.detectors.len()
    }

    /// Structural consistency of a deserialized ensemble.
    pub fn validate(&self) -> Result<()> {
        for d in &self.detectors {
            let m = &d.model;
            let dims_ok = d.scaler.mean.len() == d.feature_dim
                && d.scaler.scale.len() == d.feature_dim
                && m.alphas.len() == m.support_vectors.len()
                && m.support_vectors.iter().all(|sv| sv.len() == d.feature_dim);
            if !dims_ok {
                return Err(Error::invalid(format!("detector {} has inconsistent dimensions", d.channel)));
            }
            let finite = [m.rho, m.gamma, d.calibrator.a, d.calibrator.b].iter().all(|v| v.is_finite())
                && d.scaler.scale.iter().all(|s| *s != 0.0);
            if !finite {
                return Err(Error::invalid(format!("detector {} has non-finite parameters", d.channel)));
            }
        }
        Ok(())
    }

    pub fn predict(&self, x: &FullFeatureVector, mode: DecisionMode) -> Result<ContaminationVector> {
        if x.channel_count() != self.detectors.len() {
            return Err(Error::DimensionMismatch { expected: self.detectors.len(), got: x.channel_count() });
        }
        self.detectors
            .iter()
            .zip(&x.channels)
            .map(|(d, xl)| d.predict(xl, mode))
            .collect::<Result<Vec<_>>>()
            .map(ContaminationVector)
    }
}

pub fn ensemble_predict(e: &OccEnsemble, x: &FullFeatureVector, mode: DecisionMode) -> Result<ContaminationVector> {
    e.predict(x, mode)
}
