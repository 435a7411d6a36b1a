//! The deployable cascade: feature extraction, per-channel detectors and the
//! weighted naive Bayes classifier, serialized as one versioned JSON document.

use serde::{Deserialize, Serialize};

use crate::dnb::{argmax_label, softmax, DnbModel, Estimator};
use crate::features::{extract_features_with, FeatureConfig, FullFeatureVector};
use crate::occ::{ContaminationVector, DecisionMode, OccConfig, OccEnsemble};
use crate::rng::{self, stream};
use crate::signal::{Dataset, SignalWindow};
use crate::{Error, Result};

pub const FORMAT: &str = "semg-cascade-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CascadeModel {
    pub format: String,
    pub version: u32,
    pub features: FeatureConfig,
    pub window_samples: usize,
    pub sample_rate_hz: f64,
    pub occ: OccEnsemble,
    pub dnb: DnbModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadePrediction {
    /// 1-based class label.
    pub label: usize,
    pub contamination: ContaminationVector,
    pub supports: Vec<f64>,
}

impl CascadeModel {
    /// Trains detectors and the classifier on clean windows.
    pub fn fit(
        ds: &Dataset,
        features: &FeatureConfig,
        occ: &OccConfig,
        estimator: Estimator,
        k_grid: &[usize],
        seed: u64,
    ) -> Result<Self> {
        let xs: Vec<FullFeatureVector> =
            ds.windows().iter().map(|w| extract_features_with(w, features)).collect::<Result<_>>()?;
        let labels = ds.labels();
        let occ = OccEnsemble::fit(&xs, occ, rng::derive_seed(seed, &[stream::FINAL_MODEL, stream::OCC_TUNE]))?;
        let mut r = rng::keyed(seed, &[stream::FINAL_MODEL, stream::GMM]);
        let dnb = DnbModel::fit(&xs, &labels, ds.class_count(), estimator, k_grid, &mut r)?;
        let first = &ds.windows()[0];
        Ok(Self {
            format: FORMAT.into(),
            version: FORMAT_VERSION,
            features: *features,
            window_samples: first.len(),
            sample_rate_hz: first.sample_rate_hz(),
            occ,
            dnb,
        })
    }

    pub fn class_count(&self) -> usize {
        self.dnb.class_count()
    }

    pub fn channel_count(&self) -> usize {
        self.dnb.channel_count()
    }

    pub fn predict_features(&self, x: &FullFeatureVector, mode: DecisionMode) -> Result<CascadePrediction> {
        let r = self.occ.predict(x, mode)?;
        let ls = self.dnb.log_support(x, &r)?;
        Ok(CascadePrediction { label: argmax_label(&ls), contamination: r, supports: softmax(&ls) })
    }

    /// Features, contamination vector and weighted classification of one window.
    pub fn predict_window(&self, w: &SignalWindow, mode: DecisionMode) -> Result<CascadePrediction> {
        if w.channel_count() != self.channel_count() {
            return Err(Error::DimensionMismatch { expected: self.channel_count(), got: w.channel_count() });
        }
        let x = extract_features_with(w, &self.features)?;
        self.predict_features(&x, mode)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        if self.format != FORMAT {
            return Err(Error::invalid(format!("not a cascade model: format {:?}", self.format)));
        }
        if self.version != FORMAT_VERSION {
            return Err(Error::invalid(format!("unsupported model version {}", self.version)));
        }
        if self.occ.channel_count() != self.dnb.channel_count() {
            return Err(Error::invalid("detector and classifier channel counts differ"));
        }
        if !(1..=32).contains(&self.features.levels)
            || !(self.features.ssc_threshold >= 0.0 && self.features.ssc_threshold.is_finite())
        {
            return Err(Error::invalid("feature configuration out of range"));
        }
        if self.window_samples == 0 || !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::invalid("window length and sample rate must be positive"));
        }
        if self.dnb.layout.iter().any(|&d| d != self.features.channel_dim()) {
            return Err(Error::invalid("classifier layout does not match the feature configuration"));
        }
        self.dnb.validate()?;
        self.occ.validate()?;
        for (l, d) in self.occ.detectors.iter().enumerate() {
            if d.channel != l || d.feature_dim != self.features.channel_dim() {
                return Err(Error::invalid(format!("detector {l} does not match the feature layout")));
            }
        }
        Ok(())
    }
}
