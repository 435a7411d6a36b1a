//! Experiment configuration (JSON). Every key is optional; an empty file or
//! `{}` yields the standard protocol.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::DEFAULT_CODE_SIZE_GRID;
use crate::contamination::ChannelPolicy;
use crate::dnb::{Estimator, DEFAULT_K_GRID};
use crate::eval::{ExperimentSettings, Method, DEFAULT_SNR_GRID};
use crate::features::FeatureConfig;
use crate::occ::{OccConfig, SolverParams, DEFAULT_NU_GRID};
use crate::synth::SynthSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Dataset directory or manifest; relative paths resolve against the config file.
    pub dataset: Option<PathBuf>,
    /// Used when no dataset is given.
    pub synth: Option<SynthSpec>,
    /// 0-based channel indices to keep.
    pub channels: Option<Vec<usize>>,
    pub window_ms: f64,
    /// `"inf"` evaluates on the clean test fold only.
    #[serde(with = "snr_list")]
    pub snr_grid: Vec<f64>,
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub estimator: Estimator,
    pub nu_grid: Vec<f64>,
    pub code_size_grid: Vec<f64>,
    pub k_grid: Vec<usize>,
    pub channel_policy: ChannelPolicy,
    pub ssc_threshold: f64,
    pub standardize_detector_features: bool,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            synth: None,
            channels: None,
            window_ms: 500.0,
            snr_grid: DEFAULT_SNR_GRID.to_vec(),
            folds: 10,
            repeats: 3,
            seed: 0,
            methods: Method::ALL.to_vec(),
            estimator: Estimator::Gaussian,
            nu_grid: DEFAULT_NU_GRID.to_vec(),
            code_size_grid: DEFAULT_CODE_SIZE_GRID.to_vec(),
            k_grid: DEFAULT_K_GRID.to_vec(),
            channel_policy: ChannelPolicy::UpToHalf,
            ssc_threshold: 0.0,
            standardize_detector_features: true,
            output_dir: PathBuf::from("results"),
        }
    }
}

mod snr_list {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Snr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let items: Vec<Snr> =
            v.iter().map(|&x| if x.is_finite() { Snr::Num(x) } else { Snr::Text(format!("{x}")) }).collect();
        items.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Snr>::deserialize(d)?
            .into_iter()
            .map(|item| match item {
                Snr::Num(x) => Ok(x),
                Snr::Text(t) => match t.trim().to_ascii_lowercase().as_str() {
                    "inf" | "+inf" | "infinity" | "clean" => Ok(f64::INFINITY),
                    _ => Err(serde::de::Error::custom(format!("invalid SNR {t:?}"))),
                },
            })
            .collect()
    }
}

fn fail(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.window_ms > 0.0 && self.window_ms.is_finite()) {
            return Err(fail("window_ms must be positive"));
        }
        if self.folds < 2 {
            return Err(fail(format!("folds must be at least 2, got {}", self.folds)));
        }
        if self.repeats < 1 {
            return Err(fail("repeats must be at least 1"));
        }
        if self.snr_grid.is_empty() || self.snr_grid.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
            return Err(fail("snr_grid must be non-empty and contain only numbers"));
        }
        if self.methods.is_empty() {
            return Err(fail("methods must be non-empty"));
        }
        let mut m = self.methods.clone();
        m.sort();
        m.dedup();
        if m.len() != self.methods.len() {
            return Err(fail("methods contain duplicates"));
        }
        if self.nu_grid.is_empty() || self.nu_grid.iter().any(|v| !(*v > 0.0 && *v <= 1.0)) {
            return Err(fail("nu_grid must be non-empty with values in (0, 1]"));
        }
        if self.code_size_grid.is_empty() || self.code_size_grid.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(fail("code_size_grid must be non-empty and positive"));
        }
        if self.k_grid.is_empty() || self.k_grid.contains(&0) {
            return Err(fail("k_grid must be non-empty and positive"));
        }
        if let Some(ch) = &self.channels {
            if ch.is_empty() {
                return Err(fail("channels must not be empty"));
            }
        }
        if let ChannelPolicy::Fixed(0) = self.channel_policy {
            return Err(fail("fixed channel policy needs at least one channel"));
        }
        if !self.ssc_threshold.is_finite() || self.ssc_threshold < 0.0 {
            return Err(fail("ssc_threshold must be a non-negative number"));
        }
        if self.dataset.is_some() && self.synth.is_some() {
            return Err(fail("dataset and synth are mutually exclusive"));
        }
        if let Some(s) = &self.synth {
            s.validate().map_err(|e| fail(format!("synth: {e}")))?;
        }
        Ok(())
    }

    pub fn settings(&self) -> ExperimentSettings {
        ExperimentSettings {
            features: FeatureConfig { ssc_threshold: self.ssc_threshold, ..FeatureConfig::default() },
            folds: self.folds,
            repeats: self.repeats,
            seed: self.seed,
            snr_grid: self.snr_grid.clone(),
            methods: self.methods.clone(),
            estimator: self.estimator,
            occ: OccConfig {
                nu_grid: self.nu_grid.clone(),
                standardize: self.standardize_detector_features,
                solver: SolverParams::default(),
            },
            k_grid: self.k_grid.clone(),
            code_size_grid: self.code_size_grid.clone(),
            channel_policy: self.channel_policy,
        }
    }
}

/// Parses and validates a config; a blank document gives the defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = if text.trim().is_empty() {
        ExperimentConfig::default()
    } else {
        serde_json::from_str(text).map_err(|e| fail(e.to_string()))?
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = parse_config(&text)?;
    let base = path.parent().unwrap_or(Path::new(""));
    if let Some(d) = &cfg.dataset {
        if d.is_relative() {
            cfg.dataset = Some(base.join(d));
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = parse_config("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(parse_config("{}").unwrap(), c);
        assert_eq!(c.window_ms, 500.0);
        assert_eq!((c.folds, c.repeats), (10, 3));
        assert_eq!(c.snr_grid, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 10.0, 12.0]);
        assert_eq!(c.nu_grid.len(), 10);
        assert!((c.nu_grid[9] - 1.0).abs() < 1e-12);
        assert_eq!(c.k_grid, vec![1, 3, 5, 7]);
        assert_eq!(c.code_size_grid, vec![2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn overrides() {
        let c = parse_config(r#"{"snr_grid": [0, 6], "methods": ["B", "NBS"], "estimator": "NBGMT"}"#).unwrap();
        assert_eq!(c.snr_grid, vec![0.0, 6.0]);
        assert_eq!(c.methods, vec![Method::B, Method::NBS]);
        assert_eq!(c.estimator, Estimator::GaussianMixture);
        let c = parse_config(r#"{"channel_policy": {"type": "fixed", "value": 2}}"#).unwrap();
        assert_eq!(c.channel_policy, ChannelPolicy::Fixed(2));
        let c = parse_config(r#"{"snr_grid": [3, "inf"]}"#).unwrap();
        assert_eq!(c.snr_grid, vec![3.0, f64::INFINITY]);
        let back = parse_config(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejections() {
        for bad in [
            r#"{"folds": 1}"#,
            r#"{"snr_grid": []}"#,
            r#"{"snr_grid": ["loud"]}"#,
            r#"{"snr_grid": ["-inf"]}"#,
            r#"{"methods": []}"#,
            r#"{"nu_grid": [0.0]}"#,
            r#"{"k_grid": [0]}"#,
            r#"{"unknown": 1}"#,
            r#"{"methods": ["B", "B"]}"#,
            r#"{"methods": ["XX"]}"#,
            r#"{"dataset": "d", "synth": {}}"#,
            "not json",
        ] {
            assert!(matches!(parse_config(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn relative_dataset_resolves_against_config() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"dataset": "data"}"#).unwrap();
        assert_eq!(load_config(&p).unwrap().dataset.unwrap(), dir.path().join("data"));
    }
}
