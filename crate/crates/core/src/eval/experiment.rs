use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{balanced_accuracy, cohens_kappa, micro_f1, ConfusionMatrix};
use super::records::{Method, MetricRecord};
use crate::baselines::{tune_ecoc, EcocModel, DEFAULT_CODE_SIZE_GRID};
use crate::contamination::{contaminate_window, ChannelPolicy};
use crate::dnb::{argmax_label, DnbModel, Estimator, DEFAULT_K_GRID};
use crate::features::{extract_features_with, FeatureConfig, FullFeatureVector};
use crate::occ::{ContaminationVector, DecisionMode, OccConfig, OccEnsemble};
use crate::rng::{self, stream};
use crate::signal::{stratified_split, Dataset, Split};
use crate::{Error, Result};

pub const DEFAULT_SNR_GRID: [f64; 9] = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 10.0, 12.0];

/// Everything `run_experiment` needs besides the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSettings {
    pub features: FeatureConfig,
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    /// `f64::INFINITY` evaluates on the clean fold only.
    pub snr_grid: Vec<f64>,
    pub methods: Vec<Method>,
    pub estimator: Estimator,
    pub occ: OccConfig,
    pub k_grid: Vec<usize>,
    pub code_size_grid: Vec<f64>,
    pub channel_policy: ChannelPolicy,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            features: FeatureConfig::default(),
            folds: 10,
            repeats: 3,
            seed: 0,
            snr_grid: DEFAULT_SNR_GRID.to_vec(),
            methods: Method::ALL.to_vec(),
            estimator: Estimator::Gaussian,
            occ: OccConfig::default(),
            k_grid: DEFAULT_K_GRID.to_vec(),
            code_size_grid: DEFAULT_CODE_SIZE_GRID.to_vec(),
            channel_policy: ChannelPolicy::default(),
        }
    }
}

/// Models fitted on one clean training fold.
#[derive(Debug, Clone)]
pub struct SplitModels {
    pub dnb: DnbModel,
    pub occ: Option<OccEnsemble>,
    pub ecoc: Option<EcocModel>,
}

pub fn fit_split_models(
    xs: &[FullFeatureVector],
    labels: &[usize],
    class_count: usize,
    settings: &ExperimentSettings,
    keys: &[u64],
) -> Result<SplitModels> {
    let wants = |m: Method| settings.methods.contains(&m);
    let with = |s: u64| [keys, &[s]].concat();

    let mut gmm_rng = rng::keyed(settings.seed, &with(stream::GMM));
    let dnb = DnbModel::fit(xs, labels, class_count, settings.estimator, &settings.k_grid, &mut gmm_rng)?;
    let occ = if wants(Method::NBH) || wants(Method::NBS) {
        Some(OccEnsemble::fit(xs, &settings.occ, rng::derive_seed(settings.seed, &with(stream::OCC_TUNE)))?)
    } else {
        None
    };
    let ecoc = if wants(Method::EC) {
        let mut r = rng::keyed(settings.seed, &with(stream::ECOC));
        Some(tune_ecoc(xs, labels, class_count, &settings.code_size_grid, &mut r)?)
    } else {
        None
    };
    Ok(SplitModels { dnb, occ, ecoc })
}

impl SplitModels {
    /// Predicted labels for `x`, one per requested method.
    pub fn predict(&self, x: &FullFeatureVector, methods: &[Method]) -> Result<Vec<usize>> {
        let ll = self.dnb.channel_log_likelihoods(x)?;
        let occ = || self.occ.as_ref().ok_or_else(|| Error::invalid("detectors were not fitted"));
        methods
            .iter()
            .map(|m| match m {
                Method::B => Ok(argmax_label(&self.dnb.combine(&ll, &ContaminationVector::clean(x.channel_count()))?)),
                Method::NBH => Ok(argmax_label(&self.dnb.combine(&ll, &occ()?.predict(x, DecisionMode::Crisp)?)?)),
                Method::NBS => Ok(argmax_label(&self.dnb.combine(&ll, &occ()?.predict(x, DecisionMode::Soft)?)?)),
                Method::EC => self.ecoc.as_ref().ok_or_else(|| Error::invalid("ECOC was not fitted"))?.predict(x),
            })
            .collect()
    }
}

fn run_split(
    ds: &Dataset,
    clean: &[FullFeatureVector],
    labels: &[usize],
    split: &Split,
    settings: &ExperimentSettings,
) -> Result<Vec<MetricRecord>> {
    let m = ds.class_count();
    let keys = [split.repeat as u64, split.fold as u64];
    let tx: Vec<FullFeatureVector> = split.train.iter().map(|&i| clean[i].clone()).collect();
    let ty: Vec<usize> = split.train.iter().map(|&i| labels[i]).collect();
    let models = fit_split_models(&tx, &ty, m, settings, &keys)?;

    let clean_pred =
        split.test.iter().map(|&i| models.predict(&clean[i], &settings.methods)).collect::<Result<Vec<_>>>()?;

    let mut out = Vec::with_capacity(settings.snr_grid.len() * settings.methods.len());
    for (s, &snr) in settings.snr_grid.iter().enumerate() {
        let mut truth: Vec<usize> = split.test.iter().map(|&i| labels[i]).collect();
        let mut pred = clean_pred.clone();
        if snr.is_finite() {
            for &i in &split.test {
                let mut r = rng::keyed(
                    settings.seed,
                    &[stream::CONTAMINATE, split.repeat as u64, split.fold as u64, s as u64, i as u64],
                );
                let (noisy, _) = contaminate_window(&ds.windows()[i], snr, &mut r, settings.channel_policy);
                let x = extract_features_with(&noisy, &settings.features)?;
                pred.push(models.predict(&x, &settings.methods)?);
                truth.push(labels[i]);
            }
        }
        for (k, &method) in settings.methods.iter().enumerate() {
            let p: Vec<usize> = pred.iter().map(|row| row[k]).collect();
            let cm = ConfusionMatrix::from_labels(&truth, &p, m);
            out.push(MetricRecord {
                method,
                snr_db: snr,
                fold: split.fold,
                repeat: split.repeat,
                bac: balanced_accuracy(&cm),
                kappa: cohens_kappa(&cm),
                micro_f1: micro_f1(&cm),
            });
        }
    }
    Ok(out)
}

/// Repeated stratified CV; every test fold is scored clean plus one noisy copy
/// of each window per SNR. Records come back ordered by (repeat, fold, SNR, method).
pub fn run_experiment(ds: &Dataset, settings: &ExperimentSettings) -> Result<Vec<MetricRecord>> {
    if settings.methods.is_empty() || settings.snr_grid.is_empty() {
        return Err(Error::invalid("methods and SNR grid must be non-empty"));
    }
    let labels = ds.labels();
    let clean =
        ds.windows().par_iter().map(|w| extract_features_with(w, &settings.features)).collect::<Result<Vec<_>>>()?;
    let splits = stratified_split(ds, settings.folds, settings.repeats, rng::derive_seed(settings.seed, &[]))?;
    let per_split = splits
        .par_iter()
        .map(|split| {
            run_split(ds, &clean, &labels, split, settings).map_err(|e| Error::Split {
                fold: split.fold,
                repeat: split.repeat,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_split.into_iter().flatten().collect())
}
