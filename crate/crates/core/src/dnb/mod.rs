//! Naive Bayes with per-channel exponents (dynamic naive Bayes).
//!
//! The classifier scores class `j` as
//! `log p_j + Σ_l r_l · Σ_i log P(x_l^(i) | j)`, so a channel with `r_l = 0`
//! is removed and `0 < r_l < 1` down-weights it. Densities are estimated once
//! from the training set; changing `r` never refits anything.

mod gaussian;
mod gmm;

use serde::{Deserialize, Serialize};

pub use gaussian::{
    fit_gaussian, fit_priors, gaussian_log_pdf, log_density_floor, variance_floors, ClassPrior, GaussianFeatureModel,
    DENSITY_FLOOR,
};
pub use gmm::{
    fit_gmm, fit_gmm_feature, kmeans_pp_init, Component, EmFit, GmmFeatureModel, Mixture1d, DEFAULT_K_GRID,
    EM_MAX_ITERATIONS, EM_TOLERANCE,
};

use crate::eval::balanced_accuracy_labels;
use crate::features::FullFeatureVector;
use crate::occ::ContaminationVector;
use crate::rng::{self, Rng};
use crate::signal::stratified_split_labels;
use crate::{Error, Result};

/// Base density estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Estimator {
    /// One normal density per feature (NBG).
    #[serde(rename = "NBG")]
    Gaussian,
    /// Gaussian mixture per feature (NBGMT), component count tuned by CV.
    #[serde(rename = "NBGMT")]
    GaussianMixture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Densities {
    Gaussian(GaussianFeatureModel),
    Gmm(GmmFeatureModel),
}

impl Densities {
    fn log_pdf(&self, class: usize, feature: usize, x: f64) -> f64 {
        match self {
            Densities::Gaussian(g) => g.log_pdf(class, feature, x),
            Densities::Gmm(m) => m.log_pdf(class, feature, x),
        }
    }

    fn class_count(&self) -> usize {
        match self {
            Densities::Gaussian(g) => g.mean.len(),
            Densities::Gmm(m) => m.mixtures.len(),
        }
    }

    /// Number of per-class density records (one per feature).
    pub fn records_per_class(&self) -> usize {
        match self {
            Densities::Gaussian(g) => g.mean.first().map_or(0, Vec::len),
            Densities::Gmm(m) => m.mixtures.first().map_or(0, Vec::len),
        }
    }

    fn select(&self, keep: &[usize]) -> Self {
        let pick = |row: &Vec<f64>| keep.iter().map(|&k| row[k]).collect::<Vec<_>>();
        match self {
            Densities::Gaussian(g) => Densities::Gaussian(GaussianFeatureModel {
                mean: g.mean.iter().map(pick).collect(),
                var: g.var.iter().map(pick).collect(),
                var_floor: pick(&g.var_floor),
            }),
            Densities::Gmm(m) => Densities::Gmm(GmmFeatureModel {
                k: m.k,
                mixtures: m.mixtures.iter().map(|row| keep.iter().map(|&k| row[k].clone()).collect()).collect(),
                var_floor: pick(&m.var_floor),
            }),
        }
    }
}

/// Trained classifier ψ(x, r).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DnbModel {
    pub priors: ClassPrior,
    pub densities: Densities,
    /// Features per channel, `d_l`.
    pub layout: Vec<usize>,
}

fn flatten_all(xs: &[FullFeatureVector]) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let layout = xs.first().map(FullFeatureVector::dims).ok_or_else(|| Error::invalid("no training vectors"))?;
    let mut rows = Vec::with_capacity(xs.len());
    for x in xs {
        if x.dims() != layout {
            return Err(Error::invalid("feature vectors differ in channel layout"));
        }
        rows.push(x.flatten());
    }
    Ok((rows, layout))
}

impl DnbModel {
    /// NBG: Gaussian densities.
    pub fn fit_gaussian(xs: &[FullFeatureVector], labels: &[usize], class_count: usize) -> Result<Self> {
        let (rows, layout) = flatten_all(xs)?;
        let priors = fit_priors(labels, class_count)?;
        let densities = Densities::Gaussian(fit_gaussian(&rows, labels, class_count)?);
        Ok(Self { priors, densities, layout })
    }

    /// NBGMT with a fixed component count.
    pub fn fit_gmm(
        xs: &[FullFeatureVector],
        labels: &[usize],
        class_count: usize,
        k: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        let (rows, layout) = flatten_all(xs)?;
        let priors = fit_priors(labels, class_count)?;
        let densities = Densities::Gmm(fit_gmm(&rows, labels, class_count, k, rng)?);
        Ok(Self { priors, densities, layout })
    }

    /// Fits either estimator; for mixtures `k_grid` is searched by CV first.
    pub fn fit(
        xs: &[FullFeatureVector],
        labels: &[usize],
        class_count: usize,
        estimator: Estimator,
        k_grid: &[usize],
        rng: &mut Rng,
    ) -> Result<Self> {
        match estimator {
            Estimator::Gaussian => Self::fit_gaussian(xs, labels, class_count),
            Estimator::GaussianMixture => {
                let k = tune_gmm_components(xs, labels, class_count, k_grid, rng)?;
                Self::fit_gmm(xs, labels, class_count, k, rng)
            }
        }
    }

    pub fn class_count(&self) -> usize {
        self.priors.class_count()
    }

    pub fn channel_count(&self) -> usize {
        self.layout.len()
    }

    /// Structural consistency of a deserialized model.
    pub fn validate(&self) -> Result<()> {
        let m = self.priors.class_count();
        let d: usize = self.layout.iter().sum();
        if m == 0 || self.densities.class_count() != m {
            return Err(Error::invalid("class count differs between priors and densities"));
        }
        if self.priors.p.iter().any(|p| !(*p > 0.0 && *p <= 1.0)) {
            return Err(Error::invalid("class priors must lie in (0, 1]"));
        }
        let ok = match &self.densities {
            Densities::Gaussian(g) => {
                g.var_floor.len() == d && g.mean.iter().chain(&g.var).all(|r| r.len() == d) && g.var.len() == m
            }
            Densities::Gmm(g) => {
                g.var_floor.len() == d
                    && g.mixtures.iter().all(|r| r.len() == d && r.iter().all(|mx| !mx.components.is_empty()))
            }
        };
        if !ok {
            return Err(Error::invalid("density tables do not match the channel layout"));
        }
        Ok(())
    }

    fn check(&self, x: &FullFeatureVector) -> Result<()> {
        if x.channel_count() != self.layout.len() {
            return Err(Error::DimensionMismatch { expected: self.layout.len(), got: x.channel_count() });
        }
        for (xl, &d) in x.channels.iter().zip(&self.layout) {
            if xl.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: xl.len() });
            }
        }
        Ok(())
    }

    /// `Σ_i log P(x_l^(i) | j)` for every class `j` (rows) and channel `l` (columns),
    /// each density floored at [`DENSITY_FLOOR`].
    pub fn channel_log_likelihoods(&self, x: &FullFeatureVector) -> Result<Vec<Vec<f64>>> {
        self.check(x)?;
        let floor = log_density_floor();
        Ok((0..self.class_count())
            .map(|j| {
                let mut offset = 0;
                x.channels
                    .iter()
                    .map(|xl| {
                        let s = xl
                            .iter()
                            .enumerate()
                            .map(|(i, &v)| self.densities.log_pdf(j, offset + i, v).max(floor))
                            .sum();
                        offset += xl.len();
                        s
                    })
                    .collect()
            })
            .collect())
    }

    /// Combines precomputed channel log-likelihoods with weights `r`.
    pub fn combine(&self, channel_ll: &[Vec<f64>], r: &ContaminationVector) -> Result<Vec<f64>> {
        if r.len() != self.layout.len() {
            return Err(Error::DimensionMismatch { expected: self.layout.len(), got: r.len() });
        }
        Ok(channel_ll
            .iter()
            .zip(&self.priors.p)
            .map(|(ll, &p)| p.ln() + ll.iter().zip(r.as_slice()).map(|(v, w)| w * v).sum::<f64>())
            .collect())
    }

    /// Weighted log-joint `log p_j + Σ_l r_l Σ_i log P(x_l^(i) | j)`.
    pub fn log_support(&self, x: &FullFeatureVector, r: &ContaminationVector) -> Result<Vec<f64>> {
        let ll = self.channel_log_likelihoods(x)?;
        self.combine(&ll, r)
    }

    pub fn supports(&self, x: &FullFeatureVector, r: &ContaminationVector) -> Result<Vec<f64>> {
        Ok(softmax(&self.log_support(x, r)?))
    }

    pub fn predict(&self, x: &FullFeatureVector, r: &ContaminationVector) -> Result<usize> {
        Ok(argmax_label(&self.log_support(x, r)?))
    }

    /// Model over the remaining channels after deleting channel `l`.
    pub fn without_channel(&self, l: usize) -> Result<Self> {
        if l >= self.layout.len() {
            return Err(Error::ChannelOutOfRange { index: l, channels: self.layout.len() });
        }
        let start: usize = self.layout[..l].iter().sum();
        let end = start + self.layout[l];
        let total: usize = self.layout.iter().sum();
        let keep: Vec<usize> = (0..total).filter(|k| *k < start || *k >= end).collect();
        let mut layout = self.layout.clone();
        layout.remove(l);
        Ok(Self { priors: self.priors.clone(), densities: self.densities.select(&keep), layout })
    }
}

/// Normalized supports; all `-inf` inputs give a uniform vector.
pub fn softmax(log_support: &[f64]) -> Vec<f64> {
    let m = log_support.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m.is_nan() {
        log::warn!("all log-supports are -inf; returning uniform supports");
        return vec![1.0 / log_support.len() as f64; log_support.len()];
    }
    let e: Vec<f64> = log_support.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// 1-based label of the largest value; ties go to the smallest class.
pub fn argmax_label(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = j;
        }
    }
    best + 1
}

pub fn log_support(m: &DnbModel, x: &FullFeatureVector, r: &ContaminationVector) -> Result<Vec<f64>> {
    m.log_support(x, r)
}

pub fn supports(m: &DnbModel, x: &FullFeatureVector, r: &ContaminationVector) -> Result<Vec<f64>> {
    m.supports(x, r)
}

pub fn predict(m: &DnbModel, x: &FullFeatureVector, r: &ContaminationVector) -> Result<usize> {
    m.predict(x, r)
}

/// Global mixture size by 4-fold CV balanced accuracy of the plain classifier
/// (`r = 1`); ties go to the smaller `k`.
pub fn tune_gmm_components(
    xs: &[FullFeatureVector],
    labels: &[usize],
    class_count: usize,
    grid: &[usize],
    rng: &mut Rng,
) -> Result<usize> {
    match grid {
        [] => Err(Error::invalid("empty component grid")),
        [k] => Ok(*k),
        _ => {
            use rand::Rng as _;
            let splits = stratified_split_labels(labels, 4, 1, rng.random())?;
            let mut best: Option<(usize, f64)> = None;
            for &k in grid {
                let mut total = 0.0;
                for (s, split) in splits.iter().enumerate() {
                    let tx: Vec<FullFeatureVector> = split.train.iter().map(|&i| xs[i].clone()).collect();
                    let ty: Vec<usize> = split.train.iter().map(|&i| labels[i]).collect();
                    let mut fold_rng = rng::keyed(k as u64, &[rng::stream::GMM, s as u64]);
                    let model = DnbModel::fit_gmm(&tx, &ty, class_count, k, &mut fold_rng)?;
                    let r = ContaminationVector::clean(model.channel_count());
                    let truth: Vec<usize> = split.test.iter().map(|&i| labels[i]).collect();
                    let pred = split.test.iter().map(|&i| model.predict(&xs[i], &r)).collect::<Result<Vec<_>>>()?;
                    total += balanced_accuracy_labels(&truth, &pred, class_count);
                }
                let bac = total / splits.len() as f64;
                if best.is_none_or(|(bk, bb)| bac > bb || (bac == bb && k < bk)) {
                    best = Some((k, bac));
                }
            }
            Ok(best.map(|(k, _)| k).expect("grid is non-empty"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand_distr::{Distribution, Normal};

    /// Two classes, two channels of one feature each, with fixed densities.
    fn hand_model() -> DnbModel {
        DnbModel {
            priors: ClassPrior { p: vec![0.5, 0.5] },
            densities: Densities::Gaussian(GaussianFeatureModel {
                mean: vec![vec![0.0, 0.0], vec![1.0, -1.0]],
                var: vec![vec![1.0, 2.0], vec![0.5, 1.0]],
                var_floor: vec![1e-9, 1e-9],
            }),
            layout: vec![1, 1],
        }
    }

    #[test]
    fn all_ones_is_plain_nb_and_zeros_give_priors() {
        let m = hand_model();
        let x = FullFeatureVector::new(vec![vec![0.3], vec![-0.7]]);
        let ls = m.log_support(&x, &ContaminationVector(vec![1.0, 1.0])).unwrap();
        for (j, got) in ls.iter().enumerate() {
            let mut expected = 0.5f64.ln();
            if let Densities::Gaussian(g) = &m.densities {
                expected += gaussian_log_pdf(0.3, g.mean[j][0], g.var[j][0]);
                expected += gaussian_log_pdf(-0.7, g.mean[j][1], g.var[j][1]);
            }
            assert!((got - expected).abs() < 1e-12);
        }
        let zero = ContaminationVector(vec![0.0, 0.0]);
        let ls0 = m.log_support(&x, &zero).unwrap();
        assert!(ls0.iter().all(|v| (v - 0.5f64.ln()).abs() < 1e-15));
        assert_eq!(m.supports(&x, &zero).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn supports_normalize_and_shift_invariant() {
        let s = softmax(&[-3.0, 1.0, 0.5]);
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let t = softmax(&[97.0, 101.0, 100.5]);
        for (a, b) in s.iter().zip(&t) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(softmax(&[f64::NEG_INFINITY; 4]), vec![0.25; 4]);
    }

    #[test]
    fn ties_go_to_first_class() {
        assert_eq!(argmax_label(&[0.0, 0.0]), 1);
        assert_eq!(argmax_label(&[-1.0, 2.0, 2.0]), 2);
    }

    #[test]
    fn symmetric_model_ties_to_class_one() {
        let m = DnbModel {
            priors: ClassPrior { p: vec![0.5, 0.5] },
            densities: Densities::Gaussian(GaussianFeatureModel {
                mean: vec![vec![-1.0], vec![1.0]],
                var: vec![vec![1.0], vec![1.0]],
                var_floor: vec![1e-9],
            }),
            layout: vec![1],
        };
        let x = FullFeatureVector::new(vec![vec![0.0]]);
        assert_eq!(m.predict(&x, &ContaminationVector::clean(1)).unwrap(), 1);
    }

    #[test]
    fn dimension_checks() {
        let m = hand_model();
        let x = FullFeatureVector::new(vec![vec![0.3], vec![-0.7]]);
        assert!(m.log_support(&x, &ContaminationVector(vec![1.0])).is_err());
        let bad = FullFeatureVector::new(vec![vec![0.3, 1.0], vec![-0.7]]);
        assert!(m.log_support(&bad, &ContaminationVector::clean(2)).is_err());
        assert!(m.without_channel(2).is_err());
    }

    fn blobs(n: usize, classes: usize, seed: u64) -> (Vec<FullFeatureVector>, Vec<usize>) {
        let mut rng = seeded(seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..n {
            let c = 1 + i % classes;
            let x = (0..3)
                .map(|l| (0..2).map(|k| 2.0 * c as f64 * (l + k + 1) as f64 + noise.sample(&mut rng)).collect())
                .collect();
            xs.push(FullFeatureVector::new(x));
            ys.push(c);
        }
        (xs, ys)
    }

    #[test]
    fn one_shot_records_and_gmm_k1_matches_gaussian() {
        let (xs, ys) = blobs(90, 3, 1);
        let g = DnbModel::fit_gaussian(&xs, &ys, 3).unwrap();
        assert_eq!(g.densities.records_per_class(), 6);
        let m = DnbModel::fit_gmm(&xs, &ys, 3, 1, &mut seeded(2)).unwrap();
        let r = ContaminationVector(vec![1.0, 0.4, 0.0]);
        for x in &xs {
            let a = g.supports(x, &r).unwrap();
            let b = m.supports(x, &r).unwrap();
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn unimodal_classes_select_one_component() {
        let (xs, ys) = blobs(160, 2, 7);
        let k = tune_gmm_components(&xs, &ys, 2, &DEFAULT_K_GRID, &mut seeded(3)).unwrap();
        assert_eq!(k, 1);
        assert_eq!(tune_gmm_components(&xs, &ys, 2, &[3], &mut seeded(3)).unwrap(), 3);
    }
}
