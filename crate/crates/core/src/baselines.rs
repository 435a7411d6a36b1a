//! Reference classifiers: plain naive Bayes over all channels (B) and
//! error-correcting output codes over binary Gaussian naive Bayes (EC).

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dnb::DnbModel;
use crate::eval::balanced_accuracy_labels;
use crate::features::FullFeatureVector;
use crate::occ::ContaminationVector;
use crate::rng::{self, Rng};
use crate::signal::stratified_split_labels;
use crate::{Error, Result};

pub const DEFAULT_CODE_SIZE_GRID: [f64; 5] = [2.0, 3.0, 4.0, 5.0, 6.0];
pub const CODEBOOK_ATTEMPTS: usize = 1000;

pub fn predict_b(m: &DnbModel, x: &FullFeatureVector) -> Result<usize> {
    m.predict(x, &ContaminationVector::clean(m.channel_count()))
}

pub fn code_length(class_count: usize, code_size: f64) -> usize {
    (code_size * class_count as f64).ceil() as usize
}

fn codebook_valid(cb: &[Vec<u8>]) -> bool {
    let cols = cb[0].len();
    let distinct_rows = (0..cb.len()).all(|i| (i + 1..cb.len()).all(|j| cb[i] != cb[j]));
    let varied_cols = (0..cols).all(|c| cb.iter().any(|r| r[c] != cb[0][c]));
    distinct_rows && varied_cols
}

/// Dense random {0,1} codebook, one row per class.
pub fn build_codebook(class_count: usize, code_size: f64, rng: &mut Rng) -> Result<Vec<Vec<u8>>> {
    if class_count < 2 {
        return Err(Error::invalid("codebooks need at least 2 classes"));
    }
    if !(code_size > 0.0) {
        return Err(Error::invalid(format!("code_size must be positive, got {code_size}")));
    }
    let cols = code_length(class_count, code_size);
    let column = |rng: &mut Rng| -> Option<Vec<u8>> {
        (0..CODEBOOK_ATTEMPTS)
            .map(|_| (0..class_count).map(|_| rng.random_bool(0.5) as u8).collect::<Vec<u8>>())
            .find(|c| c.iter().any(|&b| b != c[0]))
    };
    for _ in 0..CODEBOOK_ATTEMPTS {
        let mut cb = vec![Vec::with_capacity(cols); class_count];
        for _ in 0..cols {
            let c = column(rng).ok_or(Error::NoValidCodebook(CODEBOOK_ATTEMPTS))?;
            for (row, bit) in cb.iter_mut().zip(c) {
                row.push(bit);
            }
        }
        if codebook_valid(&cb) {
            return Ok(cb);
        }
    }
    Err(Error::NoValidCodebook(CODEBOOK_ATTEMPTS))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcocModel {
    pub codebook: Vec<Vec<u8>>,
    /// Binary learner per column; `None` where the relabeled data had one class.
    pub learners: Vec<Option<DnbModel>>,
    pub code_size: f64,
}

impl EcocModel {
    pub fn class_count(&self) -> usize {
        self.codebook.len()
    }

    /// Positive-class probability of every active column.
    pub fn column_probabilities(&self, x: &FullFeatureVector) -> Result<Vec<Option<f64>>> {
        self.learners
            .iter()
            .map(|l| match l {
                Some(m) => Ok(Some(m.supports(x, &ContaminationVector::clean(m.channel_count()))?[1])),
                None => Ok(None),
            })
            .collect()
    }

    /// Class (1-based) whose codeword is nearest in Euclidean distance over active columns.
    pub fn decode(&self, probs: &[Option<f64>]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (j, row) in self.codebook.iter().enumerate() {
            let d: f64 = probs.iter().zip(row).filter_map(|(p, &b)| p.map(|p| (p - b as f64).powi(2))).sum();
            if d < best.1 {
                best = (j, d);
            }
        }
        best.0 + 1
    }

    pub fn predict(&self, x: &FullFeatureVector) -> Result<usize> {
        Ok(self.decode(&self.column_probabilities(x)?))
    }
}

pub fn train_with_codebook(
    xs: &[FullFeatureVector],
    labels: &[usize],
    codebook: Vec<Vec<u8>>,
    code_size: f64,
) -> Result<EcocModel> {
    let cols = codebook.first().map_or(0, Vec::len);
    let learners = (0..cols)
        .into_par_iter()
        .map(|c| {
            let relabeled: Vec<usize> = labels.iter().map(|&y| codebook[y - 1][c] as usize + 1).collect();
            let positives = relabeled.iter().filter(|&&v| v == 2).count();
            let negatives = relabeled.len() - positives;
            if positives < 2 || negatives < 2 {
                log::warn!("codebook column {c} separates too few samples; dropped");
                return Ok(None);
            }
            DnbModel::fit_gaussian(xs, &relabeled, 2).map(Some)
        })
        .collect::<Result<Vec<_>>>()?;
    if learners.iter().all(Option::is_none) {
        return Err(Error::invalid("every codebook column was dropped"));
    }
    Ok(EcocModel { codebook, learners, code_size })
}

pub fn train_ecoc(
    xs: &[FullFeatureVector],
    labels: &[usize],
    class_count: usize,
    code_size: f64,
    rng: &mut Rng,
) -> Result<EcocModel> {
    let cb = build_codebook(class_count, code_size, rng)?;
    train_with_codebook(xs, labels, cb, code_size)
}

/// Picks `code_size` by 4-fold CV balanced accuracy (ties to the smaller value)
/// and refits on all data.
pub fn tune_ecoc(
    xs: &[FullFeatureVector],
    labels: &[usize],
    class_count: usize,
    grid: &[f64],
    rng: &mut Rng,
) -> Result<EcocModel> {
    let chosen = match grid {
        [] => return Err(Error::invalid("empty code_size grid")),
        [c] => *c,
        _ => {
            let tune_seed: u64 = rng.random();
            let splits = stratified_split_labels(labels, 4, 1, tune_seed)?;
            let mut best: Option<(f64, f64)> = None;
            for (g, &cs) in grid.iter().enumerate() {
                let mut total = 0.0;
                for (s, split) in splits.iter().enumerate() {
                    let tx: Vec<FullFeatureVector> = split.train.iter().map(|&i| xs[i].clone()).collect();
                    let ty: Vec<usize> = split.train.iter().map(|&i| labels[i]).collect();
                    let mut r = rng::keyed(tune_seed, &[g as u64, s as u64]);
                    let model = train_ecoc(&tx, &ty, class_count, cs, &mut r)?;
                    let truth: Vec<usize> = split.test.iter().map(|&i| labels[i]).collect();
                    let pred = split.test.iter().map(|&i| model.predict(&xs[i])).collect::<Result<Vec<_>>>()?;
                    total += balanced_accuracy_labels(&truth, &pred, class_count);
                }
                let bac = total / splits.len() as f64;
                if best.is_none_or(|(bc, bb)| bac > bb || (bac == bb && cs < bc)) {
                    best = Some((cs, bac));
                }
            }
            best.expect("grid is non-empty").0
        }
    };
    train_ecoc(xs, labels, class_count, chosen, rng)
}
