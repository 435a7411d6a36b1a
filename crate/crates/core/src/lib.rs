//! Contamination-aware sEMG intent recognition.
//!
//! A per-channel ensemble of one-class SVM detectors estimates how clean each
//! channel of a window is. Those estimates become per-channel exponents of a
//! naive Bayes classifier, so contaminated channels are removed (crisp) or
//! down-weighted (soft) at prediction time without retraining.
//!
//! The crate also carries the surrounding benchmark apparatus: wavelet
//! features, noise injection at a controlled SNR, baseline classifiers,
//! cross-validated experiments and nonparametric statistics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod cascade;
pub mod config;
pub mod contamination;
pub mod dataset_io;
pub mod dnb;
pub mod error;
pub mod eval;
pub mod features;
pub mod occ;
pub mod report;
pub mod rng;
pub mod signal;
pub mod synth;

pub use error::{Error, Result};
