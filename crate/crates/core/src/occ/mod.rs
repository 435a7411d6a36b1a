//! Per-channel one-class detectors Φ = {φ_1, ..., φ_L}.
//!
//! Each detector is an RBF one-class SVM trained only on clean windows of its
//! channel. Crisp predictions are `1{f_l(x_l) ≥ 0}`; soft predictions pass the
//! decision value through a logistic calibrator.

mod calibrate;
mod ensemble;
mod svm;
mod tuning;

pub use calibrate::{fit_calibrator, sigmoid, Calibrator};
pub use ensemble::{
    ensemble_predict, fit_detector, ContaminationVector, DecisionMode, Detector, OccConfig, OccEnsemble, Standardizer,
};
pub use svm::{default_gamma, train_ocsvm, train_ocsvm_with, OcsvmModel, SolverParams};
pub use tuning::{
    bounds_with_margin, evaluate_nu, generate_uniform_outliers, select_best, tune_nu, tune_nu_with, NuEvaluation,
    NuTuning, TuningFolds, DEFAULT_NU_GRID, OUTLIER_MARGIN, TUNING_FOLDS,
};
