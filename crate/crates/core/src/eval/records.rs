use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::Error;

/// Compared classification methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    /// Plain naive Bayes on every channel.
    B,
    /// Error-correcting output codes over binary naive Bayes learners.
    EC,
    /// Dynamic naive Bayes, crisp contamination vector.
    NBH,
    /// Dynamic naive Bayes, soft contamination vector.
    NBS,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::B, Method::EC, Method::NBH, Method::NBS];

    pub fn name(self) -> &'static str {
        match self {
            Method::B => "B",
            Method::EC => "EC",
            Method::NBH => "NBH",
            Method::NBS => "NBS",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| Error::invalid(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Bac,
    Kappa,
    F1,
}

impl Criterion {
    pub const ALL: [Criterion; 3] = [Criterion::Bac, Criterion::Kappa, Criterion::F1];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Bac => "bac",
            Criterion::Kappa => "kappa",
            Criterion::F1 => "f1",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Criterion::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown criterion {s:?}")))
    }
}

/// Quality of one method on one test fold at one SNR. `snr_db` is infinite
/// for a clean-only evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub method: Method,
    pub snr_db: f64,
    pub fold: usize,
    pub repeat: usize,
    pub bac: f64,
    pub kappa: f64,
    pub micro_f1: f64,
}

impl MetricRecord {
    pub fn value(&self, c: Criterion) -> f64 {
        match c {
            Criterion::Bac => self.bac,
            Criterion::Kappa => self.kappa,
            Criterion::F1 => self.micro_f1,
        }
    }

    /// Long-format rows, one per criterion.
    pub fn rows(&self) -> impl Iterator<Item = ResultRow> + '_ {
        Criterion::ALL.into_iter().map(move |criterion| ResultRow {
            method: self.method,
            snr_db: self.snr_db,
            criterion,
            fold: self.fold,
            repeat: self.repeat,
            value: self.value(criterion),
        })
    }
}

/// One line of the results CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: Method,
    pub snr_db: f64,
    pub criterion: Criterion,
    pub fold: usize,
    pub repeat: usize,
    pub value: f64,
}

pub fn to_rows(records: &[MetricRecord]) -> Vec<ResultRow> {
    records.iter().flat_map(MetricRecord::rows).collect()
}
