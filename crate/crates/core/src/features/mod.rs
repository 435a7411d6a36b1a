//! Per-channel wavelet features.
//!
//! Every channel is decomposed with a 3-level db6 transform; MAV and SSC are
//! taken from each of the four coefficient sequences (A3, D3, D2, D1), giving
//! eight features per channel.

mod dwt;
mod stats;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use dwt::{db6_dec_hi, dwt_db6, idwt_db6, WaveletCoefficients, DB6_DEC_LO};
pub use stats::{mav, ssc};

use crate::signal::SignalWindow;
use crate::{Error, Result};

pub const SEQUENCE_NAMES: [&str; 4] = ["A3", "D3", "D2", "D1"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub levels: usize,
    pub ssc_threshold: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { levels: 3, ssc_threshold: 0.0 }
    }
}

impl FeatureConfig {
    /// Features per channel: (MAV, SSC) for the approximation and every detail level.
    pub fn channel_dim(&self) -> usize {
        2 * (self.levels + 1)
    }

    pub fn feature_names(&self, channels: usize) -> Vec<String> {
        let mut seqs = vec![format!("A{}", self.levels)];
        seqs.extend((1..=self.levels).rev().map(|k| format!("D{k}")));
        (1..=channels)
            .flat_map(|l| {
                seqs.iter().flat_map(move |s| ["mav", "ssc"].map(|f| format!("ch{l}_{s}_{f}"))).collect::<Vec<_>>()
            })
            .collect()
    }
}

/// Features of one channel.
pub type ChannelFeatureVector = Vec<f64>;

/// Channel-partitioned feature vector `x = (x_1, ..., x_L)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullFeatureVector {
    pub channels: Vec<ChannelFeatureVector>,
}

impl FullFeatureVector {
    pub fn new(channels: Vec<ChannelFeatureVector>) -> Self {
        Self { channels }
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn channel(&self, l: usize) -> &[f64] {
        &self.channels[l]
    }

    pub fn dims(&self) -> Vec<usize> {
        self.channels.iter().map(Vec::len).collect()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.channels.concat()
    }

    pub fn total_dim(&self) -> usize {
        self.channels.iter().map(Vec::len).sum()
    }
}

pub fn channel_features(signal: &[f64], config: &FeatureConfig) -> Result<ChannelFeatureVector> {
    let coeffs = dwt_db6(signal, config.levels)?;
    let mut out = Vec::with_capacity(config.channel_dim());
    for seq in coeffs.sequences() {
        out.push(mav(seq)?);
        out.push(ssc(seq, config.ssc_threshold));
    }
    Ok(out)
}

pub fn extract_features_with(w: &SignalWindow, config: &FeatureConfig) -> Result<FullFeatureVector> {
    let channels = w.samples().iter().map(|c| channel_features(c, config)).collect::<Result<Vec<_>>>()?;
    Ok(FullFeatureVector::new(channels))
}

pub fn extract_features(w: &SignalWindow) -> Result<FullFeatureVector> {
    extract_features_with(w, &FeatureConfig::default())
}

/// Writes `label, ch{l}_{seq}_{mav|ssc}...` rows.
pub fn write_feature_csv<W: Write>(
    out: W,
    config: &FeatureConfig,
    rows: &[(Option<usize>, FullFeatureVector)],
) -> Result<()> {
    let channels = rows.first().map(|(_, x)| x.channel_count()).unwrap_or(0);
    let mut wtr = csv::Writer::from_writer(out);
    let mut header = vec!["label".to_string()];
    header.extend(config.feature_names(channels));
    wtr.write_record(&header)?;
    for (label, x) in rows {
        if x.channel_count() != channels {
            return Err(Error::DimensionMismatch { expected: channels, got: x.channel_count() });
        }
        let mut rec = vec![label.map(|l| l.to_string()).unwrap_or_default()];
        rec.extend(x.flatten().iter().map(|v| v.to_string()));
        wtr.write_record(&rec)?;
    }
    wtr.flush().map_err(|e| Error::io("feature csv", e))?;
    Ok(())
}
