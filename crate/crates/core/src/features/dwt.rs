//! Periodized multilevel Daubechies-6 wavelet transform.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Daubechies-6 analysis low-pass filter (12 taps).
pub const DB6_DEC_LO: [f64; 12] = [
    -0.001_077_301_085_308_479_6,
    0.004_777_257_510_945_511,
    0.000_553_842_201_161_496_1,
    -0.031_582_039_317_486_03,
    0.027_522_865_530_305_727,
    0.097_501_605_587_323_04,
    -0.129_766_867_567_261_94,
    -0.226_264_693_965_439_83,
    0.315_250_351_709_197_63,
    0.751_133_908_021_095_4,
    0.494_623_890_398_453_06,
    0.111_540_743_350_109_47,
];

const TAPS: usize = DB6_DEC_LO.len();
const SHIFT: usize = TAPS / 2;

/// Quadrature-mirror high-pass partner of [`DB6_DEC_LO`].
pub fn db6_dec_hi() -> [f64; TAPS] {
    let mut hi = [0.0; TAPS];
    for (k, h) in hi.iter_mut().enumerate() {
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        *h = sign * DB6_DEC_LO[TAPS - 1 - k];
    }
    hi
}

/// Coefficients of a multilevel decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletCoefficients {
    /// Coarsest approximation.
    pub approx: Vec<f64>,
    /// Details ordered coarsest first (level `levels`, ..., level 1).
    pub details: Vec<Vec<f64>>,
    /// Input length at every level, finest first; `lengths[0]` is the signal length.
    pub lengths: Vec<usize>,
}

impl WaveletCoefficients {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    /// Coefficient sequences in feature order: approximation, then details coarse to fine.
    pub fn sequences(&self) -> impl Iterator<Item = &[f64]> {
        std::iter::once(self.approx.as_slice()).chain(self.details.iter().map(|d| d.as_slice()))
    }
}

/// One analysis step. Odd inputs are extended by repeating the last sample.
fn analysis_step(x: &[f64], hi: &[f64; TAPS]) -> (Vec<f64>, Vec<f64>) {
    let padded;
    let x = if x.len() % 2 == 1 {
        padded = x.iter().copied().chain(x.last().copied()).collect::<Vec<_>>();
        &padded[..]
    } else {
        x
    };
    let n = x.len();
    let half = n / 2;
    let mut a = vec![0.0; half];
    let mut d = vec![0.0; half];
    for i in 0..half {
        let (mut sa, mut sd) = (0.0, 0.0);
        for k in 0..TAPS {
            // (2i + SHIFT - k) mod n, kept non-negative.
            let idx = (2 * i + SHIFT + n * TAPS - k) % n;
            sa += DB6_DEC_LO[k] * x[idx];
            sd += hi[k] * x[idx];
        }
        a[i] = sa;
        d[i] = sd;
    }
    (a, d)
}

/// Inverse of [`analysis_step`]; returns `2 * a.len()` samples.
fn synthesis_step(a: &[f64], d: &[f64], hi: &[f64; TAPS]) -> Vec<f64> {
    let n = 2 * a.len();
    let mut x = vec![0.0; n];
    for i in 0..a.len() {
        for k in 0..TAPS {
            let idx = (2 * i + SHIFT + n * TAPS - k) % n;
            x[idx] += DB6_DEC_LO[k] * a[i] + hi[k] * d[i];
        }
    }
    x
}

/// Mallat decomposition with the db6 pair and periodic extension.
///
/// The coefficient count at level `k` is `ceil(N / 2^k)`.
pub fn dwt_db6(signal: &[f64], levels: usize) -> Result<WaveletCoefficients> {
    if levels == 0 || signal.len() < (1usize << levels.min(63)) {
        return Err(Error::SignalTooShort { len: signal.len(), levels });
    }
    let hi = db6_dec_hi();
    let mut lengths = vec![signal.len()];
    let mut details = Vec::with_capacity(levels);
    let mut approx = signal.to_vec();
    for _ in 0..levels {
        let (a, d) = analysis_step(&approx, &hi);
        lengths.push(a.len());
        details.push(d);
        approx = a;
    }
    lengths.pop();
    details.reverse();
    Ok(WaveletCoefficients { approx, details, lengths })
}

/// Reconstructs the signal from [`dwt_db6`] output.
pub fn idwt_db6(coeffs: &WaveletCoefficients) -> Result<Vec<f64>> {
    let levels = coeffs.levels();
    if coeffs.lengths.len() != levels {
        return Err(Error::invalid("coefficient length table does not match level count"));
    }
    let hi = db6_dec_hi();
    let mut approx = coeffs.approx.clone();
    for (step, detail) in coeffs.details.iter().enumerate() {
        if detail.len() != approx.len() {
            return Err(Error::DimensionMismatch { expected: approx.len(), got: detail.len() });
        }
        let target = coeffs.lengths[levels - 1 - step];
        let mut x = synthesis_step(&approx, detail, &hi);
        x.truncate(target);
        approx = x;
    }
    Ok(approx)
}
