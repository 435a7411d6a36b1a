use crate::{Error, Result};

/// Mean absolute value.
pub fn mav(seq: &[f64]) -> Result<f64> {
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    Ok(seq.iter().map(|v| v.abs()).sum::<f64>() / seq.len() as f64)
}

/// Slope sign changes: interior points whose product of backward and forward
/// differences exceeds `threshold` (strictly).
///
/// Sequences shorter than three samples have no interior point and yield 0.
pub fn ssc(seq: &[f64], threshold: f64) -> f64 {
    if seq.len() < 3 {
        log::warn!("ssc on a sequence of length {}; returning 0", seq.len());
        return 0.0;
    }
    seq.windows(3).filter(|w| (w[1] - w[0]) * (w[1] - w[2]) > threshold).count() as f64
}
