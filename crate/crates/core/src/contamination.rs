//! Noise injection at a requested signal-to-noise ratio.
//!
//! SNR is the power ratio, in dB, between the clean window channel and the
//! injected component `out - in`, both measured over the window. Every
//! generator calibrates its amplitude on the realized noise, so the measured
//! SNR matches the request rather than only its expectation.

use std::f64::consts::PI;

use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::rng::Rng;
use crate::signal::SignalWindow;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NoiseKind {
    PowerLine,
    Attenuation,
    GaussianNoise,
    Clipping,
    BaselineWander,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 5] = [
        NoiseKind::PowerLine,
        NoiseKind::Attenuation,
        NoiseKind::GaussianNoise,
        NoiseKind::Clipping,
        NoiseKind::BaselineWander,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub snr_db: f64,
    pub rng_seed: u64,
}

/// How many channels of a window get contaminated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "value")]
pub enum ChannelPolicy {
    /// Uniform count in `1..=max(1, L/2)`.
    #[default]
    UpToHalf,
    /// Exactly this many channels (capped at `L`).
    Fixed(usize),
    /// Every channel.
    All,
}

impl ChannelPolicy {
    fn count(&self, l: usize, rng: &mut Rng) -> usize {
        match *self {
            ChannelPolicy::UpToHalf => rng.random_range(1..=(l / 2).max(1)),
            ChannelPolicy::Fixed(k) => k.clamp(1, l),
            ChannelPolicy::All => l,
        }
    }
}

/// Ground truth for one contaminated window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContaminationTruth {
    pub kind: NoiseKind,
    pub snr_db: f64,
    /// Affected channel indices, ascending.
    pub affected: Vec<usize>,
}

/// Mean of squared samples.
pub fn signal_power(seq: &[f64]) -> f64 {
    if seq.is_empty() {
        return 0.0;
    }
    seq.iter().map(|v| v * v).sum::<f64>() / seq.len() as f64
}

/// `10 log10(P_clean / P_(noisy - clean))`; infinite when nothing was added.
pub fn measured_snr_db(clean: &[f64], noisy: &[f64]) -> f64 {
    let diff: Vec<f64> = noisy.iter().zip(clean).map(|(o, i)| o - i).collect();
    10.0 * (signal_power(clean) / signal_power(&diff)).log10()
}

fn noise_power_for(seq: &[f64], snr_db: f64) -> Result<f64> {
    let p = signal_power(seq);
    if !(p > 0.0) {
        return Err(Error::ZeroPower);
    }
    Ok(p / 10f64.powf(snr_db / 10.0))
}

/// Adds `noise` rescaled so its power is exactly `target_power`.
fn add_scaled(seq: &[f64], noise: &[f64], target_power: f64) -> Vec<f64> {
    let pn = signal_power(noise);
    let scale = if pn > 0.0 { (target_power / pn).sqrt() } else { 0.0 };
    seq.iter().zip(noise).map(|(s, n)| s + scale * n).collect()
}

fn add_sinusoid(seq: &[f64], fs: f64, snr_db: f64, freq_range: (f64, f64), rng: &mut Rng) -> Result<Vec<f64>> {
    let target = noise_power_for(seq, snr_db)?;
    let f = rng.random_range(freq_range.0..=freq_range.1);
    let phase = rng.random_range(0.0..2.0 * PI);
    let wave: Vec<f64> = (0..seq.len()).map(|t| (2.0 * PI * f * t as f64 / fs + phase).sin()).collect();
    Ok(add_scaled(seq, &wave, target))
}

/// Mains interference with frequency drawn from 48-52 Hz.
pub fn add_powerline(seq: &[f64], fs: f64, snr_db: f64, rng: &mut Rng) -> Result<Vec<f64>> {
    add_sinusoid(seq, fs, snr_db, (48.0, 52.0), rng)
}

/// Low-frequency drift with frequency drawn from 0.5-1.5 Hz.
pub fn add_baseline_wander(seq: &[f64], fs: f64, snr_db: f64, rng: &mut Rng) -> Result<Vec<f64>> {
    add_sinusoid(seq, fs, snr_db, (0.5, 1.5), rng)
}

/// Amplitude factor `1 - 10^(-snr/20)` clamped to `[0, 1]`.
pub fn attenuation_factor(snr_db: f64) -> f64 {
    (1.0 - 10f64.powf(-snr_db / 20.0)).clamp(0.0, 1.0)
}

/// Electrode losing contact: the signal is scaled down so the removed part has the requested SNR.
pub fn attenuate(seq: &[f64], snr_db: f64) -> Result<Vec<f64>> {
    if !(signal_power(seq) > 0.0) {
        return Err(Error::ZeroPower);
    }
    let a = attenuation_factor(snr_db);
    Ok(seq.iter().map(|v| a * v).collect())
}

/// White Gaussian noise rescaled to the exact requested power.
pub fn add_gaussian(seq: &[f64], snr_db: f64, rng: &mut Rng) -> Result<Vec<f64>> {
    let target = noise_power_for(seq, snr_db)?;
    let noise: Vec<f64> = (0..seq.len()).map(|_| StandardNormal.sample(rng)).collect();
    Ok(add_scaled(seq, &noise, target))
}

fn soft_clip(seq: &[f64], c: f64) -> Vec<f64> {
    seq.iter().map(|v| c * (v / c).tanh()).collect()
}

fn clip_snr(seq: &[f64], p: f64, c: f64) -> f64 {
    let pd = seq.iter().map(|v| {
        let d = v - c * (v / c).tanh();
        d * d
    });
    10.0 * (p / (pd.sum::<f64>() / seq.len() as f64)).log10()
}

/// Tolerance of the clipping calibration, in dB.
pub const CLIP_TOLERANCE_DB: f64 = 0.05;

/// Soft saturation `c * tanh(x / c)` with the knee `c` calibrated by bisection.
///
/// Returns the clipped sequence and the knee. Distortion shrinks monotonically
/// as `c` grows, reaching 0 dB only in the limit `c -> 0`, so every request
/// above 0 dB is attainable; a request of exactly 0 dB is met within the
/// tolerance.
pub fn clip_nonlinear_with_knee(seq: &[f64], snr_db: f64) -> Result<(Vec<f64>, f64)> {
    let p = signal_power(seq);
    if !(p > 0.0) {
        return Err(Error::ZeroPower);
    }
    let peak = seq.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = seq.iter().copied().fold(f64::INFINITY, f64::min);
    let max = seq.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Err(Error::invalid("clipping needs a non-constant signal"));
    }
    if snr_db.is_infinite() && snr_db > 0.0 {
        return Ok((seq.to_vec(), f64::INFINITY));
    }
    if !(snr_db > -CLIP_TOLERANCE_DB) || snr_db.is_nan() {
        return Err(Error::UnreachableSnr { requested: snr_db, min: 0.0, max: f64::INFINITY });
    }

    // Bracket in log(c): snr(lo) <= target <= snr(hi).
    let mut lo = (peak * 1e-12).ln();
    let mut hi = peak.ln();
    let s_lo = clip_snr(seq, p, lo.exp());
    if s_lo >= snr_db {
        if s_lo - snr_db <= CLIP_TOLERANCE_DB {
            let c = lo.exp();
            return Ok((soft_clip(seq, c), c));
        }
        return Err(Error::UnreachableSnr { requested: snr_db, min: s_lo, max: f64::INFINITY });
    }
    let mut grow = 0;
    while clip_snr(seq, p, hi.exp()) < snr_db {
        hi += std::f64::consts::LN_2;
        grow += 1;
        if grow > 200 {
            return Err(Error::UnreachableSnr { requested: snr_db, min: 0.0, max: clip_snr(seq, p, hi.exp()) });
        }
    }
    let mut c = hi.exp();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        c = mid.exp();
        let s = clip_snr(seq, p, c);
        if (s - snr_db).abs() < 1e-3 {
            break;
        }
        if s < snr_db {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((soft_clip(seq, c), c))
}

pub fn clip_nonlinear(seq: &[f64], snr_db: f64) -> Result<Vec<f64>> {
    clip_nonlinear_with_knee(seq, snr_db).map(|(out, _)| out)
}

/// Applies one noise kind to one channel.
pub fn apply_noise(seq: &[f64], fs: f64, kind: NoiseKind, snr_db: f64, rng: &mut Rng) -> Result<Vec<f64>> {
    match kind {
        NoiseKind::PowerLine => add_powerline(seq, fs, snr_db, rng),
        NoiseKind::Attenuation => attenuate(seq, snr_db),
        NoiseKind::GaussianNoise => add_gaussian(seq, snr_db, rng),
        NoiseKind::Clipping => clip_nonlinear(seq, snr_db),
        NoiseKind::BaselineWander => add_baseline_wander(seq, fs, snr_db, rng),
    }
}

/// Contaminates a random subset of channels with one randomly drawn noise kind.
///
/// Channels that cannot carry the noise (zero power, constant for clipping)
/// are left untouched but still reported as affected.
pub fn contaminate_window(
    w: &SignalWindow,
    snr_db: f64,
    rng: &mut Rng,
    policy: ChannelPolicy,
) -> (SignalWindow, ContaminationTruth) {
    let kind = NoiseKind::ALL[rng.random_range(0..NoiseKind::ALL.len())];
    contaminate_window_with(w, kind, snr_db, rng, policy)
}

pub fn contaminate_window_with(
    w: &SignalWindow,
    kind: NoiseKind,
    snr_db: f64,
    rng: &mut Rng,
    policy: ChannelPolicy,
) -> (SignalWindow, ContaminationTruth) {
    let l = w.channel_count();
    let count = policy.count(l, rng);
    let mut affected = index::sample(rng, l, count).into_vec();
    affected.sort_unstable();

    let mut out = w.clone();
    affected.retain(|&ch| match apply_noise(w.channel(ch), w.sample_rate_hz(), kind, snr_db, rng) {
        Ok(noisy) => {
            out = out.with_channel(ch, noisy).expect("noise preserves length");
            true
        }
        Err(e) => {
            log::warn!("channel {ch} left clean ({kind:?} at {snr_db} dB): {e}");
            false
        }
    });
    (out, ContaminationTruth { kind, snr_db, affected })
}
