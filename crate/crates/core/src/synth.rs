//! Synthetic multichannel recordings for offline experiments.
//!
//! Each window channel is band-pass filtered Gaussian noise over a white
//! sensor floor, scaled by a gain that depends on the class and the channel,
//! a per-window effort factor shared by all channels and an independent
//! per-channel jitter. By default class `c` has gain `2^c (1 + 0.1 l)` on
//! channel `l` and pass band `(20, 200) * 1.15^c` Hz, so every channel carries
//! some evidence about the class but none decides it alone.

use rand_distr::{Distribution, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::rng::Rng;
use crate::signal::{Dataset, SignalWindow};
use crate::{Error, Result};

const WARMUP: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub class_count: usize,
    pub channel_count: usize,
    pub windows_per_class: usize,
    pub window_samples: usize,
    pub sample_rate_hz: f64,
    /// `gains[c][l]`; when absent, `2^c (1 + 0.1 l)`.
    pub gains: Option<Vec<Vec<f64>>>,
    /// Pass band per class in Hz; when absent, `base_band_hz * band_ratio^c`.
    pub bands_hz: Option<Vec<(f64, f64)>>,
    pub base_band_hz: (f64, f64),
    pub band_ratio: f64,
    /// Standard deviation of the log effort factor shared by a window's channels.
    pub effort_sigma: f64,
    /// Standard deviation of the independent log gain jitter of each channel.
    pub channel_sigma: f64,
    /// Power of the band-limited component over a white sensor floor, in dB;
    /// `null` disables the floor.
    pub noise_floor_db: Option<f64>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            class_count: 4,
            channel_count: 8,
            windows_per_class: 100,
            window_samples: 2000,
            sample_rate_hz: 4000.0,
            gains: None,
            bands_hz: None,
            base_band_hz: (20.0, 200.0),
            band_ratio: 1.15,
            effort_sigma: 0.15,
            channel_sigma: 0.4,
            noise_floor_db: Some(25.0),
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.class_count < 2 {
            return Err(Error::invalid("synthetic data needs at least 2 classes"));
        }
        if self.channel_count < 1 || self.windows_per_class < 1 || self.window_samples < 1 {
            return Err(Error::invalid("channel count, windows per class and window length must be positive"));
        }
        if !(self.sample_rate_hz > 0.0) || !(self.effort_sigma >= 0.0) || !(self.channel_sigma >= 0.0) {
            return Err(Error::invalid("sample rate must be positive and gain spreads non-negative"));
        }
        if let Some(g) = &self.gains {
            if g.len() != self.class_count || g.iter().any(|r| r.len() != self.channel_count) {
                return Err(Error::invalid("gain table must be classes x channels"));
            }
            if g.iter().flatten().any(|v| !(*v > 0.0)) {
                return Err(Error::invalid("gains must be positive"));
            }
        }
        let nyquist = self.sample_rate_hz / 2.0;
        let band_ok = |(lo, hi): (f64, f64)| lo > 0.0 && hi > lo && hi < nyquist;
        if !(self.band_ratio > 0.0) || !(0..self.class_count).all(|c| band_ok(self.band(c))) {
            return Err(Error::invalid("every class band must satisfy 0 < low < high < Nyquist"));
        }
        if let Some(b) = &self.bands_hz {
            if b.len() != self.class_count {
                return Err(Error::invalid("one band per class required"));
            }
        }
        Ok(())
    }

    pub fn gain(&self, class: usize, channel: usize) -> f64 {
        match &self.gains {
            Some(g) => g[class][channel],
            None => 2f64.powi(class as i32) * (1.0 + 0.1 * channel as f64),
        }
    }

    pub fn band(&self, class: usize) -> (f64, f64) {
        match &self.bands_hz {
            Some(b) => b[class],
            None => {
                let k = self.band_ratio.powi(class as i32);
                (self.base_band_hz.0 * k, self.base_band_hz.1 * k)
            }
        }
    }
}

/// Second-order band-pass section (constant 0 dB peak gain).
#[derive(Debug, Clone, Copy)]
struct BandPass {
    b0: f64,
    b2: f64,
    a1: f64,
    a2: f64,
}

impl BandPass {
    fn new(low: f64, high: f64, fs: f64) -> Self {
        let f0 = (low * high).sqrt();
        let q = f0 / (high - low);
        let w0 = 2.0 * std::f64::consts::PI * f0 / fs;
        let alpha = w0.sin() / (2.0 * q);
        let a0 = 1.0 + alpha;
        Self { b0: alpha / a0, b2: -alpha / a0, a1: -2.0 * w0.cos() / a0, a2: (1.0 - alpha) / a0 }
    }

    fn filter(&self, x: &[f64]) -> Vec<f64> {
        let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
        x.iter()
            .map(|&v| {
                let y = self.b0 * v + self.b2 * x2 - self.a1 * y1 - self.a2 * y2;
                x2 = x1;
                x1 = v;
                y2 = y1;
                y1 = y;
                y
            })
            .collect()
    }
}

fn unit_power(mut v: Vec<f64>) -> Vec<f64> {
    let p = v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64;
    if p > 0.0 {
        let s = p.sqrt();
        v.iter_mut().for_each(|x| *x /= s);
    }
    v
}

fn band_noise(filter: &BandPass, n: usize, floor_db: Option<f64>, rng: &mut Rng) -> Vec<f64> {
    let white: Vec<f64> = (0..n + WARMUP).map(|_| StandardNormal.sample(rng)).collect();
    let mut y = filter.filter(&filter.filter(&white));
    y.drain(..WARMUP);
    let mut y = unit_power(y);
    if let Some(db) = floor_db {
        let sd = 10f64.powf(-db / 20.0);
        y.iter_mut().for_each(|v| {
            let z: f64 = StandardNormal.sample(rng);
            *v += sd * z;
        });
    }
    y
}

pub fn generate_synthetic(spec: &SynthSpec, rng: &mut Rng) -> Result<Dataset> {
    spec.validate()?;
    let effort = LogNormal::new(0.0, spec.effort_sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let jitter = LogNormal::new(0.0, spec.channel_sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let mut windows = Vec::with_capacity(spec.class_count * spec.windows_per_class);
    for c in 0..spec.class_count {
        let (lo, hi) = spec.band(c);
        let filter = BandPass::new(lo, hi, spec.sample_rate_hz);
        for _ in 0..spec.windows_per_class {
            let e: f64 = effort.sample(rng);
            let samples = (0..spec.channel_count)
                .map(|l| {
                    let g = spec.gain(c, l) * e * jitter.sample(rng);
                    band_noise(&filter, spec.window_samples, spec.noise_floor_db, rng)
                        .into_iter()
                        .map(|v| g * v)
                        .collect()
                })
                .collect();
            windows.push(SignalWindow::new(samples, spec.sample_rate_hz, Some(c + 1))?);
        }
    }
    Dataset::new(windows, spec.class_count)
}
