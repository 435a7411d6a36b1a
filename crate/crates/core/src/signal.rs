//! Recordings, fixed-length windows, datasets and cross-validation splits.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::{Error, Result};

/// A labelled multi-channel recording of one movement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recording {
    channels: Vec<Vec<f64>>,
    sample_rate_hz: f64,
    class_label: usize,
    subject_id: String,
}

impl Recording {
    pub fn new(
        channels: Vec<Vec<f64>>,
        sample_rate_hz: f64,
        class_label: usize,
        subject_id: impl Into<String>,
    ) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::invalid("recording needs at least one channel"));
        }
        let len = channels[0].len();
        if channels.iter().any(|c| c.len() != len) {
            return Err(Error::invalid("recording channels differ in length"));
        }
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::invalid(format!("sample rate {sample_rate_hz} must be positive")));
        }
        if class_label == 0 {
            return Err(Error::invalid("class labels start at 1"));
        }
        Ok(Self { channels, sample_rate_hz, class_label, subject_id: subject_id.into() })
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn class_label(&self) -> usize {
        self.class_label
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }
}

/// One classification object: `L` channels of `N` samples each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalWindow {
    samples: Vec<Vec<f64>>,
    sample_rate_hz: f64,
    class_label: Option<usize>,
}

impl SignalWindow {
    pub fn new(samples: Vec<Vec<f64>>, sample_rate_hz: f64, class_label: Option<usize>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("window needs at least one channel"));
        }
        let n = samples[0].len();
        if n == 0 || samples.iter().any(|c| c.len() != n) {
            return Err(Error::invalid("window channels must be non-empty and equally long"));
        }
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::invalid(format!("sample rate {sample_rate_hz} must be positive")));
        }
        Ok(Self { samples, sample_rate_hz, class_label })
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn channel(&self, l: usize) -> &[f64] {
        &self.samples[l]
    }

    pub fn channel_count(&self) -> usize {
        self.samples.len()
    }

    pub fn len(&self) -> usize {
        self.samples[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn class_label(&self) -> Option<usize> {
        self.class_label
    }

    /// Same window with one channel's samples replaced.
    pub fn with_channel(&self, l: usize, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: samples.len() });
        }
        let mut out = self.clone();
        out.samples[l] = samples;
        Ok(out)
    }
}

/// Labelled windows of a single experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    windows: Vec<SignalWindow>,
    class_count: usize,
    channel_count: usize,
}

impl Dataset {
    pub fn new(windows: Vec<SignalWindow>, class_count: usize) -> Result<Self> {
        let first = windows.first().ok_or_else(|| Error::invalid("dataset has no windows"))?;
        let channel_count = first.channel_count();
        let mut seen = vec![0usize; class_count];
        for (i, w) in windows.iter().enumerate() {
            if w.channel_count() != channel_count {
                return Err(Error::invalid(format!(
                    "window {i} has {} channels, expected {channel_count}",
                    w.channel_count()
                )));
            }
            match w.class_label() {
                Some(c) if (1..=class_count).contains(&c) => seen[c - 1] += 1,
                other => {
                    return Err(Error::invalid(format!("window {i} has label {other:?} outside 1..={class_count}")))
                }
            }
        }
        if let Some(c) = seen.iter().position(|&n| n == 0) {
            return Err(Error::invalid(format!("class {} has no windows", c + 1)));
        }
        Ok(Self { windows, class_count, channel_count })
    }

    /// Builds a dataset from windows, taking the class count from the largest label.
    pub fn from_windows(windows: Vec<SignalWindow>) -> Result<Self> {
        let m = windows.iter().filter_map(|w| w.class_label()).max().unwrap_or(0);
        Self::new(windows, m)
    }

    pub fn windows(&self) -> &[SignalWindow] {
        &self.windows
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn channel_count(&self) -> usize {
        self.channel_count
    }

    /// Class labels, 1-based, in window order.
    pub fn labels(&self) -> Vec<usize> {
        self.windows.iter().map(|w| w.class_label().unwrap_or(0)).collect()
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.class_count];
        for w in &self.windows {
            if let Some(c) = w.class_label() {
                sizes[c - 1] += 1;
            }
        }
        sizes
    }
}

/// Number of samples in a window of `window_ms` at `sample_rate_hz`.
pub fn window_len(window_ms: f64, sample_rate_hz: f64) -> usize {
    (window_ms * sample_rate_hz / 1000.0).round() as usize
}

/// Cuts a recording into consecutive non-overlapping windows starting at sample 0.
///
/// A trailing remainder shorter than one window is dropped.
pub fn segment_recording(rec: &Recording, window_ms: f64) -> Result<Vec<SignalWindow>> {
    if !(window_ms > 0.0 && window_ms.is_finite()) {
        return Err(Error::invalid(format!("window length {window_ms} ms must be positive")));
    }
    let n = window_len(window_ms, rec.sample_rate_hz());
    if n == 0 || rec.len() < n {
        return Err(Error::RecordingTooShort { samples: rec.len(), window: n });
    }
    let count = rec.len() / n;
    (0..count)
        .map(|k| {
            let samples = rec.channels().iter().map(|c| c[k * n..(k + 1) * n].to_vec()).collect();
            SignalWindow::new(samples, rec.sample_rate_hz(), Some(rec.class_label()))
        })
        .collect()
}

/// Keeps the listed channels, in the listed order.
pub fn select_channels(rec: &Recording, indices: &[usize]) -> Result<Recording> {
    if indices.is_empty() {
        return Err(Error::invalid("no channels selected"));
    }
    let mut used = vec![false; rec.channel_count()];
    for &i in indices {
        if i >= rec.channel_count() {
            return Err(Error::ChannelOutOfRange { index: i, channels: rec.channel_count() });
        }
        if std::mem::replace(&mut used[i], true) {
            return Err(Error::DuplicateChannel(i));
        }
    }
    let channels = indices.iter().map(|&i| rec.channels()[i].clone()).collect();
    Recording::new(channels, rec.sample_rate_hz(), rec.class_label(), rec.subject_id())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub repeat: usize,
    pub fold: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified k-fold assignment of `labels` (1-based), repeated with fresh shuffles.
///
/// Within a class, members are shuffled and dealt to folds round-robin; the
/// dealing position carries over between classes so fold sizes stay balanced.
pub fn stratified_split_labels(labels: &[usize], folds: usize, repeats: usize, seed: u64) -> Result<Vec<Split>> {
    if folds < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {folds}")));
    }
    let m = labels.iter().copied().max().unwrap_or(0);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (i, &c) in labels.iter().enumerate() {
        if c == 0 {
            return Err(Error::invalid("class labels start at 1"));
        }
        members[c - 1].push(i);
    }
    for (c, idx) in members.iter().enumerate() {
        if !idx.is_empty() && idx.len() < folds {
            return Err(Error::ClassTooSmall { class: c + 1, count: idx.len(), folds });
        }
    }

    let mut splits = Vec::with_capacity(folds * repeats);
    for repeat in 0..repeats {
        let mut rng = rng::keyed(seed, &[rng::stream::SPLIT, repeat as u64]);
        let mut fold_of = vec![0usize; labels.len()];
        let mut cursor = 0usize;
        for idx in &members {
            let mut shuffled = idx.clone();
            shuffled.shuffle(&mut rng);
            for i in shuffled {
                fold_of[i] = cursor % folds;
                cursor += 1;
            }
        }
        for fold in 0..folds {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| fold_of[i] == fold);
            splits.push(Split { repeat, fold, train, test });
        }
    }
    Ok(splits)
}

pub fn stratified_split(ds: &Dataset, folds: usize, repeats: usize, seed: u64) -> Result<Vec<Split>> {
    stratified_split_labels(&ds.labels(), folds, repeats, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp_recording(channels: usize, len: usize) -> Recording {
        let ch = (0..channels).map(|c| (0..len).map(|i| (i * (c + 1)) as f64).collect()).collect();
        Recording::new(ch, 4000.0, 1, "s1").unwrap()
    }

    #[test]
    fn segments_exact_division() {
        let rec = ramp_recording(2, 6000);
        let w = segment_recording(&rec, 500.0).unwrap();
        assert_eq!(w.len(), 3);
        assert!(w.iter().all(|w| w.len() == 2000 && w.class_label() == Some(1)));
    }

    #[test]
    fn segments_drop_remainder() {
        let rec = ramp_recording(1, 5000);
        let w = segment_recording(&rec, 500.0).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w[1].channel(0)[1999], 3999.0);
    }

    #[test]
    fn short_recording_is_error() {
        let rec = ramp_recording(1, 1999);
        assert!(matches!(
            segment_recording(&rec, 500.0),
            Err(Error::RecordingTooShort { samples: 1999, window: 2000 })
        ));
    }

    #[test]
    fn select_first_eight_of_twelve() {
        let rec = ramp_recording(12, 10);
        let sel = select_channels(&rec, &(0..8).collect::<Vec<_>>()).unwrap();
        assert_eq!(sel.channel_count(), 8);
        assert_eq!(sel.channels()[7], rec.channels()[7]);
        assert_eq!(select_channels(&rec, &[0]).unwrap().channel_count(), 1);
        assert!(matches!(select_channels(&rec, &[0, 0]), Err(Error::DuplicateChannel(0))));
        assert!(matches!(select_channels(&rec, &[12]), Err(Error::ChannelOutOfRange { .. })));
    }

    #[test]
    fn split_accounting() {
        let labels: Vec<usize> = (0..100).map(|i| 1 + i % 2).collect();
        let splits = stratified_split_labels(&labels, 10, 3, 42).unwrap();
        assert_eq!(splits.len(), 30);
        for s in &splits {
            let ones = s.test.iter().filter(|&&i| labels[i] == 1).count();
            assert_eq!((ones, s.test.len() - ones), (5, 5));
            assert_eq!(s.train.len(), 90);
        }
        assert_eq!(splits, stratified_split_labels(&labels, 10, 3, 42).unwrap());
        assert_ne!(splits, stratified_split_labels(&labels, 10, 3, 43).unwrap());
    }

    #[test]
    fn split_rejects_small_class() {
        let mut labels = vec![1; 50];
        labels.extend(vec![2; 7]);
        match stratified_split_labels(&labels, 10, 1, 0) {
            Err(Error::ClassTooSmall { class: 2, count: 7, folds: 10 }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(stratified_split_labels(&labels, 1, 1, 0).is_err());
    }

    proptest! {
        #[test]
        fn segmentation_is_lossless_prefix(len in 10usize..400, win in 1usize..10) {
            let rec = Recording::new(vec![(0..len).map(|i| i as f64 * 0.5).collect()], 1000.0, 2, "x").unwrap();
            let ws = segment_recording(&rec, win as f64).unwrap();
            let joined: Vec<f64> = ws.iter().flat_map(|w| w.channel(0).to_vec()).collect();
            prop_assert_eq!(joined.len(), (len / win) * win);
            prop_assert_eq!(&joined[..], &rec.channels()[0][..joined.len()]);
        }

        #[test]
        fn folds_partition_and_stratify(
            sizes in proptest::collection::vec(5usize..40, 2..5),
            folds in 2usize..6,
            seed in any::<u64>(),
        ) {
            let labels: Vec<usize> = sizes.iter().enumerate().flat_map(|(c, &n)| std::iter::repeat_n(c + 1, n)).collect();
            let splits = stratified_split_labels(&labels, folds, 2, seed).unwrap();
            for repeat in 0..2 {
                let mut seen = vec![0usize; labels.len()];
                for s in splits.iter().filter(|s| s.repeat == repeat) {
                    for &i in &s.test { seen[i] += 1; }
                    for (c, &total) in sizes.iter().enumerate() {
                        let count = s.test.iter().filter(|&&i| labels[i] == c + 1).count() as f64;
                        prop_assert!((count - total as f64 / folds as f64).abs() <= 1.0);
                    }
                }
                prop_assert!(seen.iter().all(|&k| k == 1));
            }
        }
    }
}
