//! On-disk dataset format: one CSV per recording (header `ch1,...,chL`, one
//! row per sample) and a JSON manifest mapping each CSV path, relative to the
//! manifest, to its class label, subject and sample rate.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::signal::{segment_recording, select_channels, Dataset, Recording, SignalWindow};
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub class_label: usize,
    pub subject_id: String,
    pub sample_rate_hz: f64,
}

pub type Manifest = BTreeMap<String, ManifestEntry>;

pub fn parse_manifest(text: &str) -> Result<Manifest> {
    let m: Manifest = serde_json::from_str(text)?;
    for (path, e) in &m {
        if e.class_label == 0 {
            return Err(Error::invalid(format!("{path}: class labels start at 1")));
        }
        if !(e.sample_rate_hz > 0.0 && e.sample_rate_hz.is_finite()) {
            return Err(Error::invalid(format!("{path}: sample rate must be positive")));
        }
    }
    Ok(m)
}

/// Channel columns of a recording CSV.
pub fn parse_recording_csv<R: Read>(input: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers()?.clone();
    for (i, h) in headers.iter().enumerate() {
        if h != format!("ch{}", i + 1) {
            return Err(Error::MalformedRow {
                row: 1,
                message: format!("header column {} is {h:?}, expected ch{}", i + 1, i + 1),
            });
        }
    }
    if headers.is_empty() {
        return Err(Error::MalformedRow { row: 1, message: "no channel columns".into() });
    }
    let mut channels = vec![Vec::new(); headers.len()];
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::MalformedRow { row, message: e.to_string() })?;
        if rec.len() != channels.len() {
            return Err(Error::MalformedRow {
                row,
                message: format!("{} fields, expected {}", rec.len(), channels.len()),
            });
        }
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::MalformedRow {
                row,
                message: format!("column ch{}: {field:?} is not a number", c + 1),
            })?;
            if !v.is_finite() {
                return Err(Error::MalformedRow { row, message: format!("column ch{}: non-finite sample", c + 1) });
            }
            channels[c].push(v);
        }
    }
    Ok(channels)
}

pub fn write_recording_csv<W: Write>(out: W, channels: &[Vec<f64>]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record((1..=channels.len()).map(|l| format!("ch{l}")))?;
    let n = channels.first().map_or(0, Vec::len);
    for t in 0..n {
        wtr.write_record(channels.iter().map(|c| c[t].to_string()))?;
    }
    wtr.flush().map_err(|e| Error::io("recording csv", e))?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Resolves the manifest location from a dataset directory or a manifest file path.
pub fn manifest_path(dataset: &Path) -> PathBuf {
    if dataset.is_dir() {
        dataset.join(MANIFEST_FILE)
    } else {
        dataset.to_path_buf()
    }
}

pub fn read_recordings(dataset: &Path) -> Result<Vec<(String, Recording)>> {
    let mpath = manifest_path(dataset);
    let manifest = parse_manifest(&read_text(&mpath)?)?;
    let base = mpath.parent().unwrap_or(Path::new("."));
    manifest
        .into_iter()
        .map(|(rel, e)| {
            let p = base.join(&rel);
            let file = fs::File::open(&p).map_err(|err| Error::io(&p, err))?;
            let channels = parse_recording_csv(file).map_err(|err| match err {
                Error::MalformedRow { row, message } => {
                    Error::MalformedRow { row, message: format!("{}: {message}", p.display()) }
                }
                other => other,
            })?;
            Ok((rel, Recording::new(channels, e.sample_rate_hz, e.class_label, e.subject_id)?))
        })
        .collect()
}

/// Windows grouped by subject, subjects in lexical order.
pub fn load_dataset(dataset: &Path, channels: Option<&[usize]>, window_ms: f64) -> Result<Vec<(String, Dataset)>> {
    let mut by_subject: BTreeMap<String, Vec<SignalWindow>> = BTreeMap::new();
    for (_, rec) in read_recordings(dataset)? {
        let rec = match channels {
            Some(idx) => select_channels(&rec, idx)?,
            None => rec,
        };
        let windows = segment_recording(&rec, window_ms)?;
        by_subject.entry(rec.subject_id().to_string()).or_default().extend(windows);
    }
    if by_subject.is_empty() {
        return Err(Error::invalid("manifest lists no recordings"));
    }
    by_subject.into_iter().map(|(s, w)| Dataset::from_windows(w).map(|d| (s, d))).collect()
}

/// Writes recordings under `dir` together with a manifest.
pub fn write_dataset(dir: &Path, recordings: &[(String, Recording)]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = Manifest::new();
    for (rel, rec) in recordings {
        let p = dir.join(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let file = fs::File::create(&p).map_err(|e| Error::io(&p, e))?;
        write_recording_csv(std::io::BufWriter::new(file), rec.channels())?;
        manifest.insert(
            rel.clone(),
            ManifestEntry {
                class_label: rec.class_label(),
                subject_id: rec.subject_id().to_string(),
                sample_rate_hz: rec.sample_rate_hz(),
            },
        );
    }
    let mpath = dir.join(MANIFEST_FILE);
    fs::write(&mpath, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&mpath, e))
}

/// Concatenates equally sized windows of one class back into a recording.
pub fn windows_to_recording(windows: &[SignalWindow], class_label: usize, subject: &str) -> Result<Recording> {
    let first = windows.first().ok_or(Error::EmptySequence)?;
    let channels = (0..first.channel_count())
        .map(|l| windows.iter().flat_map(|w| w.channel(l).iter().copied()).collect())
        .collect();
    Recording::new(channels, first.sample_rate_hz(), class_label, subject)
}
