//! Commands behind the `semg-cascade` binary.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use semg_cascade::cascade::CascadeModel;
use semg_cascade::config::{load_config, ExperimentConfig};
use semg_cascade::contamination::{contaminate_window, measured_snr_db, ChannelPolicy, ContaminationTruth};
use semg_cascade::dataset_io::{load_dataset, read_recordings, windows_to_recording, write_dataset};
use semg_cascade::eval::{rank_table, run_experiment, to_rows, Criterion, RankTable, ResultRow};
use semg_cascade::report::{
    rank_plot_svg, read_results_csv, write_rank_table_csv, write_results_csv, write_significance_csv,
};
use semg_cascade::rng::{self, stream};
use semg_cascade::signal::{segment_recording, window_len, Dataset, Recording};
use semg_cascade::synth::{generate_synthetic, SynthSpec};
use semg_cascade::Error;

pub const RESULTS_FILE: &str = "results.csv";
pub const RUN_MANIFEST_FILE: &str = "run_manifest.json";
pub const CONFIG_FILE: &str = "config.json";
pub const WORKERS_ENV: &str = "SEMG_CASCADE_WORKERS";
pub const SYNTH_SUBJECT: &str = "synthetic";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad user input: missing files, invalid configuration.
    #[error("{0}")]
    Input(Error),
    #[error("{0}")]
    Failed(Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Usage(_) => 2,
            CliError::Failed(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Input(_) => "input",
            CliError::Failed(_) => "failure",
            CliError::Usage(_) => "usage",
        }
    }

    /// One-line JSON description for stderr.
    pub fn to_json(&self) -> String {
        let mut causes = Vec::new();
        let mut src = std::error::Error::source(self);
        while let Some(e) = src {
            causes.push(e.to_string());
            src = e.source();
        }
        serde_json::json!({ "error": self.to_string(), "kind": self.kind(), "causes": causes }).to_string()
    }
}

fn input(e: Error) -> CliError {
    CliError::Input(e)
}

fn failed(e: Error) -> CliError {
    CliError::Failed(e)
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Failed(Error::Io { path: path.to_path_buf(), source: e })
}

/// Sizes the global thread pool from the environment, if requested.
pub fn init_workers() -> CliResult<()> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| CliError::Usage(format!("{WORKERS_ENV} must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size the worker pool: {e}")))?;
    }
    Ok(())
}

/// Writes into a sibling staging directory and renames it over `out` once
/// `fill` succeeds; on failure nothing is left behind.
fn publish<T>(out: &Path, fill: impl FnOnce(&Path) -> CliResult<T>) -> CliResult<T> {
    if out.exists() {
        let reusable = out.is_dir()
            && (out.join(RUN_MANIFEST_FILE).exists()
                || fs::read_dir(out).map_err(|e| io_err(out, e))?.next().is_none());
        if !reusable {
            return Err(CliError::Usage(format!(
                "{} exists and is not the output of a previous run; refusing to overwrite",
                out.display()
            )));
        }
    }
    let parent = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    let name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    let staging = parent.join(format!(".{name}.staging-{}", std::process::id()));
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(|e| io_err(&staging, e))?;
    }
    fs::create_dir_all(&staging).map_err(|e| io_err(&staging, e))?;
    match fill(&staging) {
        Ok(v) => {
            if out.exists() {
                fs::remove_dir_all(out).map_err(|e| io_err(out, e))?;
            }
            fs::rename(&staging, out).map_err(|e| io_err(out, e))?;
            Ok(v)
        }
        Err(e) => {
            let _ = fs::remove_dir_all(&staging);
            Err(e)
        }
    }
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

fn pretty<T: Serialize>(v: &T) -> CliResult<String> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(|e| failed(e.into()))
}

fn create(path: &Path) -> CliResult<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path).map_err(|e| io_err(path, e))?))
}

/// Rank tables, significance tests and plots next to a results CSV.
pub fn write_reports(dir: &Path, rows: &[ResultRow]) -> CliResult<RankTable> {
    let table = rank_table(rows).map_err(failed)?;
    write_rank_table_csv(create(&dir.join("rank_table.csv"))?, &table).map_err(failed)?;
    write_significance_csv(create(&dir.join("significance.csv"))?, &table).map_err(failed)?;
    for c in Criterion::ALL {
        write_file(&dir.join(format!("rank_{c}.svg")), rank_plot_svg(&table, c))?;
    }
    Ok(table)
}

#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    tool: &'static str,
    version: &'static str,
    config_hash: String,
    seed: u64,
    config: &'a ExperimentConfig,
    subjects: Vec<SubjectSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SubjectSummary {
    pub subject: String,
    pub windows: usize,
    pub classes: usize,
    pub channels: usize,
    pub records: usize,
}

fn config_hash(cfg: &ExperimentConfig) -> CliResult<String> {
    let text = serde_json::to_string(cfg).map_err(|e| failed(e.into()))?;
    let digest = Sha256::new().chain_update(env!("CARGO_PKG_VERSION")).chain_update(text).finalize();
    Ok(hex::encode(digest))
}

fn subject_dir_name(subject: &str) -> String {
    subject.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Loads subjects named by the config: a dataset on disk or a synthetic set.
pub fn load_subjects(cfg: &ExperimentConfig) -> CliResult<Vec<(String, Dataset)>> {
    match &cfg.dataset {
        Some(path) => {
            let mpath = semg_cascade::dataset_io::manifest_path(path);
            if !mpath.exists() {
                return Err(input(Error::Io {
                    path: mpath,
                    source: std::io::Error::new(std::io::ErrorKind::NotFound, "dataset manifest not found"),
                }));
            }
            load_dataset(path, cfg.channels.as_deref(), cfg.window_ms).map_err(input)
        }
        None => {
            let spec = cfg.synth.clone().unwrap_or_default();
            let ds = generate_synthetic(&spec, &mut rng::keyed(cfg.seed, &[stream::SYNTH])).map_err(input)?;
            Ok(vec![(SYNTH_SUBJECT.to_string(), ds)])
        }
    }
}

/// Runs the full protocol for every subject and publishes the output directory.
pub fn cmd_run(config: &Path, seed: Option<u64>, out: Option<&Path>) -> CliResult<PathBuf> {
    let mut cfg = load_config(config).map_err(input)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.output_dir = o.to_path_buf();
    }
    if let Some(d) = &cfg.dataset {
        if let Ok(abs) = fs::canonicalize(d) {
            cfg.dataset = Some(abs);
        }
    }
    let out = cfg.output_dir.clone();
    let subjects = load_subjects(&cfg)?;
    let settings = cfg.settings();

    publish(&out, |dir| {
        let mut summaries = Vec::new();
        for (subject, ds) in &subjects {
            log::info!("subject {subject}: {} windows, {} classes", ds.len(), ds.class_count());
            let sdir = dir.join(subject_dir_name(subject));
            fs::create_dir_all(&sdir).map_err(|e| io_err(&sdir, e))?;
            let records = run_experiment(ds, &settings).map_err(failed)?;
            let rows = to_rows(&records);
            write_results_csv(create(&sdir.join(RESULTS_FILE))?, &rows).map_err(failed)?;
            write_reports(&sdir, &rows)?;
            let model = CascadeModel::fit(
                ds,
                &settings.features,
                &settings.occ,
                settings.estimator,
                &settings.k_grid,
                settings.seed,
            )
            .map_err(failed)?;
            write_file(&sdir.join("model.json"), model.to_json().map_err(failed)?)?;
            summaries.push(SubjectSummary {
                subject: subject.clone(),
                windows: ds.len(),
                classes: ds.class_count(),
                channels: ds.channel_count(),
                records: records.len(),
            });
        }
        let mut replay = cfg.clone();
        replay.output_dir = out.clone();
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config_hash: config_hash(&replay)?,
            seed: cfg.seed,
            config: &replay,
            subjects: summaries,
        };
        write_file(&dir.join(RUN_MANIFEST_FILE), pretty(&manifest)?)?;
        write_file(&dir.join(CONFIG_FILE), pretty(&replay)?)?;
        Ok(())
    })?;
    Ok(out)
}

/// Regenerates tables and plots for every results CSV under `dir`.
pub fn cmd_report(dir: &Path) -> CliResult<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(CliError::Usage(format!("{} is not a directory", dir.display())));
    }
    let mut found = Vec::new();
    if dir.join(RESULTS_FILE).is_file() {
        found.push(dir.to_path_buf());
    }
    let mut subdirs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && p.join(RESULTS_FILE).is_file())
        .collect();
    subdirs.sort();
    found.extend(subdirs);
    if found.is_empty() {
        return Err(CliError::Usage(format!("no {RESULTS_FILE} under {}", dir.display())));
    }
    for d in &found {
        let path = d.join(RESULTS_FILE);
        let file = fs::File::open(&path).map_err(|e| io_err(&path, e))?;
        let rows = read_results_csv(file).map_err(|e| {
            input(match e {
                Error::MalformedRow { row, message } => {
                    Error::MalformedRow { row, message: format!("{}: {message}", path.display()) }
                }
                other => other,
            })
        })?;
        write_reports(d, &rows)?;
    }
    Ok(found)
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowTruth {
    pub file: String,
    pub window: usize,
    pub start_sample: usize,
    #[serde(flatten)]
    pub truth: ContaminationTruth,
    /// Measured SNR of each affected channel, same order as `affected`.
    pub measured_snr_db: Vec<f64>,
}

/// Contaminates every window of every recording; the tail beyond the last
/// full window is copied unchanged.
pub fn cmd_contaminate(
    input_dir: &Path,
    snr_db: f64,
    seed: u64,
    window_ms: f64,
    policy: ChannelPolicy,
    out: Option<&Path>,
) -> CliResult<PathBuf> {
    if !snr_db.is_finite() || snr_db < 0.0 {
        return Err(CliError::Usage(format!("SNR must be a non-negative number of dB, got {snr_db}")));
    }
    let recordings = read_recordings(input_dir).map_err(input)?;
    let out = match out {
        Some(o) => o.to_path_buf(),
        None => {
            let base =
                input_dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "dataset".into());
            input_dir.with_file_name(format!("{base}-snr{snr_db}-seed{seed}"))
        }
    };
    let mut noisy = Vec::with_capacity(recordings.len());
    let mut truths = Vec::new();
    for (ri, (rel, rec)) in recordings.iter().enumerate() {
        let n = window_len(window_ms, rec.sample_rate_hz());
        let windows = segment_recording(rec, window_ms).map_err(input)?;
        let mut out_windows = Vec::with_capacity(windows.len());
        for (wi, w) in windows.iter().enumerate() {
            let mut r = rng::keyed(seed, &[stream::CONTAMINATE, ri as u64, wi as u64]);
            let (cw, truth) = contaminate_window(w, snr_db, &mut r, policy);
            let measured = truth.affected.iter().map(|&l| measured_snr_db(w.channel(l), cw.channel(l))).collect();
            truths.push(WindowTruth {
                file: rel.clone(),
                window: wi,
                start_sample: wi * n,
                truth,
                measured_snr_db: measured,
            });
            out_windows.push(cw);
        }
        let mut joined = windows_to_recording(&out_windows, rec.class_label(), rec.subject_id()).map_err(failed)?;
        let used = windows.len() * n;
        if used < rec.len() {
            let channels: Vec<Vec<f64>> = joined
                .channels()
                .iter()
                .zip(rec.channels())
                .map(|(c, orig)| c.iter().chain(&orig[used..]).copied().collect())
                .collect();
            joined =
                Recording::new(channels, rec.sample_rate_hz(), rec.class_label(), rec.subject_id()).map_err(failed)?;
        }
        noisy.push((rel.clone(), joined));
    }
    publish(&out, |dir| {
        write_dataset(dir, &noisy).map_err(failed)?;
        write_file(&dir.join("truth.json"), pretty(&truths)?)?;
        write_file(
            &dir.join(RUN_MANIFEST_FILE),
            serde_json::json!({
                "tool": env!("CARGO_PKG_NAME"),
                "command": "contaminate",
                "input": input_dir,
                "snr_db": snr_db,
                "seed": seed,
                "window_ms": window_ms,
                "policy": policy,
            })
            .to_string()
                + "\n",
        )
    })?;
    Ok(out)
}

/// Generates a synthetic dataset (one recording per class) on disk.
pub fn cmd_synth(spec_path: &Path, seed: u64, out: &Path) -> CliResult<PathBuf> {
    let text =
        fs::read_to_string(spec_path).map_err(|e| input(Error::Io { path: spec_path.to_path_buf(), source: e }))?;
    let spec: SynthSpec = if text.trim().is_empty() {
        SynthSpec::default()
    } else {
        serde_json::from_str(&text).map_err(|e| input(Error::Config(e.to_string())))?
    };
    let ds = generate_synthetic(&spec, &mut rng::keyed(seed, &[stream::SYNTH])).map_err(input)?;
    let mut recs = Vec::new();
    for c in 1..=ds.class_count() {
        let windows: Vec<_> = ds.windows().iter().filter(|w| w.class_label() == Some(c)).cloned().collect();
        let rec = windows_to_recording(&windows, c, SYNTH_SUBJECT).map_err(failed)?;
        recs.push((format!("class{c}.csv"), rec));
    }
    publish(out, |dir| {
        write_dataset(dir, &recs).map_err(failed)?;
        write_file(
            &dir.join(RUN_MANIFEST_FILE),
            serde_json::json!({
                "tool": env!("CARGO_PKG_NAME"),
                "command": "synth",
                "seed": seed,
                "spec": spec,
            })
            .to_string()
                + "\n",
        )
    })?;
    Ok(out.to_path_buf())
}

pub fn parse_policy(s: &str) -> Result<ChannelPolicy, String> {
    match s {
        "up-to-half" => Ok(ChannelPolicy::UpToHalf),
        "all" => Ok(ChannelPolicy::All),
        _ => s
            .strip_prefix("fixed:")
            .and_then(|k| k.parse().ok())
            .filter(|k: &usize| *k > 0)
            .map(ChannelPolicy::Fixed)
            .ok_or_else(|| format!("policy must be up-to-half, all or fixed:<k>, got {s:?}")),
    }
}
