//! One function per subcommand. Each returns the summary line to print.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array2, Array3, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use vtalarm::eval::{classification_metrics, decide_alert};
use vtalarm::imbalance::{class_weights, resample};
use vtalarm::io::{self, AlarmEntry, FeatureTable, Provenance, ScoreRow};
use vtalarm::nn::{build_model, load_checkpoint, load_checkpoint_as, save_checkpoint, train, Dataset};
use vtalarm::preprocess::{apply_scaler, decimate, fit_scaler, impute_mean, split_dataset};
use vtalarm::synth::{corpus_labels, generate_waveform_event};
use vtalarm::wfdb::{extract_alarm_window, parse_header, read_signal, write_record, RecordHeader, WaveformRecord};
use vtalarm::{AlarmWindow, Architecture, DatasetSplit, EvalReport, Label, ScalerParams};

use crate::config::{PipelineConfig, SequenceSection};
use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

pub const ALARMS_FILE: &str = "alarms.csv";
pub const WINDOWS_DIR: &str = "windows";
pub const WINDOWS_FILE: &str = "windows.csv";
pub const FEATURES_FILE: &str = "features.csv";
pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const MANIFEST_FILE: &str = "model.toml";
pub const SCALER_FILE: &str = "scaler.toml";
pub const SPLIT_FILE: &str = "split.csv";
pub const HISTORY_FILE: &str = "history.csv";
pub const REPORT_FILE: &str = "report.json";
pub const SCORES_FILE: &str = "scores.csv";
pub const ALERTS_FILE: &str = "alerts.csv";

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::missing(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::missing(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, bytes)?;
    Ok(())
}

fn with_comment(provenance: &Provenance, body: &str) -> String {
    format!("{}\n{body}", provenance.comment_line())
}

fn load_record(dir: &Path, name: &str) -> Result<WaveformRecord> {
    let header = parse_header(&read_text(&dir.join(format!("{name}.hea")))?)?;
    let file = header.signals.first().map(|s| s.file_name.clone()).unwrap_or_else(|| format!("{name}.dat"));
    let bytes = read_bytes(&dir.join(file))?;
    Ok(read_signal(&header, &bytes)?)
}

fn save_record(dir: &Path, record: &WaveformRecord, format: vtalarm::StorageFormat) -> Result<()> {
    let (header, bytes) = write_record(record, format)?;
    let name = &record.header.record_name;
    write_bytes(&dir.join(format!("{name}.hea")), header.as_bytes())?;
    write_bytes(&dir.join(format!("{name}.dat")), &bytes)
}

fn read_alarm_file(path: &Path) -> Result<Vec<AlarmEntry>> {
    Ok(io::read_alarms(read_bytes(path)?.as_slice())?)
}

pub fn synth(cfg: &PipelineConfig) -> Result<String> {
    let dir = cfg.data_dir();
    let labels = corpus_labels(&cfg.synth)?;
    let entries = labels
        .par_iter()
        .enumerate()
        .map(|(i, &label)| {
            let (record, alarm_time) = generate_waveform_event(&cfg.synth, i, label)?;
            save_record(&dir, &record, vtalarm::StorageFormat::Fmt16)?;
            Ok(AlarmEntry { record_id: record.header.record_name, alarm_time_s: alarm_time, label })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    io::write_alarms(&mut out, &entries, Some(&cfg.provenance()))?;
    write_bytes(&dir.join(ALARMS_FILE), &out)?;
    let n_true = labels.iter().filter(|l| l.is_true()).count();
    Ok(format!("synth: {} events ({n_true} true) in {}", labels.len(), dir.display()))
}

/// Cuts each alarm's window out of its record and stores it as its own
/// record, with the onset at the window's `alarm_index`.
pub fn ingest(cfg: &PipelineConfig) -> Result<String> {
    let src = cfg.data_dir();
    let entries = read_alarm_file(&src.join(ALARMS_FILE))?;
    let mut seen = std::collections::HashSet::new();
    for e in &entries {
        if !seen.insert(e.record_id.as_str()) {
            return Err(vtalarm::Error::InvalidInput(format!("record {:?} listed twice", e.record_id)).into());
        }
    }
    let dst = cfg.out_dir.join(WINDOWS_DIR);
    let windows = entries
        .par_iter()
        .map(|e| {
            let record = load_record(&src, &e.record_id)?;
            let format = record.header.signals.first().map(|s| s.storage_format).unwrap_or(vtalarm::StorageFormat::Fmt16);
            let window = extract_alarm_window(&record, e.alarm_time_s, e.label)?;
            let header = RecordHeader { n_samples: window.n_samples(), ..record.header.clone() };
            let cut = WaveformRecord::new(header, window.samples.clone(), window.missing_mask.clone())?;
            save_record(&dst, &cut, format)?;
            Ok(AlarmEntry {
                record_id: e.record_id.clone(),
                alarm_time_s: window.alarm_index as f64 / window.fs,
                label: e.label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    io::write_alarms(&mut out, &windows, Some(&cfg.provenance()))?;
    write_bytes(&dst.join(WINDOWS_FILE), &out)?;
    Ok(format!("ingest: {} windows in {}", windows.len(), dst.display()))
}

fn load_windows(cfg: &PipelineConfig) -> Result<Vec<AlarmWindow>> {
    let dir = cfg.out_dir.join(WINDOWS_DIR);
    let entries = read_alarm_file(&dir.join(WINDOWS_FILE))?;
    entries
        .par_iter()
        .map(|e| {
            let record = load_record(&dir, &e.record_id)?;
            Ok(impute_mean(&extract_alarm_window(&record, e.alarm_time_s, e.label)?))
        })
        .collect()
}

pub fn featurize(cfg: &PipelineConfig) -> Result<String> {
    let windows = load_windows(cfg)?;
    let w0 = windows.first().ok_or(vtalarm::Error::EmptyInput)?;
    let extractor = cfg.features.extractor(w0.fs, cfg.features.span_len(w0.fs, w0.n_samples()))?;
    let vectors = windows
        .par_iter()
        .map(|w| if w.fs == w0.fs { extractor.extract(w) } else { cfg.features.extract(w) })
        .collect::<vtalarm::Result<Vec<_>>>()?;
    let first = &vectors[0];
    let names = first.names.clone();
    let d = names.len();
    let mut values = Array2::zeros((vectors.len(), d));
    for (i, (v, w)) in vectors.iter().zip(&windows).enumerate() {
        if v.names != names {
            return Err(vtalarm::Error::InvalidInput(format!("window {:?} has a different channel layout", w.record_id)).into());
        }
        values.row_mut(i).assign(&ndarray::ArrayView1::from(&v.values));
    }
    let table = FeatureTable::new(
        windows.iter().map(|w| w.record_id.clone()).collect(),
        names,
        values,
        windows.iter().map(|w| w.label).collect(),
    )?;
    let path = cfg.out_dir.join(FEATURES_FILE);
    let mut out = Vec::new();
    io::write_features(&mut out, &table, Some(&cfg.provenance()))?;
    write_bytes(&path, &out)?;
    Ok(format!("featurize: {} rows x {d} features in {}", table.len(), path.display()))
}

/// What the model reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum InputSource {
    Features { names: Vec<String> },
    Sequence(SequenceSection),
}

/// Written next to the checkpoint so later stages rebuild the same inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub architecture: Architecture,
    pub input_shape: (usize, usize),
    pub input: InputSource,
}

/// Unscaled model inputs, N×T×F, in event order.
struct Inputs {
    record_ids: Vec<String>,
    labels: Vec<Label>,
    x: Array3<f64>,
}

fn feature_inputs(path: &Path, expected: Option<&[String]>) -> Result<(Inputs, Vec<String>)> {
    let table = io::read_features(read_bytes(path)?.as_slice())?;
    if let Some(names) = expected {
        if names != table.names.as_slice() {
            return Err(vtalarm::Error::DimensionMismatch { expected: names.len(), found: table.names.len() }.into());
        }
    }
    let x = vtalarm::nn::features_to_input(&table.values);
    Ok((Inputs { record_ids: table.record_ids, labels: table.labels, x }, table.names))
}

fn sequence_of(window: &AlarmWindow, seq: &SequenceSection) -> vtalarm::Result<Array2<f64>> {
    let factor = (window.fs / seq.fs).round().max(1.0) as usize;
    let onset = window.alarm_index as f64;
    let start = onset + (seq.window.start_s * window.fs).round();
    let end = onset + (seq.window.end_s * window.fs).round();
    if start < 0.0 || end > window.n_samples() as f64 {
        return Err(vtalarm::Error::InvalidConfig(format!(
            "sequence window {:?} does not fit {:?}",
            seq.window, window.record_id
        )));
    }
    decimate(window.samples.slice(ndarray::s![start as usize..end as usize, ..]), factor)
}

fn sequence_inputs(cfg: &PipelineConfig, seq: &SequenceSection) -> Result<Inputs> {
    let windows = load_windows(cfg)?;
    let seqs = windows.par_iter().map(|w| sequence_of(w, seq)).collect::<vtalarm::Result<Vec<_>>>()?;
    let (t, f) = seqs.first().ok_or(vtalarm::Error::EmptyInput)?.dim();
    let mut x = Array3::zeros((seqs.len(), t, f));
    for (i, s) in seqs.iter().enumerate() {
        if s.dim() != (t, f) {
            return Err(vtalarm::Error::ShapeMismatch(format!(
                "window {:?} gives a {:?} sequence, expected {:?}",
                windows[i].record_id,
                s.dim(),
                (t, f)
            ))
            .into());
        }
        x.index_axis_mut(Axis(0), i).assign(s);
    }
    Ok(Inputs {
        record_ids: windows.iter().map(|w| w.record_id.clone()).collect(),
        labels: windows.iter().map(|w| w.label).collect(),
        x,
    })
}

fn flatten(x: &Array3<f64>) -> Array2<f64> {
    let (n, t, f) = x.dim();
    x.to_owned().into_shape_with_order((n * t, f)).expect("contiguous")
}

/// Per-feature (or per-channel) extremes over every time step of `rows`.
fn fit_inputs(x: &Array3<f64>, rows: &[usize]) -> vtalarm::Result<ScalerParams> {
    fit_scaler(flatten(&x.select(Axis(0), rows)).view())
}

fn scale_inputs(x: &Array3<f64>, params: &ScalerParams) -> vtalarm::Result<Array3<f64>> {
    let (n, t, f) = x.dim();
    Ok(apply_scaler(flatten(x).view(), params)?.into_shape_with_order((n, t, f)).expect("same size"))
}

fn part(x: &Array3<f64>, labels: &[Label], rows: &[usize]) -> vtalarm::Result<Dataset> {
    Dataset::new(x.select(Axis(0), rows), rows.iter().map(|&i| labels[i]).collect())
}

pub fn train_model(cfg: &PipelineConfig) -> Result<String> {
    let arch = cfg.architecture;
    let (inputs, source) = match arch {
        Architecture::Fcnn => {
            let (inputs, names) = feature_inputs(&cfg.out_dir.join(FEATURES_FILE), None)?;
            (inputs, InputSource::Features { names })
        }
        Architecture::Cnn1dAttention => (sequence_inputs(cfg, &cfg.sequence)?, InputSource::Sequence(cfg.sequence.clone())),
    };
    let split = match &cfg.split.file {
        Some(path) => io::read_split(read_bytes(path)?.as_slice(), &inputs.record_ids, cfg.seed)?,
        None => split_dataset(&inputs.labels, cfg.seed)?,
    };
    let scaler = fit_inputs(&inputs.x, &split.train_indices)?;
    let x = scale_inputs(&inputs.x, &scaler)?;
    let (_, t, f) = x.dim();

    let train_x = x.select(Axis(0), &split.train_indices);
    let train_y: Vec<Label> = split.train_indices.iter().map(|&i| inputs.labels[i]).collect();
    let flat = train_x.into_shape_with_order((split.train_indices.len(), t * f)).expect("contiguous");
    let resampled = resample(flat.view(), &train_y, &cfg.resample_config())?;
    let n_train = resampled.labels.len();
    let train_set = Dataset::new(resampled.features.into_shape_with_order((n_train, t, f)).expect("same size"), resampled.labels)?;
    let val_set = part(&x, &inputs.labels, &split.val_indices)?;

    let mut train_cfg = cfg.train.clone();
    if cfg.resample.class_weights {
        train_cfg.class_weights = Some(class_weights(&train_set.labels)?);
    }
    let mut model = build_model(arch, (t, f), &cfg.model, cfg.seed)?;
    let history = train(&mut model, &train_set, &val_set, &train_cfg)?;

    let prov = cfg.provenance();
    let out = &cfg.out_dir;
    let manifest = ModelManifest { architecture: arch, input_shape: (t, f), input: source };
    write_bytes(&out.join(CHECKPOINT_FILE), &save_checkpoint(&model))?;
    let manifest_text = toml::to_string(&manifest).map_err(|e| CliError::Config(e.to_string()))?;
    write_bytes(&out.join(MANIFEST_FILE), with_comment(&prov, &manifest_text).as_bytes())?;
    write_bytes(&out.join(SCALER_FILE), with_comment(&prov, &scaler.to_toml()).as_bytes())?;
    let mut split_bytes = Vec::new();
    io::write_split(&mut split_bytes, &inputs.record_ids, &split, Some(&prov))?;
    write_bytes(&out.join(SPLIT_FILE), &split_bytes)?;
    write_bytes(&out.join(HISTORY_FILE), with_comment(&prov, &history.to_csv()).as_bytes())?;
    Ok(format!(
        "train: {} on {n_train} rows ({} val), {} epochs, best val AUC {:.4} at epoch {}",
        arch,
        val_set.len(),
        history.epochs.len(),
        history.best_val_auc,
        history.best_epoch
    ))
}

struct Trained {
    model: vtalarm::ModelGraph,
    manifest: ModelManifest,
    scaler: ScalerParams,
}

fn load_trained(cfg: &PipelineConfig, arch: Option<Architecture>) -> Result<Trained> {
    let out = &cfg.out_dir;
    let bytes = read_bytes(&out.join(CHECKPOINT_FILE))?;
    let model = match arch {
        Some(a) => load_checkpoint_as(&bytes, a)?,
        None => load_checkpoint(&bytes)?,
    };
    let manifest: ModelManifest = toml::from_str(&read_text(&out.join(MANIFEST_FILE))?)
        .map_err(|e| vtalarm::Error::InvalidInput(format!("{MANIFEST_FILE}: {e}")))?;
    if manifest.architecture != model.architecture || manifest.input_shape != model.input_shape {
        return Err(vtalarm::Error::InvalidInput(format!("{MANIFEST_FILE} does not describe {CHECKPOINT_FILE}")).into());
    }
    let scaler = ScalerParams::from_toml(&read_text(&out.join(SCALER_FILE))?)?;
    Ok(Trained { model, manifest, scaler })
}

fn model_inputs(cfg: &PipelineConfig, trained: &Trained, features: Option<&Path>) -> Result<Inputs> {
    match &trained.manifest.input {
        InputSource::Features { names } => {
            let default = cfg.out_dir.join(FEATURES_FILE);
            Ok(feature_inputs(features.unwrap_or(&default), Some(names))?.0)
        }
        InputSource::Sequence(seq) => {
            if features.is_some() {
                return Err(CliError::Config("--input applies to feature-based models only".into()));
            }
            sequence_inputs(cfg, seq)
        }
    }
}

fn score(trained: &Trained, x: &Array3<f64>) -> Result<Vec<f64>> {
    Ok(trained.model.predict(&scale_inputs(x, &trained.scaler)?)?)
}

#[derive(Serialize)]
struct ReportFile<'a> {
    config_hash: String,
    seed: u64,
    architecture: Architecture,
    split: &'static str,
    #[serde(flatten)]
    report: &'a EvalReport,
}

/// Scores the held-out test rows recorded in the split file.
pub fn evaluate(cfg: &PipelineConfig, arch: Option<Architecture>) -> Result<String> {
    let trained = load_trained(cfg, arch)?;
    let inputs = model_inputs(cfg, &trained, None)?;
    let split: DatasetSplit =
        io::read_split(read_bytes(&cfg.out_dir.join(SPLIT_FILE))?.as_slice(), &inputs.record_ids, cfg.seed)?;
    let rows = &split.test_indices;
    let scores = score(&trained, &inputs.x.select(Axis(0), rows))?;
    let labels: Vec<Label> = rows.iter().map(|&i| inputs.labels[i]).collect();
    let report = classification_metrics(&scores, &labels, cfg.threshold)?;

    let prov = cfg.provenance();
    let file = ReportFile {
        config_hash: prov.config_hash.clone(),
        seed: prov.seed,
        architecture: trained.model.architecture,
        split: "test",
        report: &report,
    };
    let json = serde_json::to_string_pretty(&file).expect("report serializes") + "\n";
    write_bytes(&cfg.out_dir.join(REPORT_FILE), json.as_bytes())?;
    let score_rows = score_rows(rows.iter().map(|&i| inputs.record_ids[i].clone()), &scores, cfg.threshold)?;
    let mut out = Vec::new();
    io::write_scores(&mut out, &score_rows, Some(&prov))?;
    write_bytes(&cfg.out_dir.join(SCORES_FILE), &out)?;
    Ok(format!(
        "evaluate: {} test rows, ROC-AUC {:.4}, true-alarm recall {:.3}, false-alarm recall {:.3}",
        report.n_samples, report.roc_auc, report.true_alarm.recall, report.false_alarm.recall
    ))
}

fn score_rows(ids: impl Iterator<Item = String>, scores: &[f64], threshold: f64) -> Result<Vec<ScoreRow>> {
    ids.zip(scores)
        .map(|(record_id, &s)| {
            let d = decide_alert(s, threshold)?;
            Ok(ScoreRow { record_id, score: d.score, alert: d.alert })
        })
        .collect()
}

/// Alert decisions for every event in `input` (default: the pipeline's own
/// feature table or windows).
pub fn predict(cfg: &PipelineConfig, arch: Option<Architecture>, input: Option<PathBuf>) -> Result<String> {
    let trained = load_trained(cfg, arch)?;
    let inputs = model_inputs(cfg, &trained, input.as_deref())?;
    let scores = score(&trained, &inputs.x)?;
    let rows = score_rows(inputs.record_ids.into_iter(), &scores, cfg.threshold)?;
    let mut out = Vec::new();
    io::write_scores(&mut out, &rows, Some(&cfg.provenance()))?;
    let path = cfg.out_dir.join(ALERTS_FILE);
    write_bytes(&path, &out)?;
    let alerts = rows.iter().filter(|r| r.alert).count();
    Ok(format!("predict: {alerts} of {} events alert at threshold {} ({})", rows.len(), cfg.threshold, path.display()))
}
