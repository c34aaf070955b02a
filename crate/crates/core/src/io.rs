//! CSV sidecars: alarm lists, feature matrices, split assignments and
//! scores. Every writer can prefix a `# config_hash=... seed=...` comment
//! line; readers skip lines starting with `#`.

use std::collections::HashMap;
use std::io::{Read, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::preprocess::DatasetSplit;
use crate::{Error, Label, Result};

/// Config hash and seed stamped on generated files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn comment_line(&self) -> String {
        format!("# config_hash={} seed={}", self.config_hash, self.seed)
    }

    /// Parses a line produced by [`Provenance::comment_line`].
    pub fn parse(line: &str) -> Option<Provenance> {
        let rest = line.trim().strip_prefix('#')?.trim();
        let mut hash = None;
        let mut seed = None;
        for part in rest.split_whitespace() {
            if let Some(v) = part.strip_prefix("config_hash=") {
                hash = Some(v.to_string());
            } else if let Some(v) = part.strip_prefix("seed=") {
                seed = v.parse().ok();
            }
        }
        Some(Provenance { config_hash: hash?, seed: seed? })
    }
}

fn write_provenance<W: Write>(w: &mut W, provenance: Option<&Provenance>) -> Result<()> {
    if let Some(p) = provenance {
        writeln!(w, "{}", p.comment_line())?;
    }
    Ok(())
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(r)
}

fn parse_label(field: &str, line: u64) -> Result<Label> {
    field.parse().map_err(|_| Error::InvalidInput(format!("line {line}: bad label {field:?}")))
}

fn parse_f64(field: &str, what: &str, line: u64) -> Result<f64> {
    field.parse().map_err(|_| Error::InvalidInput(format!("line {line}: bad {what} {field:?}")))
}

/// One row of the alarm sidecar: `record_id,alarm_time_s,label`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlarmEntry {
    pub record_id: String,
    pub alarm_time_s: f64,
    pub label: Label,
}

pub fn write_alarms<W: Write>(mut w: W, entries: &[AlarmEntry], provenance: Option<&Provenance>) -> Result<()> {
    write_provenance(&mut w, provenance)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["record_id", "alarm_time_s", "label"])?;
    for e in entries {
        out.write_record([e.record_id.clone(), e.alarm_time_s.to_string(), e.label.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_alarms<R: Read>(r: R) -> Result<Vec<AlarmEntry>> {
    let mut rdr = reader(r);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::InvalidInput(format!("alarm file lacks a {name} column")))
    };
    let (id, time, label) = (col("record_id")?, col("alarm_time_s")?, col("label")?);
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        out.push(AlarmEntry {
            record_id: row.get(id).unwrap_or_default().to_string(),
            alarm_time_s: parse_f64(row.get(time).unwrap_or_default(), "alarm time", line)?,
            label: parse_label(row.get(label).unwrap_or_default(), line)?,
        });
    }
    Ok(out)
}

/// Feature matrix with one row per alarm.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub record_ids: Vec<String>,
    pub names: Vec<String>,
    pub values: Array2<f64>,
    pub labels: Vec<Label>,
}

impl FeatureTable {
    pub fn new(record_ids: Vec<String>, names: Vec<String>, values: Array2<f64>, labels: Vec<Label>) -> Result<Self> {
        if values.nrows() != record_ids.len() {
            return Err(Error::LengthMismatch(values.nrows(), record_ids.len()));
        }
        if values.nrows() != labels.len() {
            return Err(Error::LengthMismatch(values.nrows(), labels.len()));
        }
        if values.ncols() != names.len() {
            return Err(Error::DimensionMismatch { expected: names.len(), found: values.ncols() });
        }
        Ok(FeatureTable { record_ids, names, values, labels })
    }

    pub fn len(&self) -> usize {
        self.record_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.record_ids.is_empty()
    }

    /// Rows at `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> FeatureTable {
        FeatureTable {
            record_ids: idx.iter().map(|&i| self.record_ids[i].clone()).collect(),
            names: self.names.clone(),
            values: self.values.select(ndarray::Axis(0), idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// `record_id,<features...>,label`. Values use the shortest representation
/// that parses back to the same `f64`.
pub fn write_features<W: Write>(mut w: W, table: &FeatureTable, provenance: Option<&Provenance>) -> Result<()> {
    write_provenance(&mut w, provenance)?;
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["record_id".to_string()];
    header.extend(table.names.iter().cloned());
    header.push("label".into());
    out.write_record(&header)?;
    for ((id, row), label) in table.record_ids.iter().zip(table.values.rows()).zip(&table.labels) {
        let mut fields = vec![id.clone()];
        fields.extend(row.iter().map(|v| format!("{v:?}")));
        fields.push(label.to_string());
        out.write_record(&fields)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_features<R: Read>(r: R) -> Result<FeatureTable> {
    let mut rdr = reader(r);
    let headers = rdr.headers()?.clone();
    let n = headers.len();
    if n < 3 || &headers[0] != "record_id" || &headers[n - 1] != "label" {
        return Err(Error::InvalidInput("feature file must have columns record_id, features..., label".into()));
    }
    let names: Vec<String> = headers.iter().skip(1).take(n - 2).map(String::from).collect();
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        ids.push(row[0].to_string());
        for field in row.iter().skip(1).take(n - 2) {
            let v = parse_f64(field, "feature value", line)?;
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("line {line}: non-finite feature value")));
            }
            values.push(v);
        }
        labels.push(parse_label(&row[n - 1], line)?);
    }
    let values = Array2::from_shape_vec((ids.len(), names.len()), values).expect("csv rows have equal length");
    FeatureTable::new(ids, names, values, labels)
}

/// `record_id,split` with split one of `train`, `val`, `test`.
pub fn write_split<W: Write>(mut w: W, record_ids: &[String], split: &DatasetSplit, provenance: Option<&Provenance>) -> Result<()> {
    write_provenance(&mut w, provenance)?;
    let mut tags = vec![""; record_ids.len()];
    for (indices, tag) in [(&split.train_indices, "train"), (&split.val_indices, "val"), (&split.test_indices, "test")] {
        for &i in indices {
            *tags.get_mut(i).ok_or_else(|| Error::InvalidInput(format!("split index {i} out of range")))? = tag;
        }
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["record_id", "split"])?;
    for (id, tag) in record_ids.iter().zip(tags) {
        if !tag.is_empty() {
            out.write_record([id.as_str(), tag])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Resolves a split file against `record_ids` (the row order of the
/// feature table). Every listed record must exist.
pub fn read_split<R: Read>(r: R, record_ids: &[String], seed: u64) -> Result<DatasetSplit> {
    let position: HashMap<&str, usize> = record_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let mut split = DatasetSplit { train_indices: Vec::new(), val_indices: Vec::new(), test_indices: Vec::new(), seed };
    let mut rdr = reader(r);
    for row in rdr.records() {
        let row = row?;
        let (id, tag) = (row.get(0).unwrap_or_default(), row.get(1).unwrap_or_default());
        let &i = position.get(id).ok_or_else(|| Error::InvalidInput(format!("split file names unknown record {id:?}")))?;
        match tag {
            "train" => split.train_indices.push(i),
            "val" => split.val_indices.push(i),
            "test" => split.test_indices.push(i),
            other => return Err(Error::InvalidInput(format!("unknown split {other:?} for {id}"))),
        }
    }
    for v in [&mut split.train_indices, &mut split.val_indices, &mut split.test_indices] {
        v.sort_unstable();
    }
    Ok(split)
}

/// One scored event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub record_id: String,
    pub score: f64,
    pub alert: bool,
}

pub fn write_scores<W: Write>(mut w: W, rows: &[ScoreRow], provenance: Option<&Provenance>) -> Result<()> {
    write_provenance(&mut w, provenance)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["record_id", "score", "alert"])?;
    for r in rows {
        out.write_record([r.record_id.clone(), format!("{:?}", r.score), r.alert.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_scores<R: Read>(r: R) -> Result<Vec<ScoreRow>> {
    let mut rdr = reader(r);
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let alert = match row.get(2).unwrap_or_default() {
            "true" => true,
            "false" => false,
            other => return Err(Error::InvalidInput(format!("line {line}: bad alert flag {other:?}"))),
        };
        out.push(ScoreRow {
            record_id: row.get(0).unwrap_or_default().to_string(),
            score: parse_f64(row.get(1).unwrap_or_default(), "score", line)?,
            alert,
        });
    }
    Ok(out)
}
