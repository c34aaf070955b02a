//! Mean imputation, min-max scaling and stratified train/val/test splits.

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng::{self, Stream};
use crate::wfdb::AlarmWindow;
use crate::{Error, Label, Result};

/// Replaces every masked sample with the mean of its channel's observed
/// samples; a channel with no observations becomes all zeros. The returned
/// window has an all-false mask.
pub fn impute_mean(window: &AlarmWindow) -> AlarmWindow {
    let mut out = window.clone();
    for (mut column, mask) in out.samples.axis_iter_mut(Axis(1)).zip(window.missing_mask.axis_iter(Axis(1))) {
        let (sum, count) = column
            .iter()
            .zip(mask.iter())
            .filter(|(_, &m)| !m)
            .fold((0.0, 0usize), |(s, n), (&v, _)| (s + v, n + 1));
        let mean = if count == 0 { 0.0 } else { sum / count as f64 };
        for (v, &m) in column.iter_mut().zip(mask.iter()) {
            if m {
                *v = mean;
            }
        }
    }
    out.missing_mask.fill(false);
    out
}

/// Per-feature extremes of the training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

const SCALER_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ScalerFile {
    version: u32,
    min: Vec<f64>,
    max: Vec<f64>,
}

impl ScalerParams {
    pub fn dim(&self) -> usize {
        self.min.len()
    }

    /// Versioned TOML document.
    pub fn to_toml(&self) -> String {
        let file = ScalerFile { version: SCALER_VERSION, min: self.min.clone(), max: self.max.clone() };
        toml::to_string(&file).expect("scaler params serialize")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ScalerFile =
            toml::from_str(text).map_err(|e| Error::InvalidInput(format!("scaler file: {e}")))?;
        if file.version != SCALER_VERSION {
            return Err(Error::InvalidInput(format!("scaler file version {} unsupported", file.version)));
        }
        if file.min.len() != file.max.len() {
            return Err(Error::DimensionMismatch { expected: file.min.len(), found: file.max.len() });
        }
        if file.min.iter().zip(&file.max).any(|(lo, hi)| !(lo <= hi)) {
            return Err(Error::InvalidInput("scaler file has min > max".into()));
        }
        Ok(ScalerParams { min: file.min, max: file.max })
    }
}

pub fn fit_scaler(features: ArrayView2<'_, f64>) -> Result<ScalerParams> {
    if features.nrows() == 0 {
        return Err(Error::EmptyInput);
    }
    let d = features.ncols();
    let mut min = vec![f64::INFINITY; d];
    let mut max = vec![f64::NEG_INFINITY; d];
    for row in features.rows() {
        for (j, &v) in row.iter().enumerate() {
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
        }
    }
    Ok(ScalerParams { min, max })
}

/// Maps each column to [0, 1] with the fitted extremes. Constant columns map
/// to 0 and values outside the fitted range are clamped.
pub fn apply_scaler(features: ArrayView2<'_, f64>, params: &ScalerParams) -> Result<Array2<f64>> {
    if features.ncols() != params.dim() {
        return Err(Error::DimensionMismatch { expected: params.dim(), found: features.ncols() });
    }
    let mut out = features.to_owned();
    for mut row in out.rows_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            let span = params.max[j] - params.min[j];
            *v = if span > 0.0 { ((*v - params.min[j]) / span).clamp(0.0, 1.0) } else { 0.0 };
        }
    }
    Ok(out)
}

/// Block mean over non-overlapping runs of `factor` rows; a partial final
/// block is dropped. `factor` 1 copies the input.
pub fn decimate(samples: ArrayView2<'_, f64>, factor: usize) -> Result<Array2<f64>> {
    if factor == 0 {
        return Err(Error::InvalidConfig("decimation factor must be at least 1".into()));
    }
    let n_out = samples.nrows() / factor;
    if n_out == 0 {
        return Err(Error::TooShort { min: factor, found: samples.nrows() });
    }
    let mut out = Array2::zeros((n_out, samples.ncols()));
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        for r in i * factor..(i + 1) * factor {
            row += &samples.row(r);
        }
        row /= factor as f64;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
}

impl DatasetSplit {
    pub fn len(&self) -> usize {
        self.train_indices.len() + self.val_indices.len() + self.test_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub const MIN_SPLIT_SAMPLES: usize = 10;

/// Stratified 80/10/10 split.
///
/// Validation and test each receive ⌊0.1·N⌋ rows; within each, the number of
/// true alarms is round(size · N₊/N) so every split tracks the full class
/// ratio to within one sample. Each class's indices are shuffled with the
/// [`Stream::Split`] generator, then dealt to validation, test, and train in
/// that order. Index lists are returned sorted.
pub fn split_dataset(labels: &[Label], seed: u64) -> Result<DatasetSplit> {
    let n = labels.len();
    if n < MIN_SPLIT_SAMPLES {
        return Err(Error::TooFewSamples { min: MIN_SPLIT_SAMPLES, found: n });
    }
    let mut positives: Vec<usize> = (0..n).filter(|&i| labels[i].is_true()).collect();
    let mut negatives: Vec<usize> = (0..n).filter(|&i| !labels[i].is_true()).collect();
    let mut rng = rng::stream(seed, Stream::Split);
    positives.shuffle(&mut rng);
    negatives.shuffle(&mut rng);

    let holdout = n / 10;
    let pos_share = ((holdout * positives.len()) as f64 / n as f64).round() as usize;
    let pos_share = pos_share.min(positives.len() / 2);
    let neg_share = (holdout - pos_share).min(negatives.len() / 2);
    // if the negatives could not fill their share, top up from positives
    let pos_share = (holdout - neg_share).min(positives.len() / 2);

    let take = |pool: &[usize], k: usize, from: usize| pool[from..from + k].to_vec();
    let mut val = take(&positives, pos_share, 0);
    val.extend(take(&negatives, neg_share, 0));
    let mut test = take(&positives, pos_share, pos_share);
    test.extend(take(&negatives, neg_share, neg_share));
    let mut train = positives[2 * pos_share..].to_vec();
    train.extend_from_slice(&negatives[2 * neg_share..]);

    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(DatasetSplit { train_indices: train, val_indices: val, test_indices: test, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn window(values: Vec<f64>, mask: Vec<bool>) -> AlarmWindow {
        let n = values.len();
        AlarmWindow {
            record_id: "w".into(),
            fs: 1.0,
            channel_names: vec!["II".into()],
            samples: Array2::from_shape_vec((n, 1), values).unwrap(),
            missing_mask: Array2::from_shape_vec((n, 1), mask).unwrap(),
            label: Label::FalseAlarm,
            alarm_index: 0,
        }
    }

    #[test]
    fn decimates_by_block_mean() {
        let x = array![[1.0, 0.0], [3.0, 2.0], [5.0, 4.0], [7.0, 6.0], [9.0, 8.0]];
        assert_eq!(decimate(x.view(), 2).unwrap(), array![[2.0, 1.0], [6.0, 5.0]]);
        assert_eq!(decimate(x.view(), 1).unwrap(), x);
        assert!(decimate(x.view(), 0).is_err());
        assert!(matches!(decimate(x.view(), 6), Err(Error::TooShort { .. })));
    }

    #[test]
    fn imputes_channel_mean() {
        let w = impute_mean(&window(vec![1.0, 0.0, 3.0], vec![false, true, false]));
        assert_eq!(w.samples.column(0).to_vec(), vec![1.0, 2.0, 3.0]);
        assert!(!w.has_missing());
    }

    #[test]
    fn imputation_identity_and_all_missing() {
        let w = window(vec![1.0, 5.0, 3.0], vec![false; 3]);
        assert_eq!(impute_mean(&w), w);
        let w = impute_mean(&window(vec![0.0, 0.0], vec![true, true]));
        assert_eq!(w.samples.column(0).to_vec(), vec![0.0, 0.0]);
    }

    #[test]
    fn scaler_extremes() {
        let x = array![[0.0, 10.0], [4.0, 20.0]];
        let p = fit_scaler(x.view()).unwrap();
        assert_eq!(p.min, vec![0.0, 10.0]);
        assert_eq!(p.max, vec![4.0, 20.0]);
        let y = apply_scaler(x.view(), &p).unwrap();
        assert_eq!(y, array![[0.0, 0.0], [1.0, 1.0]]);

        let single = array![[3.0, -1.0]];
        let p = fit_scaler(single.view()).unwrap();
        assert_eq!(p.min, p.max);
        assert_eq!(apply_scaler(single.view(), &p).unwrap(), array![[0.0, 0.0]]);
    }

    #[test]
    fn scaler_errors_and_clamping() {
        let empty = Array2::<f64>::zeros((0, 3));
        assert!(matches!(fit_scaler(empty.view()), Err(Error::EmptyInput)));
        let p = ScalerParams { min: vec![0.0, 0.0], max: vec![1.0, 2.0] };
        let x = array![[2.0, -1.0]];
        assert_eq!(apply_scaler(x.view(), &p).unwrap(), array![[1.0, 0.0]]);
        let bad = array![[1.0, 2.0, 3.0]];
        assert!(matches!(apply_scaler(bad.view(), &p), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn scaler_file_round_trip() {
        let p = ScalerParams { min: vec![0.1, -3.0e-7], max: vec![1.0 / 3.0, 2.5e10] };
        assert_eq!(ScalerParams::from_toml(&p.to_toml()).unwrap(), p);
        assert!(ScalerParams::from_toml("version = 9\nmin = []\nmax = []\n").is_err());
    }

    #[test]
    fn split_sizes_and_determinism() {
        let labels: Vec<Label> = (0..10).map(|i| Label::from_bool(i % 3 == 0)).collect();
        let s = split_dataset(&labels, 3).unwrap();
        assert_eq!((s.train_indices.len(), s.val_indices.len(), s.test_indices.len()), (8, 1, 1));
        assert_eq!(split_dataset(&labels, 3).unwrap(), s);
        assert!(matches!(split_dataset(&labels[..9], 3), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn split_matches_vtac_class_ratio() {
        let labels: Vec<Label> = (0..5037).map(|i| Label::from_bool(i < 1441)).collect();
        let s = split_dataset(&labels, 11).unwrap();
        let pos = |idx: &[usize]| idx.iter().filter(|&&i| labels[i].is_true()).count();
        assert_eq!(s.test_indices.len(), 503);
        assert!((143..=145).contains(&pos(&s.test_indices)));
        assert!((143..=145).contains(&pos(&s.val_indices)));
        assert_eq!(s.len(), 5037);
    }
}
