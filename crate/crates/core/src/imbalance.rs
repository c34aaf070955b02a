//! Minority oversampling (SMOTE, ADASYN) and balanced class weights.
//!
//! `ratio` is the desired minority/majority count after resampling, so 1.0
//! balances the classes. Original rows are never touched; synthetic rows are
//! appended after them and always carry the minority label.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::{self, ChaCha8Rng, Stream};
use crate::{Error, Label, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResampleMethod {
    Smote,
    Adasyn,
    #[default]
    None,
}

impl std::str::FromStr for ResampleMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "smote" => Ok(ResampleMethod::Smote),
            "adasyn" => Ok(ResampleMethod::Adasyn),
            "none" => Ok(ResampleMethod::None),
            other => Err(Error::InvalidConfig(format!("unknown resampling method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResampleConfig {
    pub method: ResampleMethod,
    /// Target minority/majority ratio, in (0, 1].
    pub ratio: f64,
    pub k_neighbors: usize,
    pub seed: u64,
}

impl Default for ResampleConfig {
    fn default() -> Self {
        ResampleConfig { method: ResampleMethod::None, ratio: 1.0, k_neighbors: 5, seed: 0 }
    }
}

impl ResampleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ratio > 0.0 && self.ratio <= 1.0) {
            return Err(Error::InvalidConfig(format!("ratio {} outside (0, 1]", self.ratio)));
        }
        if self.k_neighbors == 0 {
            return Err(Error::InvalidConfig("k_neighbors must be at least 1".into()));
        }
        Ok(())
    }
}

/// Where one synthetic row came from: `row = features[seed] + gap·(features[neighbor] − features[seed])`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticOrigin {
    pub seed: usize,
    pub neighbor: usize,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resampled {
    pub features: Array2<f64>,
    pub labels: Vec<Label>,
    /// One entry per appended row, in order.
    pub origins: Vec<SyntheticOrigin>,
}

impl Resampled {
    fn unchanged(features: ArrayView2<'_, f64>, labels: &[Label]) -> Self {
        Resampled { features: features.to_owned(), labels: labels.to_vec(), origins: Vec::new() }
    }
}

fn squared_distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Exact k nearest neighbours of row `query` by Euclidean distance, among
/// the rows in `candidates` (all rows when `None`). The query itself is
/// excluded; ties resolve to the lower index.
pub fn k_nearest(points: ArrayView2<'_, f64>, query: usize, k: usize, candidates: Option<&[usize]>) -> Result<Vec<usize>> {
    if query >= points.nrows() {
        return Err(Error::InvalidInput(format!("query row {query} out of {} rows", points.nrows())));
    }
    let q = points.row(query);
    let mut scored: Vec<(f64, usize)> = match candidates {
        Some(list) => list
            .iter()
            .copied()
            .filter(|&i| i != query)
            .map(|i| (squared_distance(q, points.row(i)), i))
            .collect(),
        None => (0..points.nrows())
            .filter(|&i| i != query)
            .map(|i| (squared_distance(q, points.row(i)), i))
            .collect(),
    };
    if k > scored.len() {
        return Err(Error::NotEnoughNeighbors { k, available: scored.len() });
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(scored.into_iter().take(k).map(|(_, i)| i).collect())
}

struct ClassSplit {
    minority: Label,
    minority_rows: Vec<usize>,
    n_majority: usize,
}

fn class_split(labels: &[Label]) -> ClassSplit {
    let n_true = labels.iter().filter(|l| l.is_true()).count();
    let n_false = labels.len() - n_true;
    // ties: true alarms are treated as the minority
    let minority = if n_true <= n_false { Label::TrueAlarm } else { Label::FalseAlarm };
    let minority_rows = (0..labels.len()).filter(|&i| labels[i] == minority).collect();
    ClassSplit { minority, minority_rows, n_majority: n_true.max(n_false) }
}

/// Synthetic rows needed to reach `ratio · n_majority` minority rows.
pub fn synthetic_count(n_minority: usize, n_majority: usize, ratio: f64) -> usize {
    let target = (ratio * n_majority as f64).round() as usize;
    target.saturating_sub(n_minority)
}

fn check_inputs(features: ArrayView2<'_, f64>, labels: &[Label], config: &ResampleConfig) -> Result<()> {
    config.validate()?;
    if features.nrows() != labels.len() {
        return Err(Error::LengthMismatch(features.nrows(), labels.len()));
    }
    Ok(())
}

fn interpolate(features: ArrayView2<'_, f64>, origin: SyntheticOrigin) -> Vec<f64> {
    let (x, nn) = (features.row(origin.seed), features.row(origin.neighbor));
    x.iter().zip(nn.iter()).map(|(&a, &b)| a + origin.gap * (b - a)).collect()
}

fn append_rows(
    features: ArrayView2<'_, f64>,
    labels: &[Label],
    minority: Label,
    origins: Vec<SyntheticOrigin>,
) -> Result<Resampled> {
    let mut out = features.to_owned();
    for origin in &origins {
        let row = interpolate(features, *origin);
        out.push_row(ArrayView1::from(&row)).map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    }
    let mut out_labels = labels.to_vec();
    out_labels.extend(std::iter::repeat_n(minority, origins.len()));
    Ok(Resampled { features: out, labels: out_labels, origins })
}

/// Minority-class neighbour lists for every minority row.
fn minority_neighbors(features: ArrayView2<'_, f64>, rows: &[usize], k: usize) -> Result<Vec<Vec<usize>>> {
    rows.iter().map(|&r| k_nearest(features, r, k, Some(rows))).collect()
}

fn draw_origin(rng: &mut ChaCha8Rng, seed: usize, neighbors: &[usize]) -> SyntheticOrigin {
    let neighbor = neighbors[rng.random_range(0..neighbors.len())];
    let gap: f64 = rng.random();
    SyntheticOrigin { seed, neighbor, gap }
}

/// Interpolates between random minority rows and one of their `k` nearest
/// minority neighbours until the minority reaches `ratio · n_majority`.
pub fn smote(features: ArrayView2<'_, f64>, labels: &[Label], config: &ResampleConfig) -> Result<Resampled> {
    check_inputs(features, labels, config)?;
    let split = class_split(labels);
    let n_min = split.minority_rows.len();
    if n_min < 2 {
        return Err(Error::MinorityTooSmall(n_min));
    }
    let n_new = synthetic_count(n_min, split.n_majority, config.ratio);
    if n_new == 0 {
        return Ok(Resampled::unchanged(features, labels));
    }
    let k = config.k_neighbors.min(n_min - 1);
    let neighbors = minority_neighbors(features, &split.minority_rows, k)?;
    let mut rng = rng::stream(config.seed, Stream::Smote);
    let origins = (0..n_new)
        .map(|_| {
            let pick = rng.random_range(0..n_min);
            draw_origin(&mut rng, split.minority_rows[pick], &neighbors[pick])
        })
        .collect();
    append_rows(features, labels, split.minority, origins)
}

/// Splits `total` across `weights` proportionally with largest-remainder
/// rounding, so the parts sum to `total` exactly. Remainder ties go to the
/// lower index. All-zero weights fall back to a uniform split.
pub fn allocate(total: usize, weights: &[f64]) -> Vec<usize> {
    if weights.is_empty() {
        return Vec::new();
    }
    let sum: f64 = weights.iter().sum();
    let uniform;
    let weights = if sum > 0.0 {
        weights
    } else {
        uniform = vec![1.0; weights.len()];
        &uniform[..]
    };
    let sum: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut parts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = parts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        parts[i] += 1;
    }
    parts
}

/// Adaptive synthetic sampling: minority rows with more majority rows among
/// their `k` nearest neighbours (over all rows) receive proportionally more
/// synthetic samples. Interpolation partners are minority neighbours, as in
/// SMOTE.
pub fn adasyn(features: ArrayView2<'_, f64>, labels: &[Label], config: &ResampleConfig) -> Result<Resampled> {
    check_inputs(features, labels, config)?;
    let split = class_split(labels);
    let n_min = split.minority_rows.len();
    if n_min < 2 {
        return Err(Error::MinorityTooSmall(n_min));
    }
    let n_new = synthetic_count(n_min, split.n_majority, config.ratio);
    if n_new == 0 {
        return Ok(Resampled::unchanged(features, labels));
    }
    let k_all = config.k_neighbors.min(features.nrows() - 1);
    let hardness = split
        .minority_rows
        .iter()
        .map(|&r| {
            let nn = k_nearest(features, r, k_all, None)?;
            let majority = nn.iter().filter(|&&i| labels[i] != split.minority).count();
            Ok(majority as f64 / k_all as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let allocation = allocate(n_new, &hardness);

    let k = config.k_neighbors.min(n_min - 1);
    let neighbors = minority_neighbors(features, &split.minority_rows, k)?;
    let mut rng = rng::stream(config.seed, Stream::Adasyn);
    let mut origins = Vec::with_capacity(n_new);
    for (pick, &count) in allocation.iter().enumerate() {
        for _ in 0..count {
            origins.push(draw_origin(&mut rng, split.minority_rows[pick], &neighbors[pick]));
        }
    }
    append_rows(features, labels, split.minority, origins)
}

/// Dispatches on `config.method`.
pub fn resample(features: ArrayView2<'_, f64>, labels: &[Label], config: &ResampleConfig) -> Result<Resampled> {
    match config.method {
        ResampleMethod::Smote => smote(features, labels, config),
        ResampleMethod::Adasyn => adasyn(features, labels, config),
        ResampleMethod::None => Ok(Resampled::unchanged(features, labels)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub weight_true: f64,
    pub weight_false: f64,
}

impl ClassWeights {
    pub fn weight(&self, label: Label) -> f64 {
        if label.is_true() {
            self.weight_true
        } else {
            self.weight_false
        }
    }
}

/// Balanced weights `N / (2·N_c)`; the weighted sample count equals N.
pub fn class_weights(labels: &[Label]) -> Result<ClassWeights> {
    let n = labels.len() as f64;
    let n_true = labels.iter().filter(|l| l.is_true()).count() as f64;
    let n_false = n - n_true;
    if n_true == 0.0 || n_false == 0.0 {
        return Err(Error::SingleClass);
    }
    Ok(ClassWeights { weight_true: n / (2.0 * n_true), weight_false: n / (2.0 * n_false) })
}
