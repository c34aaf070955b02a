//! Layer primitives. Every activation is a `B × T × F` tensor; the feature
//! path uses `T = 1`. Layers that act on the last axis treat the `B·T`
//! positions as independent rows.

use ndarray::{s, Array1, Array2, Array3, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::rng::ChaCha8Rng;
use crate::{Error, Result};

/// A trainable tensor and its gradient from the last backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub value: Array2<f64>,
    pub grad: Array2<f64>,
}

impl Param {
    pub fn new(value: Array2<f64>) -> Self {
        let grad = Array2::zeros(value.raw_dim());
        Param { value, grad }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Param::new(Array2::zeros((rows, cols)))
    }

    pub fn filled(rows: usize, cols: usize, v: f64) -> Self {
        Param::new(Array2::from_elem((rows, cols), v))
    }

    /// He-normal: N(0, 2/fan_in).
    pub fn he_normal(rows: usize, cols: usize, fan_in: usize, rng: &mut ChaCha8Rng) -> Self {
        let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
        Param::new(Array2::from_shape_simple_fn((rows, cols), || normal.sample(rng)))
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}

/// Shared interface of all layers.
///
/// `forward` runs in training mode and caches what `backward` needs;
/// `infer` is side-effect free.
pub trait Layer: Send + Sync {
    fn name(&self) -> &'static str;

    /// `(T, F)` produced from an input of `(T, F)`.
    fn output_shape(&self, input: (usize, usize)) -> Result<(usize, usize)>;

    fn infer(&self, x: &Array3<f64>) -> Result<Array3<f64>>;

    fn forward(&mut self, x: &Array3<f64>, rng: &mut ChaCha8Rng) -> Result<Array3<f64>>;

    /// Gradient w.r.t. the input of the last `forward`; parameter gradients
    /// are overwritten.
    fn backward(&mut self, grad: &Array3<f64>) -> Result<Array3<f64>>;

    fn params(&self) -> Vec<&Param> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        Vec::new()
    }

    /// Non-trainable state saved with the model (batchnorm running stats).
    fn buffers(&self) -> Vec<&Array2<f64>> {
        Vec::new()
    }

    /// Parameter values then buffers, mutably.
    fn state_mut(&mut self) -> Vec<&mut Array2<f64>> {
        self.params_mut().into_iter().map(|p| &mut p.value).collect()
    }

    fn set_dropout(&mut self, _p: f64) {}
}

fn shape_err(layer: &str, what: String) -> Error {
    Error::ShapeMismatch(format!("{layer}: {what}"))
}

/// `(B·T) × F` view of a standard-layout tensor.
pub(crate) fn rows(x: &Array3<f64>) -> ArrayView2<'_, f64> {
    let (b, t, f) = x.dim();
    x.view().into_shape_with_order((b * t, f)).expect("standard layout")
}

pub(crate) fn unrows(x: Array2<f64>, b: usize, t: usize) -> Array3<f64> {
    let f = x.ncols();
    x.as_standard_layout().into_owned().into_shape_with_order((b, t, f)).expect("row count matches")
}

fn expect_cache<'a, T>(cache: &'a Option<T>, layer: &str) -> Result<&'a T> {
    cache.as_ref().ok_or_else(|| shape_err(layer, "backward called before forward".into()))
}

fn check_grad_shape(layer: &str, grad: &Array3<f64>, expected: (usize, usize, usize)) -> Result<()> {
    if grad.dim() != expected {
        return Err(shape_err(layer, format!("gradient shape {:?}, expected {:?}", grad.dim(), expected)));
    }
    Ok(())
}

/// Affine map on the last axis: `y = x·W + b`, `W` is `in × out`.
#[derive(Debug, Clone)]
pub struct Dense {
    pub weight: Param,
    pub bias: Param,
    input: Option<Array3<f64>>,
}

impl Dense {
    pub fn new(n_in: usize, n_out: usize, rng: &mut ChaCha8Rng) -> Self {
        Dense { weight: Param::he_normal(n_in, n_out, n_in, rng), bias: Param::zeros(1, n_out), input: None }
    }

    pub fn from_params(weight: Array2<f64>, bias: Array1<f64>) -> Self {
        let n = bias.len();
        Dense { weight: Param::new(weight), bias: Param::new(bias.into_shape_with_order((1, n)).unwrap()), input: None }
    }

    fn check(&self, f: usize) -> Result<()> {
        if f != self.weight.value.nrows() {
            return Err(shape_err("dense", format!("input width {f}, expected {}", self.weight.value.nrows())));
        }
        Ok(())
    }
}

impl Layer for Dense {
    fn name(&self) -> &'static str {
        "dense"
    }

    fn output_shape(&self, (t, f): (usize, usize)) -> Result<(usize, usize)> {
        self.check(f)?;
        Ok((t, self.weight.value.ncols()))
    }

    fn infer(&self, x: &Array3<f64>) -> Result<Array3<f64>> {
        let (b, t, f) = x.dim();
        self.check(f)?;
        let y = rows(x).dot(&self.weight.value) + &self.bias.value;
        Ok(unrows(y, b, t))
    }

    fn forward(&mut self, x: &Array3<f64>, _rng: &mut ChaCha8Rng) -> Result<Array3<f64>> {
        let y = self.infer(x)?;
        self.input = Some(x.clone());
        Ok(y)
    }

    fn backward(&mut self, grad: &Array3<f64>) -> Result<Array3<f64>> {
        let x = expect_cache(&self.input, "dense")?;
        let (b, t, _) = x.dim();
        check_grad_shape("dense", grad, (b, t, self.weight.value.ncols()))?;
        let g = rows(grad);
        self.weight.grad = rows(x).t().dot(&g);
        self.bias.grad = g.sum_axis(Axis(0)).insert_axis(Axis(0));
        Ok(unrows(g.dot(&self.weight.value.t()), b, t))
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.weight, &mut self.bias]
    }
}

#[derive(Debug, Clone, Default)]
pub struct Relu {
    mask: Option<Array3<bool>>,
}

impl Relu {
    pub fn new() -> Self {
        Relu::default()
    }
}

impl Layer for Relu {
    fn name(&self) -> &'static str {
        "relu"
    }

    fn output_shape(&self, input: (usize, usize)) -> Result<(usize, usize)> {
        Ok(input)
    }

    fn infer(&self, x: &Array3<f64>) -> Result<Array3<f64>> {
        Ok(x.mapv(|v| v.max(0.0)))
    }

    fn forward(&mut self, x: &Array3<f64>, _rng: &mut ChaCha8Rng) -> Result<Array3<f64>> {
        self.mask = Some(x.mapv(|v| v > 0.0));
        self.infer(x)
    }

    fn backward(&mut self, grad: &Array3<f64>) -> Result<Array3<f64>> {
        let mask = expect_cache(&self.mask, "relu")?;
        check_grad_shape("relu", grad, mask.dim())?;
        let mut out = grad.clone();
        out.zip_mut_with(mask, |g, &m| {
            if !m {
                *g = 0.0
            }
        });
        Ok(out)
    }
}

pub const BATCHNORM_MOMENTUM: f64 = 0.9;
pub const BATCHNORM_EPS: f64 = 1e-5;

/// Normalizes each feature of the last axis over the `B·T` rows.
#[derive(Debug, Clone)]
pub struct BatchNorm {
    pub gamma: Param,
    pub beta: Param,
    pub running_mean: Array2<f64>,
    pub running_var: Array2<f64>,
    pub momentum: f64,
    pub eps: f64,
    cache: Option<BatchNormCache>,
}

#[derive(Debug, Clone)]
struct BatchNormCache {
    x_hat: Array2<f64>,
    inv_std: Array1<f64>,
    shape: (usize, usize, usize),
}

impl BatchNorm {
    pub fn new(features: usize) -> Self {
        BatchNorm {
            gamma: Param::filled(1, features, 1.0),
            beta: Param::zeros(1, features),
            running_mean: Array2::zeros((1, features)),
            running_var: Array2::ones((1, features)),
            momentum: BATCHNORM_MOMENTUM,
            eps: BATCHNORM_EPS,
            cache: None,
        }
    }

    pub fn features(&self) -> usize {
        self.gamma.value.ncols()
    }

    fn check(&self, f: usize) -> Result<()> {
        if f != self.features() {
            return Err(shape_err("batchnorm", format!("input width {f}, expected {}", self.features())));
        }
        Ok(())
    }
}

impl Layer for BatchNorm {
    fn name(&self) -> &'static str {
        "batchnorm"
    }

    fn output_shape(&self, (t, f): (usize, usize)) -> Result<(usize, usize)> {
        self.check(f)?;
        Ok((t, f))
    }

    fn infer(&self, x: &Array3<f64>) -> Result<Array3<f64>> {
        let (b, t, f) = x.dim();
        self.check(f)?;
        let inv_std = self.running_var.mapv(|v| 1.0 / (v + self.eps).sqrt());
        let y = (&rows(x) - &self.running_mean) * &inv_std * &self.gamma.value + &self.beta.value;
        Ok(unrows(y, b, t))
    }

    fn forward(&mut self, x: &Array3<f64>, _rng: &mut ChaCha8Rng) -> Result<Array3<f64>> {
        let (b, t, f) = x.dim();
        self.check(f)?;
        let n = b * t;
        if n < 2 {
            return Err(Error::BatchTooSmall(n));
        }
        let xr = rows(x);
        let mean = xr.mean_axis(Axis(0)).expect("non-empty");
        let centered = &xr - &mean;
        let var = centered.mapv(|v| v * v).mean_axis(Axis(0)).expect("non-empty");
        let inv_std = var.mapv(|v| 1.0 / (v + self.eps).sqrt());
        let x_hat = centered * &inv_std;
        let y = &x_hat * &self.gamma.value + &self.beta.value;

        let m = self.momentum;
        self.running_mean.row_mut(0).zip_mut_with(&mean, |r, &v| *r = m * *r + (1.0 - m) * v);
        self.running_var.row_mut(0).zip_mut_with(&var, |r, &v| *r = m * *r + (1.0 - m) * v);
        self.cache = Some(BatchNormCache { x_hat, inv_std, shape: (b, t, f) });
        Ok(unrows(y, b, t))
    }

    fn backward(&mut self, grad: &Array3<f64>) -> Result<Array3<f64>> {
        let cache = expect_cache(&self.cache, "batchnorm")?;
        check_grad_shape("batchnorm", grad, cache.shape)?;
        let (b, t, _) = cache.shape;
        let n = (b * t) as f64;
        let dy = rows(grad);
        self.gamma.grad = (&dy * &cache.x_hat).sum_axis(Axis(0)).insert_axis(Axis(0));
        self.beta.grad = dy.sum_axis(Axis(0)).insert_axis(Axis(0));
        let dx_hat = &dy * &self.gamma.value;
        let sum_dx_hat = dx_hat.sum_axis(Axis(0));
        let sum_dx_hat_xhat = (&dx_hat * &cache.x_hat).sum_axis(Axis(0));
        let dx = (dx_hat * n - &sum_dx_hat - &cache.x_hat * &sum_dx_hat_xhat) * &cache.inv_std / n;
        Ok(unrows(dx, b, t))
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.gamma, &self.beta]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.gamma, &mut self.beta]
    }

    fn buffers(&self) -> Vec<&Array2<f64>> {
        vec![&self.running_mean, &self.running_var]
    }

    fn state_mut(&mut self) -> Vec<&mut Array2<f64>> {
        vec![&mut self.gamma.value, &mut self.beta.value, &mut self.running_mean, &mut self.running_var]
    }
}

/// Inverted dropout: survivors are scaled by `1/(1-p)` during training.
#[derive(Debug, Clone)]
pub struct Dropout {
    pub p: f64,
    mask: Option<Array3<f64>>,
}

impl Dropout {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::InvalidHyperparams(format!("dropout p must lie in [0, 1), got {p}")));
        }
        Ok(Dropout { p, mask: None })
    }
}

impl Layer for Dropout {
    fn name(&self) -> &'static str {
        "dropout"
    }

    fn output_shape(&self, input: (usize, usize)) -> Result<(usize, usize)> {
        Ok(input)
    }

    fn infer(&self, x: &Array3<f64>) -> Result<Array3<f64>> {
        Ok(x.clone())
    }

    fn forward(&mut self, x: &Array3<f64>, rng: &mut ChaCha8Rng) -> Result<Array3<f64>> {
        if self.p == 0.0 {
            self.mask = Some(Array3::ones(x.raw_dim()));
            return Ok(x.clone());
        }
        let keep = 1.0 / (1.0 - self.p);
        let p = self.p;
        let mask = Array3::from_shape_simple_fn(x.raw_dim(), || if rng.random::<f64>() < p { 0.0 } else { keep });
        let y = x * &mask;
        self.mask = Some(mask);
        Ok(y)
    }

    fn backward(&mut self, grad: &Array3<f64>) -> Result<Array3<f64>> {
        let mask = expect_cache(&self.mask, "dropout")?;
        check_grad_shape("dropout", grad, mask.dim())?;
        Ok(grad * mask)
    }

    fn set_dropout(&mut self, p: f64) {
        self.p = p;
    }
}

/// Non-overlapping max over windows of two time steps; an odd tail step is
/// dropped. Ties route the gradient to the earlier step.
#[derive(Debug, Clone, Default)]
pub struct MaxPool1d {
    cache: Option<(Array3<u8>, (usize, usize, usize))>,
}

impl MaxPool1d {
    pub const POOL: usize = 2;

    pub fn new() -> Self {
        MaxPool1d::default()
    }

    fn pool(x: &Array3<f64>) -> Result<(Array3<f64>, Array3<u8>)> {
        let (b, t, k) = x.dim();
        if t < Self::POOL {
            return Err(shape_err("maxpool", format!("needs at least 2 time steps, got {t}")));
        }
        let t_out = t / Self::POOL;
        let mut y = Array3::zeros((b, t_out, k));
        let mut arg = Array3::zeros((b, t_out, k));
        for bi in 0..b {
            for to in 0..t_out {
                for c in 0..k {
                    let (first, second) = (x[[bi, 2 * to, c]], x[[bi, 2 * to + 1, c]]);
                    if second > first {
                        y[[bi, to, c]] = second;
                        arg[[bi, to, c]] = 1;
                    } else {
                        y[[bi, to, c]] = first;
                    }
                }
            }
        }
        Ok((y, arg))
    }
}

impl Layer for MaxPool1d {
    fn name(&self) -> &'static str {
        "maxpool1d"
    }

    fn output_shape(&self, (t, f): (usize, usize)) -> Result<(usize, usize)> {
        if t < Self::POOL {
            return Err(shape_err("maxpool", format!("needs at least 2 time steps, got {t}")));
        }
        Ok((t / Self::POOL, f))
    }

    fn infer(&self, x: &Array3<f64>) -> Result<Array3<f64>> {
        Ok(Self::pool(x)?.0)
    }

    fn forward(&mut self, x: &Array3<f64>, _rng: &mut ChaCha8Rng) -> Result<Array3<f64>> {
        let (y, arg) = Self::pool(x)?;
        self.cache = Some((arg, x.dim()));
        Ok(y)
    }

    fn backward(&mut self, grad: &Array3<f64>) -> Result<Array3<f64>> {
        let (arg, shape) = expect_cache(&self.cache, "maxpool")?;
        check_grad_shape("maxpool", grad, arg.dim())?;
        let mut dx = Array3::zeros(*shape);
        for ((bi, to, c), &g) in grad.indexed_iter() {
            dx[[bi, 2 * to + arg[[bi, to, c]] as usize, c]] = g;
        }
        Ok(dx)
    }
}

/// Mean over the time axis: `B × T × K → B × 1 × K`.
#[derive(Debug, Clone, Default)]
pub struct GlobalAvgPool {
    input_shape: Option<(usize, usize, usize)>,
}

impl GlobalAvgPool {
    pub fn new() -> Self {
        GlobalAvgPool::default()
    }
}

impl Layer for GlobalAvgPool {
    fn name(&self) -> &'static str {
        "global_avg_pool"
    }

    fn output_shape(&self, (t, f): (usize, usize)) -> Result<(usize, usize)> {
        if t == 0 {
            return Err(shape_err("global_avg_pool", "empty time axis".into()));
        }
        Ok((1, f))
    }

    fn infer(&self, x: &Array3<f64>) -> Result<Array3<f64>> {
        let mean = x.mean_axis(Axis(1)).ok_or_else(|| shape_err("global_avg_pool", "empty time axis".into()))?;
        Ok(mean.insert_axis(Axis(1)))
    }

    fn forward(&mut self, x: &Array3<f64>, _rng: &mut ChaCha8Rng) -> Result<Array3<f64>> {
        let y = self.infer(x)?;
        self.input_shape = Some(x.dim());
        Ok(y)
    }

    fn backward(&mut self, grad: &Array3<f64>) -> Result<Array3<f64>> {
        let (b, t, k) = *expect_cache(&self.input_shape, "global_avg_pool")?;
        check_grad_shape("global_avg_pool", grad, (b, 1, k))?;
        let scaled = grad / t as f64;
        Ok(scaled.broadcast((b, t, k)).expect("broadcast over time").to_owned())
    }
}

/// Cross-correlation over time with "same" zero padding of `(F-1)/2` on each
/// side. Weights are stored im2col style as `(F·C) × K` with row `f·C + c`.
#[derive(Debug, Clone)]
pub struct Conv1d {
    pub weight: Param,
    pub bias: Param,
    pub in_channels: usize,
    pub filter_size: usize,
    pub stride: usize,
    cache: Option<(Array2<f64>, (usize, usize, usize))>,
}

impl Conv1d {
    pub fn new(in_channels: usize, n_filters: usize, filter_size: usize, stride: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        Self::check_spec(n_filters, filter_size, stride)?;
        let fan_in = filter_size * in_channels;
        Ok(Conv1d {
            weight: Param::he_normal(fan_in, n_filters, fan_in, rng),
            bias: Param::zeros(1, n_filters),
            in_channels,
            filter_size,
            stride,
            cache: None,
        })
    }

    /// From a kernel indexed `[k, f, c]`.
    pub fn from_kernel(kernel: &Array3<f64>, bias: Array1<f64>, stride: usize) -> Result<Self> {
        let (k, f, c) = kernel.dim();
        Self::check_spec(k, f, stride)?;
        if bias.len() != k {
            return Err(shape_err("conv1d", format!("bias length {} for {k} filters", bias.len())));
        }
        let weight = Array2::from_shape_fn((f * c, k), |(row, kk)| kernel[[kk, row / c, row % c]]);
        Ok(Conv1d {
            weight: Param::new(weight),
            bias: Param::new(bias.into_shape_with_order((1, k)).unwrap()),
            in_channels: c,
            filter_size: f,
            stride,
            cache: None,
        })
    }

    fn check_spec(n_filters: usize, filter_size: usize, stride: usize) -> Result<()> {
        if n_filters == 0 || filter_size == 0 || filter_size % 2 == 0 || stride == 0 {
            return Err(Error::InvalidHyperparams(format!(
                "conv1d needs K >= 1, odd F >= 1 and stride >= 1 (K={n_filters}, F={filter_size}, stride={stride})"
            )));
        }
        Ok(())
    }

    pub fn n_filters(&self) -> usize {
        self.weight.value.ncols()
    }

    fn out_len(&self, t: usize) -> usize {
        t.div_ceil(self.stride)
    }

    fn im2col(&self, x: &Array3<f64>) -> Result<Array2<f64>> {
        let (b, t, c) = x.dim();
        if c != self.in_channels {
            return Err(shape_err("conv1d", format!("{c} input channels, expected {}", self.in_channels)));
        }
        if t == 0 {
            return Err(shape_err("conv1d", "empty time axis".into()));
        }
        let (f, pad) = (self.filter_size, self.filter_size / 2);
        let t_out = self.out_len(t);
        let mut cols = Array2::zeros((b * t_out, f * c));
        for bi in 0..b {
            for to in 0..t_out {
                let mut row = cols.row_mut(bi * t_out + to);
                for fi in 0..f {
                    let pos = (to * self.stride + fi) as isize - pad as isize;
                    if pos >= 0 && (pos as usize) < t {
                        row.slice_mut(s![fi * c..(fi + 1) * c]).assign(&x.slice(s![bi, pos as usize, ..]));
                    }
                }
            }
        }
        Ok(cols)
    }
}

impl Layer for Conv1d {
    fn name(&self) -> &'static str {
        "conv1d"
    }

    fn output_shape(&self, (t, c): (usize, usize)) -> Result<(usize, usize)> {
        if c != self.in_channels || t == 0 {
            return Err(shape_err("conv1d", format!("input ({t}, {c}) for {} channels", self.in_channels)));
        }
        Ok((self.out_len(t), self.n_filters()))
    }

    fn infer(&self, x: &Array3<f64>) -> Result<Array3<f64>> {
        let cols = self.im2col(x)?;
        let y = cols.dot(&self.weight.value) + &self.bias.value;
        Ok(unrows(y, x.dim().0, self.out_len(x.dim().1)))
    }

    fn forward(&mut self, x: &Array3<f64>, _rng: &mut ChaCha8Rng) -> Result<Array3<f64>> {
        let cols = self.im2col(x)?;
        let y = cols.dot(&self.weight.value) + &self.bias.value;
        let out = unrows(y, x.dim().0, self.out_len(x.dim().1));
        self.cache = Some((cols, x.dim()));
        Ok(out)
    }

    fn backward(&mut self, grad: &Array3<f64>) -> Result<Array3<f64>> {
        let (cols, (b, t, c)) = expect_cache(&self.cache, "conv1d")?;
        let (b, t, c) = (*b, *t, *c);
        let t_out = self.out_len(t);
        check_grad_shape("conv1d", grad, (b, t_out, self.n_filters()))?;
        let g = rows(grad);
        self.weight.grad = cols.t().dot(&g);
        self.bias.grad = g.sum_axis(Axis(0)).insert_axis(Axis(0));
        let dcols = g.dot(&self.weight.value.t());
        let (f, pad) = (self.filter_size, self.filter_size / 2);
        let mut dx = Array3::zeros((b, t, c));
        for bi in 0..b {
            for to in 0..t_out {
                let row = dcols.row(bi * t_out + to);
                for fi in 0..f {
                    let pos = (to * self.stride + fi) as isize - pad as isize;
                    if pos >= 0 && (pos as usize) < t {
                        let mut dst = dx.slice_mut(s![bi, pos as usize, ..]);
                        dst += &row.slice(s![fi * c..(fi + 1) * c]);
                    }
                }
            }
        }
        Ok(dx)
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.weight, &mut self.bias]
    }
}
