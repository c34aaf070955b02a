//! Multi-head scaled dot-product self-attention without masking.

use ndarray::{s, Array2, Array3, ArrayView2, Axis};

use super::layers::{Layer, Param};
use crate::rng::ChaCha8Rng;
use crate::{Error, Result};

/// Self-attention over a `B × T × K` tensor. Each projection is a bias-free
/// `K × K` matrix applied on the right; head `h` owns columns
/// `h·d_k..(h+1)·d_k` of the query, key and value projections.
#[derive(Debug, Clone)]
pub struct MultiHeadAttention {
    pub w_query: Param,
    pub w_key: Param,
    pub w_value: Param,
    pub w_output: Param,
    pub n_heads: usize,
    cache: Option<Vec<SampleCache>>,
}

#[derive(Debug, Clone)]
struct SampleCache {
    x: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    /// Row-stochastic attention matrices, one per head.
    attn: Vec<Array2<f64>>,
    concat: Array2<f64>,
}

/// Row-wise softmax, max-shifted.
pub fn softmax_rows(scores: &mut Array2<f64>) {
    for mut row in scores.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
}

impl MultiHeadAttention {
    pub fn new(model_dim: usize, n_heads: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        Self::check_dims(model_dim, n_heads)?;
        Ok(MultiHeadAttention {
            w_query: Param::he_normal(model_dim, model_dim, model_dim, rng),
            w_key: Param::he_normal(model_dim, model_dim, model_dim, rng),
            w_value: Param::he_normal(model_dim, model_dim, model_dim, rng),
            w_output: Param::he_normal(model_dim, model_dim, model_dim, rng),
            n_heads,
            cache: None,
        })
    }

    pub fn from_params(w_query: Array2<f64>, w_key: Array2<f64>, w_value: Array2<f64>, w_output: Array2<f64>, n_heads: usize) -> Result<Self> {
        let k = w_query.nrows();
        Self::check_dims(k, n_heads)?;
        for w in [&w_query, &w_key, &w_value, &w_output] {
            if w.dim() != (k, k) {
                return Err(Error::ShapeMismatch(format!("attention projection {:?}, expected ({k}, {k})", w.dim())));
            }
        }
        Ok(MultiHeadAttention {
            w_query: Param::new(w_query),
            w_key: Param::new(w_key),
            w_value: Param::new(w_value),
            w_output: Param::new(w_output),
            n_heads,
            cache: None,
        })
    }

    fn check_dims(model_dim: usize, n_heads: usize) -> Result<()> {
        if n_heads == 0 || model_dim == 0 || model_dim % n_heads != 0 {
            return Err(Error::DimensionNotDivisible { model_dim, heads: n_heads });
        }
        Ok(())
    }

    pub fn model_dim(&self) -> usize {
        self.w_query.value.nrows()
    }

    pub fn key_dim(&self) -> usize {
        self.model_dim() / self.n_heads
    }

    fn check_input(&self, x: &Array3<f64>) -> Result<()> {
        let (_, t, k) = x.dim();
        if k != self.model_dim() || t == 0 {
            return Err(Error::ShapeMismatch(format!("attention input (T={t}, K={k}), model dim {}", self.model_dim())));
        }
        Ok(())
    }

    fn sample_forward(&self, x: ArrayView2<'_, f64>) -> SampleCache {
        let dk = self.key_dim();
        let scale = 1.0 / (dk as f64).sqrt();
        let q = x.dot(&self.w_query.value);
        let k = x.dot(&self.w_key.value);
        let v = x.dot(&self.w_value.value);
        let mut concat = Array2::zeros(q.raw_dim());
        let mut attn = Vec::with_capacity(self.n_heads);
        for h in 0..self.n_heads {
            let cols = s![.., h * dk..(h + 1) * dk];
            let mut scores = q.slice(cols).dot(&k.slice(cols).t()) * scale;
            softmax_rows(&mut scores);
            concat.slice_mut(cols).assign(&scores.dot(&v.slice(cols)));
            attn.push(scores);
        }
        SampleCache { x: x.to_owned(), q, k, v, attn, concat }
    }

    /// Attention matrices `[head][query, key]` for each sample.
    pub fn attention_scores(&self, x: &Array3<f64>) -> Result<Vec<Vec<Array2<f64>>>> {
        self.check_input(x)?;
        Ok(x.outer_iter().map(|xb| self.sample_forward(xb).attn).collect())
    }
}

impl Layer for MultiHeadAttention {
    fn name(&self) -> &'static str {
        "multi_head_attention"
    }

    fn output_shape(&self, (t, k): (usize, usize)) -> Result<(usize, usize)> {
        if k != self.model_dim() || t == 0 {
            return Err(Error::ShapeMismatch(format!("attention input (T={t}, K={k}), model dim {}", self.model_dim())));
        }
        Ok((t, k))
    }

    fn infer(&self, x: &Array3<f64>) -> Result<Array3<f64>> {
        self.check_input(x)?;
        let mut y = Array3::zeros(x.raw_dim());
        for (xb, mut yb) in x.outer_iter().zip(y.outer_iter_mut()) {
            let c = self.sample_forward(xb);
            yb.assign(&c.concat.dot(&self.w_output.value));
        }
        Ok(y)
    }

    fn forward(&mut self, x: &Array3<f64>, _rng: &mut ChaCha8Rng) -> Result<Array3<f64>> {
        self.check_input(x)?;
        let mut y = Array3::zeros(x.raw_dim());
        let mut caches = Vec::with_capacity(x.dim().0);
        for (xb, mut yb) in x.outer_iter().zip(y.outer_iter_mut()) {
            let c = self.sample_forward(xb);
            yb.assign(&c.concat.dot(&self.w_output.value));
            caches.push(c);
        }
        self.cache = Some(caches);
        Ok(y)
    }

    fn backward(&mut self, grad: &Array3<f64>) -> Result<Array3<f64>> {
        let caches = self.cache.as_ref().ok_or_else(|| Error::ShapeMismatch("attention: backward before forward".into()))?;
        let (t, kdim) = caches.first().map(|c| c.x.dim()).unwrap_or((0, self.model_dim()));
        if grad.dim() != (caches.len(), t, kdim) {
            return Err(Error::ShapeMismatch(format!("attention gradient {:?}", grad.dim())));
        }
        let dk = self.key_dim();
        let scale = 1.0 / (dk as f64).sqrt();
        let mut g_q = Array2::zeros((kdim, kdim));
        let mut g_k = Array2::zeros((kdim, kdim));
        let mut g_v = Array2::zeros((kdim, kdim));
        let mut g_o = Array2::zeros((kdim, kdim));
        let mut dx = Array3::zeros(grad.raw_dim());
        for ((c, gy), mut dxb) in caches.iter().zip(grad.outer_iter()).zip(dx.outer_iter_mut()) {
            g_o += &c.concat.t().dot(&gy);
            let d_concat = gy.dot(&self.w_output.value.t());
            let mut dq = Array2::zeros(c.q.raw_dim());
            let mut dkey = Array2::zeros(c.k.raw_dim());
            let mut dv = Array2::zeros(c.v.raw_dim());
            for (h, a) in c.attn.iter().enumerate() {
                let cols = s![.., h * dk..(h + 1) * dk];
                let d_head = d_concat.slice(cols);
                let da = d_head.dot(&c.v.slice(cols).t());
                dv.slice_mut(cols).assign(&a.t().dot(&d_head));
                let row_dot = (&da * a).sum_axis(Axis(1)).insert_axis(Axis(1));
                let ds = (da - &row_dot) * a * scale;
                dq.slice_mut(cols).assign(&ds.dot(&c.k.slice(cols)));
                dkey.slice_mut(cols).assign(&ds.t().dot(&c.q.slice(cols)));
            }
            g_q += &c.x.t().dot(&dq);
            g_k += &c.x.t().dot(&dkey);
            g_v += &c.x.t().dot(&dv);
            let d_in = dq.dot(&self.w_query.value.t()) + dkey.dot(&self.w_key.value.t()) + dv.dot(&self.w_value.value.t());
            dxb.assign(&d_in);
        }
        self.w_query.grad = g_q;
        self.w_key.grad = g_k;
        self.w_value.grad = g_v;
        self.w_output.grad = g_o;
        Ok(dx)
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.w_query, &self.w_key, &self.w_value, &self.w_output]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.w_query, &mut self.w_key, &mut self.w_value, &mut self.w_output]
    }
}
