//! Adam with bias correction.

use ndarray::{Array2, Zip};

use super::layers::Param;
use crate::{Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step_count: u64,
    first_moment: Vec<Array2<f64>>,
    second_moment: Vec<Array2<f64>>,
}

impl Adam {
    pub fn new(learning_rate: f64) -> Self {
        Adam {
            learning_rate,
            beta1: ADAM_BETA1,
            beta2: ADAM_BETA2,
            eps: ADAM_EPS,
            step_count: 0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        }
    }

    /// One update of every parameter from its `grad`. Moment buffers are
    /// created on the first call and must keep matching shapes afterwards.
    pub fn step(&mut self, params: &mut [&mut Param]) -> Result<()> {
        if self.step_count == 0 && self.first_moment.is_empty() {
            self.first_moment = params.iter().map(|p| Array2::zeros(p.value.raw_dim())).collect();
            self.second_moment = self.first_moment.clone();
        }
        if self.first_moment.len() != params.len() {
            return Err(Error::ShapeMismatch(format!(
                "optimizer tracks {} parameters, got {}",
                self.first_moment.len(),
                params.len()
            )));
        }
        for (p, m) in params.iter().zip(&self.first_moment) {
            if p.value.dim() != m.dim() || p.grad.dim() != m.dim() {
                return Err(Error::ShapeMismatch(format!("optimizer state {:?} vs parameter {:?}", m.dim(), p.value.dim())));
            }
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let (b1, b2, eps, lr) = (self.beta1, self.beta2, self.eps, self.learning_rate);
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        for ((p, m), v) in params.iter_mut().zip(&mut self.first_moment).zip(&mut self.second_moment) {
            let Param { value, grad } = &mut **p;
            Zip::from(value).and(&*grad).and(m).and(v).for_each(|w, &g, m, v| {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *w -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            });
        }
        Ok(())
    }
}
