//! Adam with bias correction; real and imaginary parts are independent scalars.

use crate::error::DcrError;
use crate::model::{DcrNetModel, Gradients};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Moment estimates for every trainable buffer of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub cfg: AdamConfig,
    pub step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    trainable: Vec<bool>,
}

impl Adam {
    pub fn new(model: &DcrNetModel, cfg: AdamConfig) -> Self {
        let layout = DcrNetModel::layout(model.arch);
        let zeros: Vec<Vec<f64>> = layout.iter().map(|t| vec![0.0; t.len()]).collect();
        Self {
            cfg,
            step: 0,
            m: zeros.clone(),
            v: zeros,
            trainable: layout.iter().map(|t| t.trainable).collect(),
        }
    }

    /// One update `p -= lr * m_hat / (sqrt(v_hat) + eps)`.
    pub fn update(&mut self, model: &mut DcrNetModel, grads: &Gradients, lr: f64) -> Result<()> {
        if !(lr >= 0.0 && lr.is_finite()) {
            return Err(DcrError::Param(format!(
                "learning rate must be finite and nonnegative, got {lr}"
            )));
        }
        if grads.tensors.len() != self.m.len() {
            return Err(DcrError::Shape(
                "gradients do not match the optimizer state".into(),
            ));
        }
        self.step += 1;
        let t = self.step as i32;
        let AdamConfig { beta1, beta2, eps } = self.cfg;
        let (c1, c2) = (1.0 - beta1.powi(t), 1.0 - beta2.powi(t));
        let mut bufs = model.buffers_mut();
        for (k, buf) in bufs.iter_mut().enumerate() {
            if !self.trainable[k] {
                continue;
            }
            let g = &grads.tensors[k];
            if g.len() != buf.len() {
                return Err(DcrError::Shape(format!(
                    "gradient {k} has {} entries, buffer {}",
                    g.len(),
                    buf.len()
                )));
            }
            for (i, p) in buf.iter_mut().enumerate() {
                let m = &mut self.m[k][i];
                let v = &mut self.v[k][i];
                *m = beta1 * *m + (1.0 - beta1) * g[i];
                *v = beta2 * *v + (1.0 - beta2) * g[i] * g[i];
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            }
        }
        Ok(())
    }
}
