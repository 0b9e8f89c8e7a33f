//! Batch normalization applied to the real and imaginary planes independently.

use crate::tensor::ComplexTensor;

pub const BN_EPS: f64 = 1e-5;
/// Fraction of the running statistics retained at each training batch.
pub const BN_MOMENTUM: f64 = 0.9;

/// Per-channel affine parameters and running statistics for each part.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexBn {
    pub gamma_re: Vec<f64>,
    pub beta_re: Vec<f64>,
    pub gamma_im: Vec<f64>,
    pub beta_im: Vec<f64>,
    pub mean_re: Vec<f64>,
    pub var_re: Vec<f64>,
    pub mean_im: Vec<f64>,
    pub var_im: Vec<f64>,
}

/// Saved normalized activations and inverse deviations of a training pass.
#[derive(Debug, Clone)]
pub struct BnCache {
    xhat: ComplexTensor,
    inv_re: Vec<f64>,
    inv_im: Vec<f64>,
    stats_re: Stats,
    stats_im: Stats,
}

/// Parameter gradients of one BN layer.
#[derive(Debug, Clone, PartialEq)]
pub struct BnGrad {
    pub gamma_re: Vec<f64>,
    pub beta_re: Vec<f64>,
    pub gamma_im: Vec<f64>,
    pub beta_im: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Stats {
    mean: Vec<f64>,
    var: Vec<f64>,
}

fn batch_stats(x: &[f64], dims: [usize; 4]) -> Stats {
    let [n, c, h, w] = dims;
    let p = h * w;
    let m = (n * p) as f64;
    let mut mean = vec![0.0; c];
    let mut var = vec![0.0; c];
    for ch in 0..c {
        let planes = || (0..n).flat_map(move |b| x[(b * c + ch) * p..(b * c + ch + 1) * p].iter());
        let mu = planes().sum::<f64>() / m;
        mean[ch] = mu;
        var[ch] = planes().map(|v| (v - mu) * (v - mu)).sum::<f64>() / m;
    }
    Stats { mean, var }
}

fn normalize(x: &[f64], dims: [usize; 4], mean: &[f64], inv: &[f64]) -> Vec<f64> {
    let [_, c, h, w] = dims;
    let p = h * w;
    x.iter()
        .enumerate()
        .map(|(i, &v)| (v - mean[(i / p) % c]) * inv[(i / p) % c])
        .collect()
}

fn affine(xhat: &[f64], dims: [usize; 4], gamma: &[f64], beta: &[f64]) -> Vec<f64> {
    let p = dims[2] * dims[3];
    let c = dims[1];
    xhat.iter()
        .enumerate()
        .map(|(i, &v)| gamma[(i / p) % c] * v + beta[(i / p) % c])
        .collect()
}

impl ComplexBn {
    /// Unit scale, zero offset, running mean 0 and running variance 1.
    pub fn new(c: usize) -> Self {
        Self {
            gamma_re: vec![1.0; c],
            beta_re: vec![0.0; c],
            gamma_im: vec![1.0; c],
            beta_im: vec![0.0; c],
            mean_re: vec![0.0; c],
            var_re: vec![1.0; c],
            mean_im: vec![0.0; c],
            var_im: vec![1.0; c],
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma_re.len()
    }

    /// Normalizes with the running statistics.
    pub fn forward_eval(&self, x: &ComplexTensor) -> ComplexTensor {
        let inv = |v: &[f64]| {
            v.iter()
                .map(|s| 1.0 / (s + BN_EPS).sqrt())
                .collect::<Vec<_>>()
        };
        let re = normalize(&x.re, x.dims, &self.mean_re, &inv(&self.var_re));
        let im = normalize(&x.im, x.dims, &self.mean_im, &inv(&self.var_im));
        ComplexTensor {
            dims: x.dims,
            re: affine(&re, x.dims, &self.gamma_re, &self.beta_re),
            im: affine(&im, x.dims, &self.gamma_im, &self.beta_im),
        }
    }

    /// Normalizes with batch statistics; returns the output and the cache for
    /// [`ComplexBn::backward`].
    ///
    /// Each channel of each part of the result has mean 0 and variance
    /// `v / (v + eps)` before the affine map, `v` being the batch variance.
    pub fn forward_batch(&self, x: &ComplexTensor) -> (ComplexTensor, BnCache) {
        let (sr, si) = (batch_stats(&x.re, x.dims), batch_stats(&x.im, x.dims));
        let inv = |s: &Stats| {
            s.var
                .iter()
                .map(|v| 1.0 / (v + BN_EPS).sqrt())
                .collect::<Vec<_>>()
        };
        let (inv_re, inv_im) = (inv(&sr), inv(&si));
        let xhat = ComplexTensor {
            dims: x.dims,
            re: normalize(&x.re, x.dims, &sr.mean, &inv_re),
            im: normalize(&x.im, x.dims, &si.mean, &inv_im),
        };
        let y = ComplexTensor {
            dims: x.dims,
            re: affine(&xhat.re, x.dims, &self.gamma_re, &self.beta_re),
            im: affine(&xhat.im, x.dims, &self.gamma_im, &self.beta_im),
        };
        (
            y,
            BnCache {
                xhat,
                inv_re,
                inv_im,
                stats_re: sr,
                stats_im: si,
            },
        )
    }

    /// Folds the batch statistics recorded in `cache` into the running statistics.
    ///
    /// The running variance uses the unbiased batch variance.
    pub fn update_running(&mut self, cache: &BnCache) {
        let d = cache.xhat.dims;
        let m = (d[0] * d[2] * d[3]) as f64;
        let unbias = if m > 1.0 { m / (m - 1.0) } else { 1.0 };
        for (stats, mean, var) in [
            (&cache.stats_re, &mut self.mean_re, &mut self.var_re),
            (&cache.stats_im, &mut self.mean_im, &mut self.var_im),
        ] {
            for ch in 0..mean.len() {
                mean[ch] = BN_MOMENTUM * mean[ch] + (1.0 - BN_MOMENTUM) * stats.mean[ch];
                var[ch] = BN_MOMENTUM * var[ch] + (1.0 - BN_MOMENTUM) * stats.var[ch] * unbias;
            }
        }
    }

    /// Gradients through a batch-statistics pass.
    pub fn backward(&self, cache: &BnCache, g: &ComplexTensor) -> (BnGrad, ComplexTensor) {
        let (gamma_re, beta_re, dre) =
            part_backward(&cache.xhat.re, &g.re, g.dims, &self.gamma_re, &cache.inv_re);
        let (gamma_im, beta_im, dim) =
            part_backward(&cache.xhat.im, &g.im, g.dims, &self.gamma_im, &cache.inv_im);
        (
            BnGrad {
                gamma_re,
                beta_re,
                gamma_im,
                beta_im,
            },
            ComplexTensor {
                dims: g.dims,
                re: dre,
                im: dim,
            },
        )
    }
}

fn part_backward(
    xhat: &[f64],
    g: &[f64],
    dims: [usize; 4],
    gamma: &[f64],
    inv: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let [n, c, h, w] = dims;
    let p = h * w;
    let m = (n * p) as f64;
    let mut dgamma = vec![0.0; c];
    let mut dbeta = vec![0.0; c];
    let mut dx = vec![0.0; g.len()];
    for ch in 0..c {
        let idx = || (0..n).flat_map(move |b| (b * c + ch) * p..(b * c + ch + 1) * p);
        let (mut sg, mut sgx) = (0.0, 0.0);
        for i in idx() {
            sg += g[i];
            sgx += g[i] * xhat[i];
        }
        dgamma[ch] = sgx;
        dbeta[ch] = sg;
        // dxhat = gamma * g
        let k = gamma[ch] * inv[ch] / m;
        for i in idx() {
            dx[i] = k * (m * g[i] - sg - xhat[i] * sgx);
        }
    }
    (dgamma, dbeta, dx)
}
