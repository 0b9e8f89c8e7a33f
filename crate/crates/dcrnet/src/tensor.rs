//! Complex feature maps stored as separate real and imaginary planes.

use kspace_core::{ComplexSlice, Domain, C64};

use crate::error::DcrError;
use crate::Result;

/// `(N, C, H, W)` complex tensor, `W` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTensor {
    pub dims: [usize; 4],
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ComplexTensor {
    pub fn zeros(dims: [usize; 4]) -> Self {
        let n = dims.iter().product();
        Self {
            dims,
            re: vec![0.0; n],
            im: vec![0.0; n],
        }
    }

    pub fn new(dims: [usize; 4], re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if dims.contains(&0) {
            return Err(DcrError::Shape(format!(
                "dims must be positive, got {dims:?}"
            )));
        }
        if re.len() != n || im.len() != n {
            return Err(DcrError::Shape(format!(
                "dims {dims:?} need {n} samples, got {} and {}",
                re.len(),
                im.len()
            )));
        }
        if let Some(i) = re.iter().chain(&im).position(|v| !v.is_finite()) {
            return Err(DcrError::Param(format!(
                "non-finite sample at index {}",
                i % n
            )));
        }
        Ok(Self { dims, re, im })
    }

    /// Stacks single-channel slices into an `(N, 1, nz, ny)` tensor.
    pub fn from_slices(slices: &[&ComplexSlice]) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| DcrError::Shape("no slices".into()))?;
        let [ny, nz] = first.shape();
        let mut t = Self::zeros([slices.len(), 1, nz, ny]);
        for (s, slice) in slices.iter().enumerate() {
            if slice.shape() != [ny, nz] {
                return Err(DcrError::Shape("slices differ in shape".into()));
            }
            let off = s * ny * nz;
            for (i, c) in slice.data().iter().enumerate() {
                t.re[off + i] = c.re;
                t.im[off + i] = c.im;
            }
        }
        Ok(t)
    }

    /// Splits a single-channel tensor back into slices.
    pub fn to_slices(&self, domain: Domain) -> Result<Vec<ComplexSlice>> {
        let [n, c, h, w] = self.dims;
        if c != 1 {
            return Err(DcrError::Channels {
                expected: 1,
                got: c,
            });
        }
        (0..n)
            .map(|s| {
                let r = s * h * w..(s + 1) * h * w;
                let data = self.re[r.clone()]
                    .iter()
                    .zip(&self.im[r])
                    .map(|(&a, &b)| C64::new(a, b))
                    .collect();
                Ok(ComplexSlice::new([w, h], data, domain)?)
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    /// Samples per image plane, `H * W`.
    pub fn plane(&self) -> usize {
        self.dims[2] * self.dims[3]
    }

    /// Complex sample at flat index `i`.
    pub fn at(&self, i: usize) -> C64 {
        C64::new(self.re[i], self.im[i])
    }

    pub fn is_finite(&self) -> bool {
        self.re.iter().chain(&self.im).all(|v| v.is_finite())
    }

    /// Selects samples `idx` along the batch axis.
    pub fn select(&self, idx: &[usize]) -> Self {
        let per = self.dims[1] * self.plane();
        let mut out = Self::zeros([idx.len(), self.dims[1], self.dims[2], self.dims[3]]);
        for (k, &i) in idx.iter().enumerate() {
            out.re[k * per..(k + 1) * per].copy_from_slice(&self.re[i * per..(i + 1) * per]);
            out.im[k * per..(k + 1) * per].copy_from_slice(&self.im[i * per..(i + 1) * per]);
        }
        out
    }

    pub(crate) fn add_assign(&mut self, other: &Self) {
        self.re.iter_mut().zip(&other.re).for_each(|(a, b)| *a += b);
        self.im.iter_mut().zip(&other.im).for_each(|(a, b)| *a += b);
    }
}

/// ReLU applied to the real and imaginary planes independently.
pub fn complex_relu(x: &ComplexTensor) -> ComplexTensor {
    ComplexTensor {
        dims: x.dims,
        re: x.re.iter().map(|v| v.max(0.0)).collect(),
        im: x.im.iter().map(|v| v.max(0.0)).collect(),
    }
}

/// Mean of `|pred - target|^2` over all samples and its gradient w.r.t. `pred`.
///
/// The gradient holds `dL/dRe` in `re` and `dL/dIm` in `im`.
pub fn mse_loss(pred: &ComplexTensor, target: &ComplexTensor) -> Result<(f64, ComplexTensor)> {
    if pred.dims != target.dims {
        return Err(DcrError::Shape(format!(
            "pred {:?} vs target {:?}",
            pred.dims, target.dims
        )));
    }
    let n = pred.len() as f64;
    let mut grad = ComplexTensor::zeros(pred.dims);
    let mut loss = 0.0;
    for i in 0..pred.len() {
        let (dr, di) = (pred.re[i] - target.re[i], pred.im[i] - target.im[i]);
        loss += dr * dr + di * di;
        grad.re[i] = 2.0 * dr / n;
        grad.im[i] = 2.0 * di / n;
    }
    Ok((loss / n, grad))
}
