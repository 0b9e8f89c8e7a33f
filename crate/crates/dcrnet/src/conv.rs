//! Complex 3x3 convolution assembled from four real convolutions.
//!
//! Real convolutions here are cross-correlations with zero padding 1 and
//! stride 1, so the spatial size is preserved.

use crate::error::DcrError;
use crate::tensor::ComplexTensor;
use crate::Result;

/// How the four real convolutions are combined.
///
/// `Printed`: `Y_R = X_R*W_R + X_I*W_I`, `Y_I = X_R*W_I + X_I*W_R`.
/// `Standard`: complex multiplication, `Y_R = X_R*W_R - X_I*W_I` with the same `Y_I`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Convention {
    #[default]
    Printed,
    Standard,
}

impl Convention {
    /// Coefficient of `X_I*W_I` in the real output.
    pub fn sign(self) -> f64 {
        match self {
            Convention::Printed => 1.0,
            Convention::Standard => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Convention::Printed => "printed",
            Convention::Standard => "standard",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "printed" => Some(Convention::Printed),
            "standard" => Some(Convention::Standard),
            _ => None,
        }
    }
}

/// Kernel `(c_out, c_in, 3, 3)` and bias `(c_out)`, split into real and imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexConv {
    pub c_in: usize,
    pub c_out: usize,
    pub w_re: Vec<f64>,
    pub w_im: Vec<f64>,
    pub b_re: Vec<f64>,
    pub b_im: Vec<f64>,
    pub convention: Convention,
}

/// Parameter gradients of one convolution.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrad {
    pub w_re: Vec<f64>,
    pub w_im: Vec<f64>,
    pub b_re: Vec<f64>,
    pub b_im: Vec<f64>,
}

impl ComplexConv {
    pub fn zeros(c_in: usize, c_out: usize) -> Self {
        let k = c_out * c_in * 9;
        Self {
            c_in,
            c_out,
            w_re: vec![0.0; k],
            w_im: vec![0.0; k],
            b_re: vec![0.0; c_out],
            b_im: vec![0.0; c_out],
            convention: Convention::Printed,
        }
    }

    /// Kernel with a real 1 at the centre of each diagonal tap, zero bias.
    pub fn identity(c: usize) -> Self {
        let mut l = Self::zeros(c, c);
        for i in 0..c {
            l.w_re[(i * c + i) * 9 + 4] = 1.0;
        }
        l
    }

    fn check(&self, x: &ComplexTensor) -> Result<()> {
        if x.dims[1] != self.c_in {
            return Err(DcrError::Channels {
                expected: self.c_in,
                got: x.dims[1],
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &ComplexTensor) -> Result<ComplexTensor> {
        self.check(x)?;
        let [n, _, h, w] = x.dims;
        let p = h * w;
        let kk = self.c_in * 9;
        let s = self.convention.sign();
        let mut y = ComplexTensor::zeros([n, self.c_out, h, w]);
        let mut cr = vec![0.0; kk * p];
        let mut ci = vec![0.0; kk * p];
        let (xin, yout) = (self.c_in * p, self.c_out * p);
        for b in 0..n {
            im2col(&x.re[b * xin..(b + 1) * xin], self.c_in, h, w, &mut cr);
            im2col(&x.im[b * xin..(b + 1) * xin], self.c_in, h, w, &mut ci);
            let yr = &mut y.re[b * yout..(b + 1) * yout];
            for (o, row) in yr.chunks_mut(p).enumerate() {
                row.fill(self.b_re[o]);
            }
            gemm(
                self.c_out, kk, p, 1.0, &self.w_re, false, &cr, false, 1.0, yr,
            );
            gemm(self.c_out, kk, p, s, &self.w_im, false, &ci, false, 1.0, yr);
            let yi = &mut y.im[b * yout..(b + 1) * yout];
            for (o, row) in yi.chunks_mut(p).enumerate() {
                row.fill(self.b_im[o]);
            }
            gemm(
                self.c_out, kk, p, 1.0, &self.w_im, false, &cr, false, 1.0, yi,
            );
            gemm(
                self.c_out, kk, p, 1.0, &self.w_re, false, &ci, false, 1.0, yi,
            );
        }
        Ok(y)
    }

    /// Parameter gradients and, when `need_input` is set, the input gradient.
    pub fn backward(
        &self,
        x: &ComplexTensor,
        g: &ComplexTensor,
        need_input: bool,
    ) -> (ConvGrad, Option<ComplexTensor>) {
        let [n, _, h, w] = x.dims;
        let p = h * w;
        let kk = self.c_in * 9;
        let s = self.convention.sign();
        let mut gr = ConvGrad {
            w_re: vec![0.0; self.w_re.len()],
            w_im: vec![0.0; self.w_im.len()],
            b_re: vec![0.0; self.c_out],
            b_im: vec![0.0; self.c_out],
        };
        let mut gx = need_input.then(|| ComplexTensor::zeros(x.dims));
        let mut cr = vec![0.0; kk * p];
        let mut ci = vec![0.0; kk * p];
        let mut dr = vec![0.0; kk * p];
        let mut di = vec![0.0; kk * p];
        let (xin, yout) = (self.c_in * p, self.c_out * p);
        for b in 0..n {
            let g_r = &g.re[b * yout..(b + 1) * yout];
            let g_i = &g.im[b * yout..(b + 1) * yout];
            for o in 0..self.c_out {
                gr.b_re[o] += g_r[o * p..(o + 1) * p].iter().sum::<f64>();
                gr.b_im[o] += g_i[o * p..(o + 1) * p].iter().sum::<f64>();
            }
            im2col(&x.re[b * xin..(b + 1) * xin], self.c_in, h, w, &mut cr);
            im2col(&x.im[b * xin..(b + 1) * xin], self.c_in, h, w, &mut ci);
            // dW_R = G_R X_R^T + G_I X_I^T, dW_I = s G_R X_I^T + G_I X_R^T
            gemm(
                self.c_out,
                p,
                kk,
                1.0,
                g_r,
                false,
                &cr,
                true,
                1.0,
                &mut gr.w_re,
            );
            gemm(
                self.c_out,
                p,
                kk,
                1.0,
                g_i,
                false,
                &ci,
                true,
                1.0,
                &mut gr.w_re,
            );
            gemm(
                self.c_out,
                p,
                kk,
                s,
                g_r,
                false,
                &ci,
                true,
                1.0,
                &mut gr.w_im,
            );
            gemm(
                self.c_out,
                p,
                kk,
                1.0,
                g_i,
                false,
                &cr,
                true,
                1.0,
                &mut gr.w_im,
            );
            if let Some(gx) = gx.as_mut() {
                // dX_R = W_R^T G_R + W_I^T G_I, dX_I = s W_I^T G_R + W_R^T G_I
                gemm(
                    kk, self.c_out, p, 1.0, &self.w_re, true, g_r, false, 0.0, &mut dr,
                );
                gemm(
                    kk, self.c_out, p, 1.0, &self.w_im, true, g_i, false, 1.0, &mut dr,
                );
                gemm(
                    kk, self.c_out, p, s, &self.w_im, true, g_r, false, 0.0, &mut di,
                );
                gemm(
                    kk, self.c_out, p, 1.0, &self.w_re, true, g_i, false, 1.0, &mut di,
                );
                col2im(&dr, self.c_in, h, w, &mut gx.re[b * xin..(b + 1) * xin]);
                col2im(&di, self.c_in, h, w, &mut gx.im[b * xin..(b + 1) * xin]);
            }
        }
        (gr, gx)
    }
}

/// Applies `layer` to `x`; see [`Convention`] for how the parts combine.
pub fn complex_conv2d(x: &ComplexTensor, layer: &ComplexConv) -> Result<ComplexTensor> {
    layer.forward(x)
}

/// `c = alpha * op(a) * op(b) + beta * c` for row-major `op(a): m x k`, `op(b): k x n`.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: &[f64],
    ta: bool,
    b: &[f64],
    tb: bool,
    beta: f64,
    c: &mut [f64],
) {
    debug_assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    let (rsa, csa) = if ta { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if tb { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the strides above address exactly m*k, k*n and m*n elements,
    // all within the asserted slice lengths.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Rows `(ci, kh, kw)`, columns output pixels.
fn im2col(x: &[f64], c: usize, h: usize, w: usize, cols: &mut [f64]) {
    let p = h * w;
    for ch in 0..c {
        let plane = &x[ch * p..(ch + 1) * p];
        for kh in 0..3 {
            for kw in 0..3 {
                let row = &mut cols[((ch * 9) + kh * 3 + kw) * p..][..p];
                for oy in 0..h {
                    let iy = oy as isize + kh as isize - 1;
                    let out = &mut row[oy * w..(oy + 1) * w];
                    if iy < 0 || iy >= h as isize {
                        out.fill(0.0);
                        continue;
                    }
                    let src = &plane[iy as usize * w..(iy as usize + 1) * w];
                    match kw {
                        0 => {
                            out[0] = 0.0;
                            out[1..].copy_from_slice(&src[..w - 1]);
                        }
                        1 => out.copy_from_slice(src),
                        _ => {
                            out[..w - 1].copy_from_slice(&src[1..]);
                            out[w - 1] = 0.0;
                        }
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`], overwriting `x`.
fn col2im(cols: &[f64], c: usize, h: usize, w: usize, x: &mut [f64]) {
    let p = h * w;
    x.fill(0.0);
    for ch in 0..c {
        let plane = &mut x[ch * p..(ch + 1) * p];
        for kh in 0..3 {
            for kw in 0..3 {
                let row = &cols[((ch * 9) + kh * 3 + kw) * p..][..p];
                for oy in 0..h {
                    let iy = oy as isize + kh as isize - 1;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let src = &row[oy * w..(oy + 1) * w];
                    let dst = &mut plane[iy as usize * w..(iy as usize + 1) * w];
                    match kw {
                        0 => dst[..w - 1]
                            .iter_mut()
                            .zip(&src[1..])
                            .for_each(|(d, s)| *d += s),
                        1 => dst.iter_mut().zip(src).for_each(|(d, s)| *d += s),
                        _ => dst[1..]
                            .iter_mut()
                            .zip(&src[..w - 1])
                            .for_each(|(d, s)| *d += s),
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn col2im_is_the_adjoint_of_im2col() {
        let (c, h, w) = (2, 4, 5);
        let x: Vec<f64> = (0..c * h * w)
            .map(|i| ((i * 37) % 11) as f64 - 5.0)
            .collect();
        let y: Vec<f64> = (0..c * 9 * h * w)
            .map(|i| ((i * 13) % 7) as f64 - 3.0)
            .collect();
        let mut cols = vec![0.0; y.len()];
        im2col(&x, c, h, w, &mut cols);
        let mut back = vec![0.0; x.len()];
        col2im(&y, c, h, w, &mut back);
        let lhs: f64 = cols.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(&back).map(|(a, b)| a * b).sum();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn gemm_transposes() {
        // a = [[1,2],[3,4]], b = [[5,6],[7,8]]
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [5.0, 6.0, 7.0, 8.0];
        let mut c = [0.0; 4];
        gemm(2, 2, 2, 1.0, &a, true, &b, false, 0.0, &mut c);
        assert_eq!(c, [26.0, 30.0, 38.0, 44.0]);
        gemm(2, 2, 2, 1.0, &a, false, &b, true, 0.0, &mut c);
        assert_eq!(c, [17.0, 23.0, 39.0, 53.0]);
    }
}
