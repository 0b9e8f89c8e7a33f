//! Multilevel 2D Daubechies-4 transform with periodic boundaries.
//!
//! Coefficients use the usual nested layout: after level `l` the block
//! `[0, ny >> (l+1)) x [0, nz >> (l+1))` holds the approximation and is the
//! input of the next level. Each level filters along y, then along z.

use kspace_core::{ComplexSlice, Domain};

use crate::{Coef, Result, TransformError};

const SQRT3: f64 = 1.732_050_807_568_877_2;
const NORM: f64 = 4.0 * std::f64::consts::SQRT_2;

/// D4 scaling filter.
pub const H: [f64; 4] = [
    (1.0 + SQRT3) / NORM,
    (3.0 + SQRT3) / NORM,
    (3.0 - SQRT3) / NORM,
    (1.0 - SQRT3) / NORM,
];

/// D4 wavelet filter, `g[k] = (-1)^k h[3 - k]`.
pub const G: [f64; 4] = [H[3], -H[2], H[1], -H[0]];

/// Decomposition depth. The family (Daubechies-4) and boundary (periodic) are fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WaveletSpec {
    pub levels: usize,
}

impl Default for WaveletSpec {
    fn default() -> Self {
        Self { levels: 3 }
    }
}

impl WaveletSpec {
    pub fn check(&self, ny: usize, nz: usize) -> Result<()> {
        let d = 1usize << self.levels;
        for extent in [ny, nz] {
            if extent == 0 || extent % d != 0 {
                return Err(TransformError::NotDivisible {
                    extent,
                    levels: self.levels,
                });
            }
        }
        Ok(())
    }

    /// Extent of the coarsest approximation block.
    pub fn approx_extent(&self, ny: usize, nz: usize) -> (usize, usize) {
        (ny >> self.levels, nz >> self.levels)
    }

    /// Whether coefficient `(iy, iz)` belongs to a detail subband.
    pub fn is_detail(&self, iy: usize, iz: usize, ny: usize, nz: usize) -> bool {
        let (ay, az) = self.approx_extent(ny, nz);
        iy >= ay || iz >= az
    }

    /// Per-coefficient detail flags in y-fastest order.
    pub fn detail_mask(&self, ny: usize, nz: usize) -> Vec<bool> {
        (0..ny * nz)
            .map(|i| self.is_detail(i % ny, i / ny, ny, nz))
            .collect()
    }
}

fn analyze<T: Coef>(line: &[T], out: &mut [T]) {
    let n = line.len();
    let half = n / 2;
    for i in 0..half {
        let mut lo = T::default();
        let mut hi = T::default();
        for k in 0..4 {
            let v = line[(2 * i + k) % n];
            lo = lo + v * H[k];
            hi = hi + v * G[k];
        }
        out[i] = lo;
        out[half + i] = hi;
    }
}

fn synthesize<T: Coef>(coef: &[T], out: &mut [T]) {
    let n = coef.len();
    let half = n / 2;
    out.fill(T::default());
    for i in 0..half {
        let (lo, hi) = (coef[i], coef[half + i]);
        for k in 0..4 {
            let j = (2 * i + k) % n;
            out[j] = out[j] + lo * H[k] + hi * G[k];
        }
    }
}

/// Applies `f` to every line of the `by x bz` top-left block along `axis`.
fn for_lines<T: Coef>(
    data: &mut [T],
    ny: usize,
    by: usize,
    bz: usize,
    axis: usize,
    f: fn(&[T], &mut [T]),
) {
    let (n, count) = if axis == 0 { (by, bz) } else { (bz, by) };
    let mut line = vec![T::default(); n];
    let mut out = vec![T::default(); n];
    for c in 0..count {
        let at = |j: usize| if axis == 0 { j + ny * c } else { c + ny * j };
        for (j, v) in line.iter_mut().enumerate() {
            *v = data[at(j)];
        }
        f(&line, &mut out);
        for (j, &v) in out.iter().enumerate() {
            data[at(j)] = v;
        }
    }
}

/// Forward transform of a y-fastest `ny x nz` array.
pub fn wavelet_fwd<T: Coef>(x: &[T], ny: usize, nz: usize, spec: &WaveletSpec) -> Result<Vec<T>> {
    spec.check(ny, nz)?;
    if x.len() != ny * nz {
        return Err(TransformError::Shape(format!(
            "{} samples for {ny}x{nz}",
            x.len()
        )));
    }
    let mut c = x.to_vec();
    for l in 0..spec.levels {
        let (by, bz) = (ny >> l, nz >> l);
        for_lines(&mut c, ny, by, bz, 0, analyze);
        for_lines(&mut c, ny, by, bz, 1, analyze);
    }
    Ok(c)
}

/// Inverse of [`wavelet_fwd`].
pub fn wavelet_inv<T: Coef>(c: &[T], ny: usize, nz: usize, spec: &WaveletSpec) -> Result<Vec<T>> {
    spec.check(ny, nz)?;
    if c.len() != ny * nz {
        return Err(TransformError::Shape(format!(
            "{} coefficients for {ny}x{nz}",
            c.len()
        )));
    }
    let mut x = c.to_vec();
    for l in (0..spec.levels).rev() {
        let (by, bz) = (ny >> l, nz >> l);
        for_lines(&mut x, ny, by, bz, 1, synthesize);
        for_lines(&mut x, ny, by, bz, 0, synthesize);
    }
    Ok(x)
}

/// Forward transform of an image-domain slice; real and imaginary parts are
/// transformed independently. The result is tagged [`Domain::Wavelet`].
pub fn wavelet_fwd_slice(x: &ComplexSlice, spec: &WaveletSpec) -> Result<ComplexSlice> {
    let [ny, nz] = x.shape();
    let c = wavelet_fwd(x.data(), ny, nz, spec)?;
    Ok(ComplexSlice::new([ny, nz], c, Domain::Wavelet)?)
}

/// Inverse of [`wavelet_fwd_slice`]; the result is tagged [`Domain::Image`].
pub fn wavelet_inv_slice(c: &ComplexSlice, spec: &WaveletSpec) -> Result<ComplexSlice> {
    let [ny, nz] = c.shape();
    let x = wavelet_inv(c.data(), ny, nz, spec)?;
    Ok(ComplexSlice::new([ny, nz], x, Domain::Image)?)
}
