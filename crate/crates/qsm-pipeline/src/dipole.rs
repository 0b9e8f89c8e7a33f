//! Unit dipole kernel and periodic spectral filtering.

use kspace_core::{centered_dft, C64};

use crate::error::QsmError;
use crate::Result;

/// Centered coordinate `(i - n/2) / n` of index `i`.
#[inline]
fn kcoord(i: usize, n: usize) -> f64 {
    (i as f64 - (n / 2) as f64) / n as f64
}

/// `D(k) = 1/3 - (k . b)^2 / |k|^2` on the centered k-grid, x-fastest, `D(0) = 0`.
pub fn dipole_kernel(shape: [usize; 3], b0_dir: [f64; 3]) -> Result<Vec<f64>> {
    if shape.contains(&0) {
        return Err(QsmError::Shape(format!(
            "extents must be positive, got {shape:?}"
        )));
    }
    let b = unit(b0_dir)?;
    let [nx, ny, nz] = shape;
    let mut d = Vec::with_capacity(nx * ny * nz);
    for z in 0..nz {
        let kz = kcoord(z, nz);
        for y in 0..ny {
            let ky = kcoord(y, ny);
            for x in 0..nx {
                let kx = kcoord(x, nx);
                let k2 = kx * kx + ky * ky + kz * kz;
                let kb = kx * b[0] + ky * b[1] + kz * b[2];
                d.push(if k2 == 0.0 {
                    0.0
                } else {
                    1.0 / 3.0 - kb * kb / k2
                });
            }
        }
    }
    Ok(d)
}

/// Normalizes a direction, rejecting zero or non-finite vectors.
pub fn unit(b: [f64; 3]) -> Result<[f64; 3]> {
    let n = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
    if !(n.is_finite() && n > 0.0) {
        return Err(QsmError::Param(format!(
            "direction {b:?} has no orientation"
        )));
    }
    Ok([b[0] / n, b[1] / n, b[2] / n])
}

/// Centered forward DFT of a real map.
pub(crate) fn spectrum(x: &[f64], shape: [usize; 3]) -> Vec<C64> {
    let mut k: Vec<C64> = x.iter().map(|&v| C64::new(v, 0.0)).collect();
    centered_dft(&mut k, &shape, &[0, 1, 2], false).expect("matching extents");
    k
}

/// Real part of the centered inverse DFT.
pub(crate) fn real_image(mut k: Vec<C64>, shape: [usize; 3]) -> Vec<f64> {
    centered_dft(&mut k, &shape, &[0, 1, 2], true).expect("matching extents");
    k.into_iter().map(|c| c.re).collect()
}

/// `Re(IDFT(H . DFT(x)))` for a real transfer function `h`.
pub(crate) fn filter(x: &[f64], h: &[f64], shape: [usize; 3]) -> Vec<f64> {
    let mut k = spectrum(x, shape);
    k.iter_mut().zip(h).for_each(|(c, &g)| *c *= g);
    real_image(k, shape)
}
