//! Centered unitary DFT along arbitrary axes of an x-fastest array.
//!
//! The centered transform is `fftshift(fft(ifftshift(v))) / sqrt(n)`, so the
//! sample at index `n / 2` carries the zero frequency. Plans are cached per
//! thread.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::KspaceError;
use crate::Result;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Transforms `data` in place along each axis in `axes`.
///
/// # Arguments
/// * `data` - samples, first axis fastest
/// * `shape` - extents, one per axis
/// * `axes` - axes to transform; duplicates are rejected
/// * `inverse` - apply the inverse transform instead of the forward one
pub fn centered_dft(
    data: &mut [Complex64],
    shape: &[usize],
    axes: &[usize],
    inverse: bool,
) -> Result<()> {
    if axes.is_empty() {
        return Err(KspaceError::Shape("no axes given".into()));
    }
    for (i, &a) in axes.iter().enumerate() {
        if a >= shape.len() {
            return Err(KspaceError::Axis {
                axis: a,
                rank: shape.len(),
            });
        }
        if axes[..i].contains(&a) {
            return Err(KspaceError::Shape(format!("axis {a} listed twice")));
        }
    }
    let total: usize = shape.iter().product();
    if data.len() != total {
        return Err(KspaceError::Shape(format!(
            "data length {} vs shape {:?}",
            data.len(),
            shape
        )));
    }
    for &a in axes {
        transform_axis(data, shape, a, inverse);
    }
    Ok(())
}

fn transform_axis(data: &mut [Complex64], shape: &[usize], axis: usize, inverse: bool) {
    let n = shape[axis];
    if n == 1 {
        return;
    }
    let stride: usize = shape[..axis].iter().product();
    let outer: usize = shape[axis + 1..].iter().product();
    let fft = plan(n, inverse);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let c = n / 2;
    let scale = 1.0 / (n as f64).sqrt();
    for o in 0..outer {
        for i in 0..stride {
            let base = i + o * stride * n;
            // ifftshift on the way in
            for (j, b) in buf.iter_mut().enumerate() {
                *b = data[base + ((j + c) % n) * stride];
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            // fftshift on the way out
            for k in 0..n {
                data[base + k * stride] = buf[(k + n - c) % n] * scale;
            }
        }
    }
}

/// Centered unitary 2D DFT of a y-fastest `ny x nz` slice, in place.
pub fn dft2_centered(data: &mut [Complex64], ny: usize, nz: usize, inverse: bool) {
    assert_eq!(data.len(), ny * nz, "slice length does not match extents");
    transform_axis(data, &[ny, nz], 0, inverse);
    transform_axis(data, &[ny, nz], 1, inverse);
}
