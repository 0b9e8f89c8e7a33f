//! Dipole inversion: thresholded k-space division and COSMOS.

use kspace_core::{RealVolume, C64};
use rayon::prelude::*;

use crate::dipole::{dipole_kernel, real_image, spectrum, unit};
use crate::error::QsmError;
use crate::fit::FieldMap;
use crate::Result;

pub const DEFAULT_TKD_THRESHOLD: f64 = 0.19;
pub const DEFAULT_COSMOS_REG: f64 = 1e-6;

fn masked(mut v: Vec<f64>, valid: &[bool]) -> Vec<f64> {
    v.iter_mut().zip(valid).for_each(|(a, &m)| {
        if !m {
            *a = 0.0
        }
    });
    v
}

/// Susceptibility (ppm) from a local field (rad/s) by truncated k-space division.
///
/// `D` is replaced by `sign(D) * threshold` where `|D| < threshold`, with
/// `sign(0) = +1`. The result is zeroed outside `local.valid`.
pub fn tkd_invert(
    local: &FieldMap,
    b0_dir: [f64; 3],
    threshold: f64,
    b0_gamma_scale: f64,
) -> Result<RealVolume> {
    if !(threshold > 0.0 && threshold < 2.0 / 3.0) {
        return Err(QsmError::Param(format!(
            "threshold must lie in (0, 2/3), got {threshold}"
        )));
    }
    if !(b0_gamma_scale != 0.0 && b0_gamma_scale.is_finite()) {
        return Err(QsmError::Param(
            "b0_gamma_scale must be finite and nonzero".into(),
        ));
    }
    let shape = local.shape();
    let d = dipole_kernel(shape, b0_dir)?;
    let ppm: Vec<f64> = local
        .field
        .data()
        .iter()
        .map(|&f| f / b0_gamma_scale)
        .collect();
    let mut k = spectrum(&ppm, shape);
    for (c, &g) in k.iter_mut().zip(&d) {
        let dt = if g.abs() < threshold {
            threshold.copysign(if g >= 0.0 { 1.0 } else { -1.0 })
        } else {
            g
        };
        *c /= dt;
    }
    Ok(RealVolume::new(
        shape,
        masked(real_image(k, shape), &local.valid),
    )?)
}

/// Multi-orientation least-squares inversion `sum D_i F(f_i) / (sum D_i^2 + reg)`.
///
/// Fields are in rad/s and converted to ppm with `b0_gamma_scale`. Needs at
/// least three orientations spanning 3D. The result is zeroed outside the
/// intersection of the fields' valid masks.
pub fn cosmos_invert(
    fields: &[(FieldMap, [f64; 3])],
    reg: f64,
    b0_gamma_scale: f64,
) -> Result<RealVolume> {
    if fields.len() < 3 {
        return Err(QsmError::Degenerate(format!(
            "need at least 3 orientations, got {}",
            fields.len()
        )));
    }
    if !(reg >= 0.0) {
        return Err(QsmError::Param(format!(
            "reg must be nonnegative, got {reg}"
        )));
    }
    let shape = fields[0].0.shape();
    if fields.iter().any(|(f, _)| f.shape() != shape) {
        return Err(QsmError::Shape("fields differ in shape".into()));
    }
    let dirs = fields
        .iter()
        .map(|(_, b)| unit(*b))
        .collect::<Result<Vec<_>>>()?;
    let mut gram = [[0.0; 3]; 3];
    for b in &dirs {
        for r in 0..3 {
            for c in 0..3 {
                gram[r][c] += b[r] * b[c];
            }
        }
    }
    let det = gram[0][0] * (gram[1][1] * gram[2][2] - gram[1][2] * gram[2][1])
        - gram[0][1] * (gram[1][0] * gram[2][2] - gram[1][2] * gram[2][0])
        + gram[0][2] * (gram[1][0] * gram[2][1] - gram[1][1] * gram[2][0]);
    if det < 1e-6 {
        return Err(QsmError::Degenerate(format!(
            "directions {dirs:?} do not span 3D"
        )));
    }

    let n: usize = shape.iter().product();
    let parts = fields
        .par_iter()
        .zip(&dirs)
        .map(|((f, _), &b)| -> Result<(Vec<C64>, Vec<f64>)> {
            let d = dipole_kernel(shape, b)?;
            let ppm: Vec<f64> = f.field.data().iter().map(|&v| v / b0_gamma_scale).collect();
            let mut k = spectrum(&ppm, shape);
            k.iter_mut().zip(&d).for_each(|(c, &g)| *c *= g);
            Ok((k, d.iter().map(|g| g * g).collect()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut num = vec![C64::new(0.0, 0.0); n];
    let mut den = vec![reg; n];
    for (k, d2) in &parts {
        num.iter_mut().zip(k).for_each(|(a, b)| *a += b);
        den.iter_mut().zip(d2).for_each(|(a, b)| *a += b);
    }
    for (a, &b) in num.iter_mut().zip(&den) {
        *a = if b > 0.0 { *a / b } else { C64::new(0.0, 0.0) };
    }
    let valid: Vec<bool> = (0..n)
        .map(|i| fields.iter().all(|(f, _)| f.valid[i]))
        .collect();
    Ok(RealVolume::new(
        shape,
        masked(real_image(num, shape), &valid),
    )?)
}
