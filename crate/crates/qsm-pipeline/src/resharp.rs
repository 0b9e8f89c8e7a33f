//! RESHARP background field removal.
//!
//! With `S` the normalized spherical mean value filter, `C = I - S` removes
//! harmonic (background) fields inside the mask eroded by the sphere radius.
//! The local field `x` solves
//! `min |E C x - E C f|^2 + tik |x|^2` over fields supported on the eroded
//! mask `E`, by conjugate gradients on the normal equations.

use crate::dipole::{real_image, spectrum};
use crate::error::QsmError;
use crate::fit::FieldMap;
use crate::Result;

pub const CG_TOL: f64 = 1e-8;
pub const CG_MAX_ITERS: usize = 200;
pub const DEFAULT_RADIUS: f64 = 4.0;
pub const DEFAULT_TIK: f64 = 1e-3;

/// Transfer function of the normalized sphere of `radius` voxels.
pub fn smv_kernel(shape: [usize; 3], radius: f64) -> Result<Vec<f64>> {
    if !(radius >= 1.0) {
        return Err(QsmError::Param(format!(
            "radius must be >= 1, got {radius}"
        )));
    }
    let n: usize = shape.iter().product();
    let mut s = Vec::with_capacity(n);
    for z in 0..shape[2] {
        let dz = z as f64 - (shape[2] / 2) as f64;
        for y in 0..shape[1] {
            let dy = y as f64 - (shape[1] / 2) as f64;
            for x in 0..shape[0] {
                let dx = x as f64 - (shape[0] / 2) as f64;
                s.push(if dx * dx + dy * dy + dz * dz <= radius * radius {
                    1.0
                } else {
                    0.0
                });
            }
        }
    }
    let total: f64 = s.iter().sum();
    s.iter_mut().for_each(|v| *v /= total);
    let scale = (n as f64).sqrt();
    Ok(spectrum(&s, shape)
        .into_iter()
        .map(|c| c.re * scale)
        .collect())
}

struct Smv {
    shape: [usize; 3],
    k: Vec<f64>,
}

impl Smv {
    fn apply(&self, x: &[f64], h: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut f = spectrum(x, self.shape);
        f.iter_mut().zip(&self.k).for_each(|(c, &g)| *c *= h(g));
        real_image(f, self.shape)
    }

    fn smooth(&self, x: &[f64]) -> Vec<f64> {
        self.apply(x, |g| g)
    }

    fn complement(&self, x: &[f64]) -> Vec<f64> {
        self.apply(x, |g| 1.0 - g)
    }
}

/// Returns the local field on the eroded mask together with that mask.
pub fn resharp_remove(
    field: &FieldMap,
    mask: &[bool],
    radius: f64,
    tik: f64,
) -> Result<(FieldMap, Vec<bool>)> {
    let shape = field.shape();
    if mask.len() != field.field.len() {
        return Err(QsmError::Shape("mask and field differ in length".into()));
    }
    if !(tik >= 0.0) {
        return Err(QsmError::Param(format!(
            "tik must be nonnegative, got {tik}"
        )));
    }
    let smv = Smv {
        shape,
        k: smv_kernel(shape, radius)?,
    };
    let support: Vec<f64> = mask
        .iter()
        .zip(&field.valid)
        .map(|(&m, &v)| if m && v { 1.0 } else { 0.0 })
        .collect();
    let eroded: Vec<bool> = smv
        .smooth(&support)
        .iter()
        .map(|&v| v > 1.0 - 1e-6)
        .collect();
    if !eroded.iter().any(|&e| e) {
        return Err(QsmError::EmptyMask("eroded mask"));
    }
    let project = |v: &mut [f64]| {
        v.iter_mut().zip(&eroded).for_each(|(a, &e)| {
            if !e {
                *a = 0.0
            }
        })
    };
    let normal = |v: &[f64]| -> Vec<f64> {
        let mut p = v.to_vec();
        project(&mut p);
        let mut c = smv.complement(&p);
        project(&mut c);
        let mut out = smv.complement(&c);
        project(&mut out);
        out.iter_mut().zip(&p).for_each(|(o, &q)| *o += tik * q);
        out
    };
    let f: Vec<f64> = field
        .field
        .data()
        .iter()
        .zip(&support)
        .map(|(&v, &s)| v * s)
        .collect();
    let mut b = smv.complement(&f);
    project(&mut b);
    let mut b = smv.complement(&b);
    project(&mut b);

    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut x = vec![0.0; f.len()];
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rs = dot(&r, &r);
    let b2 = rs;
    if b2 > 0.0 {
        for _ in 0..CG_MAX_ITERS {
            let ap = normal(&p);
            let alpha = rs / dot(&p, &ap);
            x.iter_mut().zip(&p).for_each(|(a, &q)| *a += alpha * q);
            r.iter_mut().zip(&ap).for_each(|(a, &q)| *a -= alpha * q);
            let rn = dot(&r, &r);
            if rn.sqrt() <= CG_TOL * b2.sqrt() {
                break;
            }
            p.iter_mut()
                .zip(&r)
                .for_each(|(a, &q)| *a = q + rn / rs * *a);
            rs = rn;
        }
    }
    project(&mut x);
    let local = FieldMap {
        field: kspace_core::RealVolume::new(shape, x)?,
        valid: eroded.clone(),
    };
    Ok((local, eroded))
}
