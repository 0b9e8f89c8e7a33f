//! Magnitude-weighted multi-echo field fitting.

use kspace_core::RealVolume;

use crate::error::QsmError;
use crate::Result;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Off-resonance map in rad/s with a per-voxel validity flag.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMap {
    pub field: RealVolume,
    pub valid: Vec<bool>,
}

impl FieldMap {
    /// Map that is valid exactly on `mask`, zeroed elsewhere.
    pub fn masked(field: RealVolume, mask: &[bool]) -> Result<Self> {
        if mask.len() != field.len() {
            return Err(QsmError::Shape(format!(
                "mask has {} voxels, field has {}",
                mask.len(),
                field.len()
            )));
        }
        let mut field = field;
        field.data_mut().iter_mut().zip(mask).for_each(|(v, &m)| {
            if !m {
                *v = 0.0
            }
        });
        Ok(Self {
            field,
            valid: mask.to_vec(),
        })
    }

    pub fn shape(&self) -> [usize; 3] {
        self.field.shape()
    }
}

/// Per-voxel weighted least-squares slope of phase against echo time.
///
/// Weights are squared magnitudes and the intercept is fitted and discarded.
/// Voxels whose weights do not determine a slope are marked invalid and set to 0.
pub fn fit_field(phases: &[RealVolume], mags: &[RealVolume], te: &[f64]) -> Result<FieldMap> {
    if phases.len() < 2 {
        return Err(QsmError::Param(format!(
            "need at least 2 echoes, got {}",
            phases.len()
        )));
    }
    if mags.len() != phases.len() || te.len() != phases.len() {
        return Err(QsmError::Shape(
            "phases, magnitudes and echo times differ in count".into(),
        ));
    }
    let shape = phases[0].shape();
    if phases.iter().chain(mags).any(|v| v.shape() != shape) {
        return Err(QsmError::Shape("echo volumes differ in shape".into()));
    }
    let n = phases[0].len();
    let mut field = vec![0.0; n];
    let mut valid = vec![false; n];
    for i in 0..n {
        let (mut sw, mut st, mut sp) = (0.0, 0.0, 0.0);
        for e in 0..te.len() {
            let w = mags[e].data()[i].powi(2);
            sw += w;
            st += w * te[e];
            sp += w * phases[e].data()[i];
        }
        if !(sw > 0.0) {
            continue;
        }
        let (tm, pm) = (st / sw, sp / sw);
        let (mut num, mut den) = (0.0, 0.0);
        for e in 0..te.len() {
            let w = mags[e].data()[i].powi(2);
            let dt = te[e] - tm;
            num += w * dt * (phases[e].data()[i] - pm);
            den += w * dt * dt;
        }
        if den > 0.0 {
            field[i] = num / den;
            valid[i] = true;
        }
    }
    Ok(FieldMap {
        field: RealVolume::new(shape, field)?,
        valid,
    })
}

/// Removes 2*pi errors left by independent spatial unwrapping of each echo.
///
/// Inside `mask`, echo `e` is replaced by `phi[e-1] + wrap(phi[e] - phi[e-1])`,
/// which is exact while the phase change between consecutive echoes stays
/// below pi in magnitude.
pub fn align_echoes(phases: &mut [RealVolume], mask: &[bool]) -> Result<()> {
    if !mask.iter().any(|&m| m) {
        return Err(QsmError::EmptyMask("align_echoes"));
    }
    if phases.iter().any(|p| p.len() != mask.len()) {
        return Err(QsmError::Shape(
            "echo volumes and mask differ in length".into(),
        ));
    }
    for e in 1..phases.len() {
        let (head, tail) = phases.split_at_mut(e);
        let prev = head[e - 1].data();
        for ((v, &p), &m) in tail[0].data_mut().iter_mut().zip(prev).zip(mask) {
            if m {
                let d = *v - p;
                *v = p + d - TWO_PI * (d / TWO_PI).round();
            }
        }
    }
    Ok(())
}
