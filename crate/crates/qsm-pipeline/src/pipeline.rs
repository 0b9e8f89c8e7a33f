//! The post-reconstruction chain: unwrap, align, fit, remove background, invert.

use kspace_core::{ComplexVolume, RealVolume};
use rayon::prelude::*;

use crate::fit::{align_echoes, fit_field, FieldMap};
use crate::inversion::tkd_invert;
use crate::resharp::resharp_remove;
use crate::unwrap::unwrap_phase;
use crate::Result;

/// Intermediate and final maps of [`run_chain`].
#[derive(Debug, Clone)]
pub struct ChainOutput {
    /// Total field in rad/s.
    pub field: FieldMap,
    /// Local field in rad/s on the eroded mask.
    pub local: FieldMap,
    pub eroded: Vec<bool>,
    /// Susceptibility in ppm.
    pub chi: RealVolume,
}

/// Chain parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainConfig {
    pub radius: f64,
    pub tik: f64,
    pub threshold: f64,
    pub b0_dir: [f64; 3],
    pub b0_gamma_scale: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            radius: crate::resharp::DEFAULT_RADIUS,
            tik: crate::resharp::DEFAULT_TIK,
            threshold: crate::inversion::DEFAULT_TKD_THRESHOLD,
            b0_dir: [0.0, 0.0, 1.0],
            b0_gamma_scale: crate::GAMMA_B0_3T,
        }
    }
}

/// Runs unwrap, echo alignment, field fit, RESHARP and TKD on complex echoes.
pub fn run_chain(
    echoes: &[ComplexVolume],
    te: &[f64],
    mask: &[bool],
    cfg: &ChainConfig,
) -> Result<ChainOutput> {
    let mut phases = echoes
        .par_iter()
        .map(|e| unwrap_phase(&e.phase(), mask))
        .collect::<Result<Vec<_>>>()?;
    align_echoes(&mut phases, mask)?;
    let mags: Vec<RealVolume> = echoes.iter().map(|e| e.magnitude()).collect();
    let mut field = fit_field(&phases, &mags, te)?;
    field.valid.iter_mut().zip(mask).for_each(|(v, &m)| *v &= m);
    let (local, eroded) = resharp_remove(&field, mask, cfg.radius, cfg.tik)?;
    let chi = tkd_invert(&local, cfg.b0_dir, cfg.threshold, cfg.b0_gamma_scale)?;
    Ok(ChainOutput {
        field,
        local,
        eroded,
        chi,
    })
}
