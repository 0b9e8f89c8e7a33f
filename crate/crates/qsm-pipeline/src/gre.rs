//! Multi-echo gradient-echo forward simulation.

use kspace_core::{ComplexVolume, Domain, RealVolume, C64};
use rayon::prelude::*;

use crate::dipole::{dipole_kernel, filter};
use crate::phantom::SusceptibilityPhantom;
use crate::Result;

/// Complex echo images and their echo times.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoSeries {
    pub echoes: Vec<ComplexVolume>,
    pub te_list: Vec<f64>,
}

impl EchoSeries {
    pub fn magnitudes(&self) -> Vec<RealVolume> {
        self.echoes.iter().map(|e| e.magnitude()).collect()
    }

    /// Phases wrapped to (-pi, pi].
    pub fn wrapped_phases(&self) -> Vec<RealVolume> {
        self.echoes.iter().map(|e| e.phase()).collect()
    }
}

/// `Re(IDFT(D . DFT(chi)))` in ppm.
pub fn field_ppm(chi: &RealVolume, b0_dir: [f64; 3]) -> Result<RealVolume> {
    let d = dipole_kernel(chi.shape(), b0_dir)?;
    Ok(RealVolume::new(
        chi.shape(),
        filter(chi.data(), &d, chi.shape()),
    )?)
}

/// Echo `e` is `mask * exp(-TE_e R2*) * exp(i * gamma * field_ppm * TE_e)`.
pub fn simulate_gre(ph: &SusceptibilityPhantom) -> Result<EchoSeries> {
    ph.validate()?;
    let field = field_ppm(&ph.chi, ph.b0_dir)?;
    let shape = ph.shape();
    let echoes = ph
        .te_list
        .par_iter()
        .map(|&te| {
            let decay = (-te * ph.r2star).exp();
            let data = field
                .data()
                .iter()
                .zip(&ph.mask)
                .map(|(&f, &m)| {
                    C64::from_polar(if m { decay } else { 0.0 }, ph.b0_gamma_scale * f * te)
                })
                .collect();
            ComplexVolume::new(shape, data, Domain::Image)
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(EchoSeries {
        echoes,
        te_list: ph.te_list.clone(),
    })
}
