//! Shared experiment setup: phantom, echoes, mask, undersampled k-space.

use std::time::Instant;

use cs_solvers::{recon_volume, Method, SolverConfig, VolumeRecon};
use dcrnet::{train_toy, Arch, Dataset, DcrNetModel, Mode, TrainConfig, TrainReport};
use kspace_core::{
    apply_mask, realize_mask, zero_fill_recon, ComplexVolume, MaskSpec, SamplingMask,
};
use qsm_pipeline::{make_phantom, simulate_gre, EchoSeries, PhantomKind, SusceptibilityPhantom};

use crate::error::CliError;
use crate::metrics;

/// Extent of the shipped phantom.
pub const SHIPPED_SHAPE: [usize; 3] = [64, 64, 32];
/// Echo used as the single-image reconstruction target.
pub const REFERENCE_ECHO: usize = 3;
/// Architecture of the toy network.
pub const TOY_ARCH: Arch = Arch {
    channels: 16,
    blocks: 2,
};

/// Fully sampled 3D k-space of `img` restricted to `mask`.
pub fn undersample(img: &ComplexVolume, mask: &SamplingMask) -> Result<ComplexVolume, CliError> {
    let mut k = img.dft_centered(&[0, 1, 2])?;
    apply_mask(&mut k, mask)?;
    Ok(k)
}

/// Mask with the published density parameters for `af`, sized to `shape`.
pub fn published_mask(af: f64, shape: [usize; 3], seed: u64) -> Result<SamplingMask, CliError> {
    Ok(realize_mask(&MaskSpec::published(
        af, shape[1], shape[2], seed,
    )?)?)
}

/// Training and held-out x positions for an `nx`-slice volume.
///
/// The central `nx - 2 * (3 nx / 16)` positions are used; every fifth one
/// starting from the third is held out.
pub fn slice_split(nx: usize) -> (Vec<usize>, Vec<usize>) {
    let lo = 3 * nx / 16;
    let xs: Vec<usize> = (lo..nx - lo).collect();
    let held: Vec<usize> = xs.iter().skip(2).step_by(5).copied().collect();
    let train = xs.into_iter().filter(|x| !held.contains(x)).collect();
    (train, held)
}

/// Phantom, noiseless echoes, mask and the undersampled reference echo.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub phantom: SusceptibilityPhantom,
    pub series: EchoSeries,
    pub mask: SamplingMask,
    pub af: f64,
    /// Fully sampled reference echo (image domain).
    pub reference: ComplexVolume,
    /// Undersampled k-space of the reference echo.
    pub kspace: ComplexVolume,
    pub zero_fill: ComplexVolume,
}

impl Scenario {
    pub fn new(kind: PhantomKind, shape: [usize; 3], seed: u64, af: f64) -> Result<Self, CliError> {
        let phantom = make_phantom(kind, shape, seed)?;
        let series = simulate_gre(&phantom)?;
        let mask = published_mask(af, shape, seed)?;
        let reference = series.echoes[REFERENCE_ECHO].clone();
        let kspace = undersample(&reference, &mask)?;
        let zero_fill = zero_fill_recon(&kspace, &mask)?;
        Ok(Self {
            phantom,
            series,
            mask,
            af,
            reference,
            kspace,
            zero_fill,
        })
    }

    /// The shipped 64x64x32 sphere phantom.
    pub fn shipped(seed: u64, af: f64) -> Result<Self, CliError> {
        Self::new(PhantomKind::Spheres, SHIPPED_SHAPE, seed, af)
    }

    pub fn recon(&self, method: Method, cfg: &SolverConfig) -> Result<VolumeRecon, CliError> {
        Ok(recon_volume(&self.kspace, &self.mask, method, cfg)?)
    }

    /// Complex PSNR of `img` against the reference echo.
    pub fn psnr(&self, img: &ComplexVolume) -> Result<f64, CliError> {
        Ok(metrics::psnr_complex(
            img.data(),
            self.reference.data(),
            None,
        )?)
    }

    /// Wrapped phase RMSE against the reference echo inside the phantom support.
    pub fn phase_rmse(&self, img: &ComplexVolume) -> Result<f64, CliError> {
        let m = &self.phantom.mask;
        let a = metrics::select(img.phase().data(), m);
        let b = metrics::select(self.reference.phase().data(), m);
        Ok(metrics::rmse_phase(&a, &b)?)
    }

    pub fn datasets(&self) -> Result<(Dataset, Dataset), CliError> {
        let (train, held) = slice_split(self.reference.shape()[0]);
        Ok((
            Dataset::from_volumes(&self.zero_fill, &self.reference, &self.mask, &train)?,
            Dataset::from_volumes(&self.zero_fill, &self.reference, &self.mask, &held)?,
        ))
    }
}

/// Summary of one toy training run.
#[derive(Debug, Clone)]
pub struct ToyRun {
    pub model: DcrNetModel,
    pub report: TrainReport,
    /// Training-set MSE in train mode before and after training.
    pub train_mse: (f64, f64),
    /// Training-set MSE in eval mode before and after training.
    pub eval_mse: (f64, f64),
    /// Held-out PSNR of the network and of zero-filling.
    pub held_psnr: (f64, f64),
    pub seconds: f64,
}

fn dataset_psnr(pred: &dcrnet::ComplexTensor, data: &Dataset) -> Result<f64, CliError> {
    let peak = data
        .targets
        .re
        .iter()
        .zip(&data.targets.im)
        .map(|(a, b)| a.hypot(*b))
        .fold(0.0, f64::max);
    let (mse, _) = dcrnet::mse_loss(pred, &data.targets)?;
    Ok(metrics::psnr_from_rmse(peak, mse.sqrt()))
}

/// Trains the toy network on the scenario's training slices.
pub fn train_toy_run(s: &Scenario, arch: Arch, cfg: &TrainConfig) -> Result<ToyRun, CliError> {
    let (train, held) = s.datasets()?;
    let mut model = DcrNetModel::new(arch, cfg.init_std, cfg.seed)?;
    let before = (
        train.mse(&model, Mode::Train)?,
        train.mse(&model, Mode::Eval)?,
    );
    let t = Instant::now();
    let report = train_toy(&train, &mut model, cfg)?;
    let seconds = t.elapsed().as_secs_f64();
    let after = (
        train.mse(&model, Mode::Train)?,
        train.mse(&model, Mode::Eval)?,
    );
    let pred = model.forward_in(&held.inputs, Some(&held.consistency()), Mode::Eval)?;
    let held_psnr = (
        dataset_psnr(&pred, &held)?,
        dataset_psnr(&held.inputs, &held)?,
    );
    Ok(ToyRun {
        model,
        report,
        train_mse: (before.0, after.0),
        eval_mse: (before.1, after.1),
        held_psnr,
        seconds,
    })
}
