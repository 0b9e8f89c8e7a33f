//! Toy-scale training on synthetic slices and slice-wise volume inference.

use std::path::Path;

use kspace_core::{x_slices, ComplexVolume, Domain, SamplingMask};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adam::{Adam, AdamConfig};
use crate::dc::{from_complex, planes_dft, Consistency};
use crate::error::DcrError;
use crate::model::{DcrNetModel, Mode};
use crate::noise::add_noise;
use crate::tensor::{mse_loss, ComplexTensor};
use crate::Result;

/// A learning rate held for `fraction` of the total steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrStage {
    pub fraction: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch: usize,
    pub stages: Vec<LrStage>,
    pub adam: AdamConfig,
    pub init_std: f64,
    pub noise_sigma_max: f64,
    pub seed: u64,
}

impl TrainConfig {
    /// 200 steps of batch 8 with rates 1e-3, 1e-4, 1e-5 over 40/40/20% of the steps.
    pub fn toy() -> Self {
        Self {
            steps: 200,
            batch: 8,
            stages: vec![
                LrStage {
                    fraction: 0.4,
                    lr: 1e-3,
                },
                LrStage {
                    fraction: 0.4,
                    lr: 1e-4,
                },
                LrStage {
                    fraction: 0.2,
                    lr: 1e-5,
                },
            ],
            adam: AdamConfig::default(),
            init_std: 0.01,
            noise_sigma_max: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch == 0 {
            return Err(DcrError::Param("batch must be positive".into()));
        }
        if self.stages.is_empty()
            || self
                .stages
                .iter()
                .any(|s| !(s.fraction > 0.0) || !(s.lr >= 0.0))
        {
            return Err(DcrError::Param(
                "stages need positive fractions and nonnegative rates".into(),
            ));
        }
        Ok(())
    }

    /// Learning rate at `step`; the last stage extends to the end.
    pub fn lr_at(&self, step: usize) -> f64 {
        let f = step as f64 / self.steps.max(1) as f64;
        let mut edge = 0.0;
        for s in &self.stages {
            edge += s.fraction;
            if f < edge - 1e-12 {
                return s.lr;
            }
        }
        self.stages.last().map_or(0.0, |s| s.lr)
    }
}

/// Per-step loss and learning rate.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    pub losses: Vec<f64>,
    pub lrs: Vec<f64>,
}

/// Normalized training slices sharing one sampling plane.
///
/// Inputs and targets are divided by the largest zero-fill magnitude of the
/// whole volume; `kspace` is the masked transform of each input.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: ComplexTensor,
    pub targets: ComplexTensor,
    pub kspace: ComplexTensor,
    pub mask: Vec<bool>,
    pub scale: f64,
}

pub(crate) fn masked_kspace(x: &ComplexTensor, mask: &[bool]) -> ComplexTensor {
    let mut k = planes_dft(x, false);
    let p = x.plane();
    k.iter_mut()
        .enumerate()
        .filter(|(i, _)| !mask[i % p])
        .for_each(|(_, v)| *v = kspace_core::C64::new(0.0, 0.0));
    from_complex(x.dims, &k)
}

fn max_abs(v: &ComplexVolume) -> f64 {
    v.data().iter().map(|c| c.norm()).fold(0.0, f64::max)
}

impl Dataset {
    /// x-slices `xs` of a zero-filled volume and its ground truth.
    pub fn from_volumes(
        zf: &ComplexVolume,
        truth: &ComplexVolume,
        mask: &SamplingMask,
        xs: &[usize],
    ) -> Result<Self> {
        if zf.shape() != truth.shape() {
            return Err(DcrError::Shape(
                "zero-fill and truth differ in shape".into(),
            ));
        }
        let [nx, ny, nz] = zf.shape();
        if mask.ny() != ny || mask.nz() != nz {
            return Err(DcrError::Shape(
                "mask plane does not match the volume".into(),
            ));
        }
        if xs.is_empty() {
            return Err(DcrError::EmptyDataset);
        }
        if let Some(&x) = xs.iter().find(|&&x| x >= nx) {
            return Err(DcrError::Shape(format!(
                "slice {x} out of range for nx = {nx}"
            )));
        }
        let scale = max_abs(zf);
        if !(scale > 0.0) {
            return Err(DcrError::Param(
                "zero-fill volume is identically zero".into(),
            ));
        }
        let pick = |v: &ComplexVolume| -> Result<ComplexTensor> {
            let slices = x_slices(v)?;
            let chosen: Vec<_> = xs.iter().map(|&x| &slices[x]).collect();
            let mut t = ComplexTensor::from_slices(&chosen)?;
            t.re.iter_mut()
                .chain(t.im.iter_mut())
                .for_each(|a| *a /= scale);
            Ok(t)
        };
        let inputs = pick(zf)?;
        let targets = pick(truth)?;
        let kspace = masked_kspace(&inputs, mask.plane());
        Ok(Self {
            inputs,
            targets,
            kspace,
            mask: mask.plane().to_vec(),
            scale,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.dims[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn consistency(&self) -> Consistency<'_> {
        Consistency {
            kspace: &self.kspace,
            mask: &self.mask,
        }
    }

    /// MSE of the model on the whole set in one batch, with BN in `mode`.
    pub fn mse(&self, model: &DcrNetModel, mode: Mode) -> Result<f64> {
        let pred = model.forward_in(&self.inputs, Some(&self.consistency()), mode)?;
        Ok(mse_loss(&pred, &self.targets)?.0)
    }
}

/// Runs the Adam schedule on random mini-batches drawn without replacement.
pub fn train_toy(
    data: &Dataset,
    model: &mut DcrNetModel,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(DcrError::EmptyDataset);
    }
    let batch = cfg.batch.min(data.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(model, cfg.adam);
    let mut report = TrainReport::default();
    for step in 0..cfg.steps {
        let lr = cfg.lr_at(step);
        let idx = rand::seq::index::sample(&mut rng, data.len(), batch).into_vec();
        let mut x = data.inputs.select(&idx);
        let mut k = data.kspace.select(&idx);
        if cfg.noise_sigma_max > 0.0 {
            x = add_noise(&x, cfg.noise_sigma_max, rng.random())?;
            k = masked_kspace(&x, &data.mask);
        }
        let target = data.targets.select(&idx);
        let (pred, tape) = model.forward_train(
            &x,
            Some(&Consistency {
                kspace: &k,
                mask: &data.mask,
            }),
        )?;
        let (loss, g) = mse_loss(&pred, &target)?;
        let grads = model.backward(&tape, &g)?;
        adam.update(model, &grads, lr)?;
        report.losses.push(loss);
        report.lrs.push(lr);
    }
    Ok(report)
}

/// Reconstructs every x-slice of a zero-filled volume with running BN statistics.
///
/// Slices are normalized by the volume's largest zero-fill magnitude and the
/// output is scaled back.
pub fn reconstruct_volume(
    model: &DcrNetModel,
    zf: &ComplexVolume,
    mask: &SamplingMask,
) -> Result<ComplexVolume> {
    let [nx, ny, nz] = zf.shape();
    if mask.ny() != ny || mask.nz() != nz {
        return Err(DcrError::Shape(
            "mask plane does not match the volume".into(),
        ));
    }
    let scale = max_abs(zf);
    if scale == 0.0 {
        return Ok(ComplexVolume::zeros(zf.shape(), Domain::Image)?);
    }
    let slices = x_slices(zf)?;
    let mut out = Vec::with_capacity(nx);
    for chunk in slices.chunks(8) {
        let refs: Vec<_> = chunk.iter().collect();
        let mut x = ComplexTensor::from_slices(&refs)?;
        x.re.iter_mut()
            .chain(x.im.iter_mut())
            .for_each(|a| *a /= scale);
        let k = masked_kspace(&x, mask.plane());
        let mut y = model.forward_in(
            &x,
            Some(&Consistency {
                kspace: &k,
                mask: mask.plane(),
            }),
            Mode::Eval,
        )?;
        y.re.iter_mut()
            .chain(y.im.iter_mut())
            .for_each(|a| *a *= scale);
        out.extend(y.to_slices(Domain::Image)?);
    }
    Ok(kspace_core::stack_x_slices(&out, Domain::Image)?)
}

/// Writes `step,lr,loss` rows.
pub fn write_trace(path: &Path, report: &TrainReport) -> Result<()> {
    kspace_core::io::write_atomic(path, |w| {
        let fmt = |e: csv::Error| kspace_core::KspaceError::Format(e.to_string());
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["step", "lr", "loss"]).map_err(fmt)?;
        for (i, (lr, loss)) in report.lrs.iter().zip(&report.losses).enumerate() {
            out.write_record([i.to_string(), lr.to_string(), loss.to_string()])
                .map_err(fmt)?;
        }
        out.flush()?;
        Ok(())
    })?;
    Ok(())
}
