//! Training-time Gaussian noise layer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::DcrError;
use crate::tensor::ComplexTensor;
use crate::Result;

/// Adds i.i.d. zero-mean Gaussian noise to both parts, with one standard
/// deviation per sample drawn uniformly from `[0, sigma_max]`.
pub fn add_noise(x: &ComplexTensor, sigma_max: f64, seed: u64) -> Result<ComplexTensor> {
    if !(sigma_max >= 0.0 && sigma_max.is_finite()) {
        return Err(DcrError::Param(format!(
            "sigma_max must be finite and nonnegative, got {sigma_max}"
        )));
    }
    let mut out = x.clone();
    if sigma_max == 0.0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per = x.len() / x.dims[0];
    for b in 0..x.dims[0] {
        let sigma = rng.random_range(0.0..=sigma_max);
        for i in b * per..(b + 1) * per {
            out.re[i] += sigma * rng.sample::<f64, _>(StandardNormal);
            out.im[i] += sigma * rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok(out)
}
