//! Variable-density ky-kz sampling masks.
//!
//! The sampling density is `exp(-Pa * sqrt(ky^2/ny + kz^2/nz)^Pb)` on centered
//! integer coordinates `ky in [-ny/2, ny/2)`. A mask is realized with an exact
//! line count: every line draws one uniform deviate `u` from a ChaCha8 stream
//! seeded with `seed` (deviates are drawn in y-fastest order), its score is
//! `u / pdf`, calibration lines get score 0, and the `round(ny * nz / af)`
//! lowest scores are kept. Ties keep the lower linear index.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::KspaceError;
use crate::Result;

/// Radial exponent used for every published acceleration factor.
pub const PUBLISHED_PB: f64 = 1.8;

/// Default calibration half-widths (ky, kz): a 12 x 6 block.
pub const DEFAULT_CALIB: [usize; 2] = [6, 3];

/// Decay strength for a given acceleration factor.
///
/// Returns the published values 7, 12, 17 and 22 for AF 2, 4, 6 and 8. Those
/// four points lie on `Pa = 2.5 * af + 2`, which is used for other factors.
pub fn published_pa(af: f64) -> f64 {
    2.5 * af + 2.0
}

/// Parameters that fully determine a sampling mask.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskSpec {
    #[serde(rename = "Pa")]
    pub pa: f64,
    #[serde(rename = "Pb")]
    pub pb: f64,
    pub af: f64,
    #[serde(skip)]
    pub ny: usize,
    #[serde(skip)]
    pub nz: usize,
    /// Half-widths of the always-sampled central block along (ky, kz).
    pub calib: [usize; 2],
    pub seed: u64,
}

impl MaskSpec {
    /// Spec with the published `(Pa, Pb)` pair for `af` and the default calibration block.
    pub fn published(af: f64, ny: usize, nz: usize, seed: u64) -> Result<Self> {
        let spec = Self {
            pa: published_pa(af),
            pb: PUBLISHED_PB,
            af,
            ny,
            nz,
            calib: DEFAULT_CALIB,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(KspaceError::InvalidSpec(m));
        if !(self.af.is_finite() && self.af >= 1.0) {
            return bad(format!("af must be >= 1, got {}", self.af));
        }
        if !(self.pa.is_finite() && self.pa > 0.0) {
            return bad(format!("Pa must be positive, got {}", self.pa));
        }
        if !(self.pb.is_finite() && self.pb > 0.0) {
            return bad(format!("Pb must be positive, got {}", self.pb));
        }
        if self.ny == 0 || self.nz == 0 {
            return bad(format!(
                "plane extents must be positive, got {}x{}",
                self.ny, self.nz
            ));
        }
        if 2 * self.calib[0] > self.ny || 2 * self.calib[1] > self.nz {
            return bad(format!(
                "calibration block {}x{} does not fit in {}x{}",
                2 * self.calib[0],
                2 * self.calib[1],
                self.ny,
                self.nz
            ));
        }
        Ok(())
    }

    /// Number of sampled lines, `round(ny * nz / af)`.
    pub fn target_count(&self) -> usize {
        ((self.ny * self.nz) as f64 / self.af).round() as usize
    }

    /// Number of lines in the calibration block.
    pub fn calib_count(&self) -> usize {
        4 * self.calib[0] * self.calib[1]
    }

    /// Whether plane position `(iy, iz)` lies in the calibration block.
    pub fn in_calib(&self, iy: usize, iz: usize) -> bool {
        let (cy, cz) = (self.ny / 2, self.nz / 2);
        iy + self.calib[0] >= cy
            && iy < cy + self.calib[0]
            && iz + self.calib[1] >= cz
            && iz < cz + self.calib[1]
    }
}

/// Sampling density over the ky-kz plane, y-fastest.
pub fn pdf_map(spec: &MaskSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let (ny, nz) = (spec.ny, spec.nz);
    let mut out = Vec::with_capacity(ny * nz);
    for iz in 0..nz {
        let kz = iz as f64 - (nz / 2) as f64;
        for iy in 0..ny {
            let ky = iy as f64 - (ny / 2) as f64;
            out.push(pdf_value(spec.pa, spec.pb, ky, kz, ny, nz));
        }
    }
    Ok(out)
}

/// Density at one centered coordinate.
pub fn pdf_value(pa: f64, pb: f64, ky: f64, kz: f64, ny: usize, nz: usize) -> f64 {
    let r = (ky * ky / ny as f64 + kz * kz / nz as f64).sqrt();
    (-pa * r.powf(pb)).exp()
}

/// A realized ky-kz sampling plane together with the spec that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingMask {
    plane: Vec<bool>,
    spec: MaskSpec,
}

impl SamplingMask {
    /// Rebuilds a mask from a stored plane, checking count and calibration invariants.
    pub fn from_parts(plane: Vec<bool>, spec: MaskSpec) -> Result<Self> {
        spec.validate()?;
        if plane.len() != spec.ny * spec.nz {
            return Err(KspaceError::Shape(format!(
                "plane has {} entries, spec needs {}",
                plane.len(),
                spec.ny * spec.nz
            )));
        }
        let count = plane.iter().filter(|&&b| b).count();
        if count != spec.target_count() {
            return Err(KspaceError::InvalidSpec(format!(
                "plane has {count} sampled lines, spec requires {}",
                spec.target_count()
            )));
        }
        for iz in 0..spec.nz {
            for iy in 0..spec.ny {
                if spec.in_calib(iy, iz) && !plane[iy + spec.ny * iz] {
                    return Err(KspaceError::InvalidSpec(format!(
                        "calibration line ({iy}, {iz}) not sampled"
                    )));
                }
            }
        }
        Ok(Self { plane, spec })
    }

    /// Fully sampled plane (af = 1, no calibration block needed).
    pub fn full(ny: usize, nz: usize) -> Result<Self> {
        let spec = MaskSpec {
            pa: 1.0,
            pb: 1.0,
            af: 1.0,
            ny,
            nz,
            calib: [0, 0],
            seed: 0,
        };
        spec.validate()?;
        Ok(Self {
            plane: vec![true; ny * nz],
            spec,
        })
    }

    pub fn plane(&self) -> &[bool] {
        &self.plane
    }

    pub fn spec(&self) -> &MaskSpec {
        &self.spec
    }

    pub fn ny(&self) -> usize {
        self.spec.ny
    }

    pub fn nz(&self) -> usize {
        self.spec.nz
    }

    pub fn count(&self) -> usize {
        self.plane.iter().filter(|&&b| b).count()
    }

    #[inline]
    pub fn is_sampled(&self, iy: usize, iz: usize) -> bool {
        self.plane[iy + self.spec.ny * iz]
    }

    /// Fraction of acquired lines.
    pub fn fraction(&self) -> f64 {
        self.count() as f64 / self.plane.len() as f64
    }
}

/// Draws the exact-count mask described by `spec`.
pub fn realize_mask(spec: &MaskSpec) -> Result<SamplingMask> {
    spec.validate()?;
    let n = spec.ny * spec.nz;
    let target = spec.target_count();
    if target < spec.calib_count() {
        return Err(KspaceError::InvalidSpec(format!(
            "target count {target} is smaller than the calibration block ({})",
            spec.calib_count()
        )));
    }
    let pdf = pdf_map(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut scores: Vec<(f64, usize)> = Vec::with_capacity(n);
    for (i, &p) in pdf.iter().enumerate() {
        let u: f64 = rng.random();
        let (iy, iz) = (i % spec.ny, i / spec.ny);
        let s = if spec.in_calib(iy, iz) {
            0.0
        } else if p > 0.0 {
            u / p
        } else {
            f64::INFINITY
        };
        scores.push((s, i));
    }
    scores.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut plane = vec![false; n];
    for &(_, i) in scores.iter().take(target) {
        plane[i] = true;
    }
    Ok(SamplingMask { plane, spec: *spec })
}
