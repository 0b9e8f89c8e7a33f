//! Phase-shift sets for phase cycling.

use kspace_core::ComplexSlice;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::SolverError;
use crate::Result;

/// Phase fields added to the phase before its proximal step.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseShiftSet {
    shape: [usize; 2],
    shifts: Vec<Vec<f64>>,
    seed: u64,
}

impl PhaseShiftSet {
    /// Wraps arbitrary shift fields, each with `shape[0] * shape[1]` samples.
    pub fn from_fields(shape: [usize; 2], shifts: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        if shifts.is_empty() {
            return Err(SolverError::Config(
                "a shift set needs at least one shift".into(),
            ));
        }
        let n = shape[0] * shape[1];
        if let Some(f) = shifts.iter().find(|f| f.len() != n) {
            return Err(SolverError::Shape(format!(
                "shift has {} samples, slice has {n}",
                f.len()
            )));
        }
        Ok(Self {
            shape,
            shifts,
            seed,
        })
    }

    /// Spatially constant shifts with the given offsets.
    pub fn constant(shape: [usize; 2], offsets: &[f64], seed: u64) -> Result<Self> {
        let n = shape[0] * shape[1];
        Self::from_fields(shape, offsets.iter().map(|&o| vec![o; n]).collect(), seed)
    }

    pub fn shape(&self) -> [usize; 2] {
        self.shape
    }

    pub fn count(&self) -> usize {
        self.shifts.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn shifts(&self) -> &[Vec<f64>] {
        &self.shifts
    }

    /// Shift used at outer iteration `t` (cycled in order).
    pub fn cycled(&self, t: usize) -> &[f64] {
        &self.shifts[t % self.shifts.len()]
    }

    /// Returns a copy with `c` added to every shift.
    pub fn offset_by(&self, c: f64) -> Self {
        let shifts = self
            .shifts
            .iter()
            .map(|f| f.iter().map(|v| v + c).collect())
            .collect();
        Self {
            shape: self.shape,
            shifts,
            seed: self.seed,
        }
    }
}

/// The zero shift followed by `count - 1` constant offsets uniform on `[-pi, pi)`.
///
/// Offsets come from a ChaCha8 stream seeded with `seed`; the zero-fill image
/// fixes the field shape.
pub fn gen_phase_shifts(zf: &ComplexSlice, count: usize, seed: u64) -> Result<PhaseShiftSet> {
    if count == 0 {
        return Err(SolverError::Config("shift count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pi = std::f64::consts::PI;
    let mut offsets = vec![0.0];
    offsets.extend((1..count).map(|_| -pi + 2.0 * pi * rng.random::<f64>()));
    PhaseShiftSet::constant(zf.shape(), &offsets, seed)
}
