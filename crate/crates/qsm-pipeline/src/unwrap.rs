//! Reliability-guided 3D phase unwrapping.
//!
//! Voxel reliability is the inverse of the summed squared wrapped second
//! differences along x, y and z; voxels without both neighbours inside the
//! mask get reliability 0. Edges between 6-connected mask voxels are visited
//! in order of decreasing summed reliability, and the two groups they join
//! are merged with the 2*pi offset that best matches the pair.

use kspace_core::RealVolume;

use crate::error::QsmError;
use crate::Result;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn wrap(p: f64) -> f64 {
    p - TWO_PI * (p / TWO_PI).round()
}

/// Unwraps `wrapped` inside `mask`; voxels outside the mask are set to 0.
///
/// Each connected mask component is unwrapped independently, so the result
/// matches the true phase up to one multiple of 2*pi per component.
pub fn unwrap_phase(wrapped: &RealVolume, mask: &[bool]) -> Result<RealVolume> {
    let shape = wrapped.shape();
    let n = wrapped.len();
    if mask.len() != n {
        return Err(QsmError::Shape(format!(
            "mask has {} voxels, phase has {n}",
            mask.len()
        )));
    }
    if !mask.iter().any(|&m| m) {
        return Err(QsmError::EmptyMask("unwrap_phase"));
    }
    let phi = wrapped.data();
    let strides = [1, shape[0], shape[0] * shape[1]];
    let coord = |i: usize| {
        [
            i % shape[0],
            (i / shape[0]) % shape[1],
            i / (shape[0] * shape[1]),
        ]
    };

    let reliability: Vec<f64> = (0..n)
        .map(|i| {
            if !mask[i] {
                return 0.0;
            }
            let c = coord(i);
            let mut d2 = 0.0;
            for a in 0..3 {
                if c[a] == 0 || c[a] + 1 >= shape[a] {
                    return 0.0;
                }
                let (lo, hi) = (i - strides[a], i + strides[a]);
                if !mask[lo] || !mask[hi] {
                    return 0.0;
                }
                let d = wrap(phi[lo] - phi[i]) - wrap(phi[i] - phi[hi]);
                d2 += d * d;
            }
            1.0 / (d2 + 1e-30)
        })
        .collect();

    let mut edges: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..n {
        if !mask[i] {
            continue;
        }
        let c = coord(i);
        for a in 0..3 {
            if c[a] + 1 < shape[a] {
                let j = i + strides[a];
                if mask[j] {
                    edges.push((reliability[i] + reliability[j], i, j));
                }
            }
        }
    }
    edges.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    // group id per voxel, members per group, integer 2*pi offset per voxel
    let mut group: Vec<usize> = (0..n).collect();
    let mut members: Vec<Vec<usize>> = (0..n)
        .map(|i| if mask[i] { vec![i] } else { Vec::new() })
        .collect();
    let mut turns = vec![0i64; n];
    for &(_, i, j) in &edges {
        let (gi, gj) = (group[i], group[j]);
        if gi == gj {
            continue;
        }
        let ui = phi[i] + TWO_PI * turns[i] as f64;
        let uj = phi[j] + TWO_PI * turns[j] as f64;
        let k = ((ui - uj) / TWO_PI).round() as i64;
        let (keep, moved, shift) = if members[gi].len() >= members[gj].len() {
            (gi, gj, k)
        } else {
            (gj, gi, -k)
        };
        let moving = std::mem::take(&mut members[moved]);
        for &v in &moving {
            turns[v] += shift;
            group[v] = keep;
        }
        members[keep].extend(moving);
    }

    let out = (0..n)
        .map(|i| {
            if mask[i] {
                phi[i] + TWO_PI * turns[i] as f64
            } else {
                0.0
            }
        })
        .collect();
    Ok(RealVolume::new(shape, out)?)
}
