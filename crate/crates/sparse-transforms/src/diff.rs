//! Forward finite differences with replicate-edge boundaries.
//!
//! Along axis `a`, `d[i] = x[i + e_a] - x[i]` for every sample that has a
//! successor and `0` on the last plane (the replicated edge). Constant fields
//! therefore map to exactly zero.

use crate::{Coef, Result, TransformError};

/// Stacked per-axis difference operator `C`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffOperator {
    pub axes: Vec<usize>,
}

impl DiffOperator {
    pub fn new(axes: &[usize]) -> Self {
        Self {
            axes: axes.to_vec(),
        }
    }

    fn check(&self, shape: &[usize], len: usize) -> Result<()> {
        if let Some(&axis) = self.axes.iter().find(|&&a| a >= shape.len()) {
            return Err(TransformError::Axis {
                axis,
                rank: shape.len(),
            });
        }
        if len != shape.iter().product::<usize>() {
            return Err(TransformError::Shape(format!(
                "{len} samples for shape {shape:?}"
            )));
        }
        Ok(())
    }
}

fn stride_of(shape: &[usize], axis: usize) -> usize {
    shape[..axis].iter().product()
}

/// `C x`: one difference field per axis of `op`, same layout as `x` (first axis fastest).
pub fn finite_diff<T: Coef>(x: &[T], shape: &[usize], op: &DiffOperator) -> Result<Vec<Vec<T>>> {
    op.check(shape, x.len())?;
    Ok(op
        .axes
        .iter()
        .map(|&a| {
            let s = stride_of(shape, a);
            let n = shape[a];
            (0..x.len())
                .map(|i| {
                    if (i / s) % n + 1 < n {
                        x[i + s] - x[i]
                    } else {
                        T::default()
                    }
                })
                .collect()
        })
        .collect())
}

/// `C^H d`: exact adjoint of [`finite_diff`].
pub fn finite_diff_adj<T: Coef>(
    d: &[Vec<T>],
    shape: &[usize],
    op: &DiffOperator,
) -> Result<Vec<T>> {
    let len: usize = shape.iter().product();
    op.check(shape, len)?;
    if d.len() != op.axes.len() || d.iter().any(|f| f.len() != len) {
        return Err(TransformError::Shape(
            "difference fields do not match operator".into(),
        ));
    }
    let mut out = vec![T::default(); len];
    for (&a, field) in op.axes.iter().zip(d) {
        let s = stride_of(shape, a);
        let n = shape[a];
        for (i, o) in out.iter_mut().enumerate() {
            let c = (i / s) % n;
            let mut v = *o;
            if c + 1 < n {
                v = v - field[i];
            }
            if c >= 1 {
                v = v + field[i - s];
            }
            *o = v;
        }
    }
    Ok(out)
}
