//! Image-fidelity and region metrics.
//!
//! PSNR defaults its data range to `max |ref|`. SSIM is the mean over all
//! window positions that fit inside the image, with an 11x11 Gaussian window
//! (sigma 1.5, weights summing to 1) and constants `(k1 L)^2`, `(k2 L)^2`.

use kspace_core::{ComplexVolume, RealVolume, C64};
use thiserror::Error;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("data range must be positive and finite, got {0}")]
    DataRange(f64),
    #[error("{window}x{window} window does not fit a {rows}x{cols} image")]
    Window {
        window: usize,
        rows: usize,
        cols: usize,
    },
    #[error("region {0:?} is empty")]
    EmptyRegion(String),
    #[error("degenerate regression: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, MetricError>;

fn same_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(MetricError::Shape(format!("{a} samples vs {b}")));
    }
    if a == 0 {
        return Err(MetricError::Shape("inputs are empty".into()));
    }
    Ok(())
}

fn check_range(range: f64) -> Result<f64> {
    if range > 0.0 && range.is_finite() {
        Ok(range)
    } else {
        Err(MetricError::DataRange(range))
    }
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(p: f64) -> f64 {
    let w = p - TWO_PI * (p / TWO_PI).round();
    if w <= -std::f64::consts::PI {
        w + TWO_PI
    } else {
        w
    }
}

/// PSNR in dB for a given data range and RMSE; `+inf` when the RMSE is 0.
pub fn psnr_from_rmse(data_range: f64, rmse: f64) -> f64 {
    if rmse == 0.0 {
        f64::INFINITY
    } else {
        20.0 * (data_range / rmse).log10()
    }
}

pub fn rmse_real(test: &[f64], reference: &[f64]) -> Result<f64> {
    same_len(test.len(), reference.len())?;
    let s: f64 = test
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((s / test.len() as f64).sqrt())
}

/// RMSE of `|test - ref|` in the complex plane.
pub fn rmse_complex(test: &[C64], reference: &[C64]) -> Result<f64> {
    same_len(test.len(), reference.len())?;
    let s: f64 = test
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    Ok((s / test.len() as f64).sqrt())
}

/// RMSE of wrapped phase differences.
pub fn rmse_phase(test: &[f64], reference: &[f64]) -> Result<f64> {
    same_len(test.len(), reference.len())?;
    let s: f64 = test
        .iter()
        .zip(reference)
        .map(|(a, b)| wrap_angle(a - b).powi(2))
        .sum();
    Ok((s / test.len() as f64).sqrt())
}

fn max_abs(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, |m, x| m.max(x.abs()))
}

pub fn psnr_real(test: &[f64], reference: &[f64], data_range: Option<f64>) -> Result<f64> {
    let range = check_range(data_range.unwrap_or_else(|| max_abs(reference.iter().copied())))?;
    Ok(psnr_from_rmse(range, rmse_real(test, reference)?))
}

pub fn psnr_complex(test: &[C64], reference: &[C64], data_range: Option<f64>) -> Result<f64> {
    let range =
        check_range(data_range.unwrap_or_else(|| max_abs(reference.iter().map(|c| c.norm()))))?;
    Ok(psnr_from_rmse(range, rmse_complex(test, reference)?))
}

/// PSNR of wrapped phase differences.
pub fn psnr_phase(test: &[f64], reference: &[f64], data_range: Option<f64>) -> Result<f64> {
    let range = check_range(data_range.unwrap_or_else(|| max_abs(reference.iter().copied())))?;
    Ok(psnr_from_rmse(range, rmse_phase(test, reference)?))
}

/// Normalized 1D Gaussian taps of the SSIM window.
pub fn gaussian_taps() -> [f64; SSIM_WINDOW] {
    let c = (SSIM_WINDOW / 2) as f64;
    let mut t = [0.0; SSIM_WINDOW];
    for (i, v) in t.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = t.iter().sum();
    t.iter_mut().for_each(|v| *v /= s);
    t
}

/// Valid-mode separable filtering of a `rows x cols` image (cols fastest).
fn filter_valid(img: &[f64], rows: usize, cols: usize, taps: &[f64]) -> Vec<f64> {
    let w = taps.len();
    let (orows, ocols) = (rows + 1 - w, cols + 1 - w);
    let mut tmp = vec![0.0; rows * ocols];
    for r in 0..rows {
        for c in 0..ocols {
            tmp[r * ocols + c] = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * img[r * cols + c + k])
                .sum();
        }
    }
    let mut out = vec![0.0; orows * ocols];
    for r in 0..orows {
        for c in 0..ocols {
            out[r * ocols + c] = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * tmp[(r + k) * ocols + c])
                .sum();
        }
    }
    out
}

/// Mean SSIM of two real `rows x cols` images (cols fastest).
pub fn ssim_2d(
    test: &[f64],
    reference: &[f64],
    rows: usize,
    cols: usize,
    data_range: f64,
) -> Result<f64> {
    same_len(test.len(), reference.len())?;
    if test.len() != rows * cols {
        return Err(MetricError::Shape(format!(
            "{} samples for a {rows}x{cols} image",
            test.len()
        )));
    }
    if rows < SSIM_WINDOW || cols < SSIM_WINDOW {
        return Err(MetricError::Window {
            window: SSIM_WINDOW,
            rows,
            cols,
        });
    }
    let l = check_range(data_range)?;
    let (c1, c2) = ((SSIM_K1 * l).powi(2), (SSIM_K2 * l).powi(2));
    let taps = gaussian_taps();
    let prod = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> {
        test.iter().zip(reference).map(|(&a, &b)| f(a, b)).collect()
    };
    let mx = filter_valid(test, rows, cols, &taps);
    let my = filter_valid(reference, rows, cols, &taps);
    let mxx = filter_valid(&prod(&|a, _| a * a), rows, cols, &taps);
    let myy = filter_valid(&prod(&|_, b| b * b), rows, cols, &taps);
    let mxy = filter_valid(&prod(&|a, b| a * b), rows, cols, &taps);
    let mut total = 0.0;
    for i in 0..mx.len() {
        let (ux, uy) = (mx[i], my[i]);
        let (vx, vy, cxy) = (mxx[i] - ux * ux, myy[i] - uy * uy, mxy[i] - ux * uy);
        total +=
            (2.0 * ux * uy + c1) * (2.0 * cxy + c2) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
    }
    Ok(total / mx.len() as f64)
}

/// `(ny, nz)` plane of every x position, y fastest.
fn planes(v: &RealVolume) -> Vec<Vec<f64>> {
    let [nx, ny, nz] = v.shape();
    let d = v.data();
    (0..nx)
        .map(|x| (0..ny * nz).map(|l| d[x + nx * l]).collect())
        .collect()
}

fn same_shape(a: [usize; 3], b: [usize; 3]) -> Result<()> {
    if a != b {
        return Err(MetricError::Shape(format!("{a:?} vs {b:?}")));
    }
    Ok(())
}

/// SSIM averaged over x-slices; the data range defaults to `max |ref|` of the volume.
pub fn ssim_volume(
    test: &RealVolume,
    reference: &RealVolume,
    data_range: Option<f64>,
) -> Result<f64> {
    same_shape(test.shape(), reference.shape())?;
    let [_, ny, nz] = test.shape();
    let range = data_range.unwrap_or_else(|| max_abs(reference.data().iter().copied()));
    let (a, b) = (planes(test), planes(reference));
    let mut sum = 0.0;
    for (p, q) in a.iter().zip(&b) {
        sum += ssim_2d(p, q, nz, ny, range)?;
    }
    Ok(sum / a.len() as f64)
}

/// SSIM of the central x-slice.
pub fn ssim_central(
    test: &RealVolume,
    reference: &RealVolume,
    data_range: Option<f64>,
) -> Result<f64> {
    same_shape(test.shape(), reference.shape())?;
    let [nx, ny, nz] = test.shape();
    let range = data_range.unwrap_or_else(|| max_abs(reference.data().iter().copied()));
    ssim_2d(
        &planes(test)[nx / 2],
        &planes(reference)[nx / 2],
        nz,
        ny,
        range,
    )
}

/// SSIM of magnitude images averaged over x-slices.
pub fn ssim_magnitude(test: &ComplexVolume, reference: &ComplexVolume) -> Result<f64> {
    ssim_volume(&test.magnitude(), &reference.magnitude(), None)
}

/// Named boolean regions over a volume.
#[derive(Debug, Clone, PartialEq)]
pub struct RoiMask {
    shape: [usize; 3],
    regions: Vec<(String, Vec<bool>)>,
}

impl RoiMask {
    pub fn new(shape: [usize; 3]) -> Self {
        Self {
            shape,
            regions: Vec::new(),
        }
    }

    pub fn add(&mut self, name: impl Into<String>, region: Vec<bool>) -> Result<()> {
        let n: usize = self.shape.iter().product();
        if region.len() != n {
            return Err(MetricError::Shape(format!(
                "region has {} voxels, volume has {n}",
                region.len()
            )));
        }
        self.regions.push((name.into(), region));
        Ok(())
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn regions(&self) -> &[(String, Vec<bool>)] {
        &self.regions
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoiStat {
    pub name: String,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub count: usize,
}

pub fn roi_stats(volume: &RealVolume, rois: &RoiMask) -> Result<Vec<RoiStat>> {
    same_shape(volume.shape(), rois.shape())?;
    rois.regions
        .iter()
        .map(|(name, region)| {
            let vals: Vec<f64> = volume
                .data()
                .iter()
                .zip(region)
                .filter(|(_, &r)| r)
                .map(|(&v, _)| v)
                .collect();
            if vals.is_empty() {
                return Err(MetricError::EmptyRegion(name.clone()));
            }
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            Ok(RoiStat {
                name: name.clone(),
                mean,
                std: var.sqrt(),
                count: vals.len(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    /// `1 - SS_res / SS_tot`, defined as 0 when `y` is constant.
    pub r_squared: f64,
    pub sse: f64,
    pub n: usize,
}

/// Ordinary least squares fit `y = slope * x + intercept`.
pub fn linreg(x: &[f64], y: &[f64]) -> Result<RegressionResult> {
    if x.len() != y.len() {
        return Err(MetricError::Shape(format!(
            "{} x values vs {} y values",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(MetricError::Degenerate(format!(
            "need at least 2 points, got {}",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(MetricError::Degenerate("x has zero variance".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .sum();
    let sst: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let r_squared = if sst > 0.0 { 1.0 - sse / sst } else { 0.0 };
    Ok(RegressionResult {
        slope,
        intercept,
        r_squared,
        sse,
        n: x.len(),
    })
}

/// Pearson correlation of the samples selected by `mask`.
pub fn masked_correlation(a: &[f64], b: &[f64], mask: &[bool]) -> Result<f64> {
    same_len(a.len(), b.len())?;
    same_len(a.len(), mask.len())?;
    let pairs: Vec<(f64, f64)> = a
        .iter()
        .zip(b)
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|((&x, &y), _)| (x, y))
        .collect();
    if pairs.len() < 2 {
        return Err(MetricError::EmptyRegion("correlation mask".into()));
    }
    let n = pairs.len() as f64;
    let (ma, mb) = (
        pairs.iter().map(|p| p.0).sum::<f64>() / n,
        pairs.iter().map(|p| p.1).sum::<f64>() / n,
    );
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in &pairs {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if !(saa > 0.0 && sbb > 0.0) {
        return Err(MetricError::Degenerate(
            "constant input in correlation".into(),
        ));
    }
    Ok(sab / (saa * sbb).sqrt())
}

/// Values of `v` where `mask` is set.
pub fn select(v: &[f64], mask: &[bool]) -> Vec<f64> {
    v.iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&x, _)| x)
        .collect()
}
