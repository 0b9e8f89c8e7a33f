//! Grayscale PNG previews of the three central orthogonal slices.

use std::path::Path;

use kspace_core::RealVolume;

use crate::error::CliError;

/// Display window of susceptibility maps in ppm.
pub const CHI_WINDOW: (f64, f64) = (-0.2, 0.5);
pub const PHASE_WINDOW: (f64, f64) = (-std::f64::consts::PI, std::f64::consts::PI);

/// Builds an 8-bit image with the xy, xz and yz central slices side by side.
///
/// Returns `(width, height, pixels)`; values are clamped to `window`.
pub fn orthogonal_strip(v: &RealVolume, window: (f64, f64)) -> (u32, u32, Vec<u8>) {
    let [nx, ny, nz] = v.shape();
    let (cx, cy, cz) = (nx / 2, ny / 2, nz / 2);
    let width = nx + nx + ny;
    let height = ny.max(nz);
    let mut px = vec![0u8; width * height];
    let span = window.1 - window.0;
    let gray = |x: f64| -> u8 {
        let t = if span > 0.0 {
            ((x - window.0) / span).clamp(0.0, 1.0)
        } else {
            0.0
        };
        (t * 255.0).round() as u8
    };
    let d = v.data();
    let at = |x: usize, y: usize, z: usize| d[v.index(x, y, z)];
    // rows run top to bottom, so the second in-plane axis is flipped
    for y in 0..ny {
        for x in 0..nx {
            px[(ny - 1 - y) * width + x] = gray(at(x, y, cz));
        }
    }
    for z in 0..nz {
        for x in 0..nx {
            px[(nz - 1 - z) * width + nx + x] = gray(at(x, cy, z));
        }
        for y in 0..ny {
            px[(nz - 1 - z) * width + 2 * nx + y] = gray(at(cx, y, z));
        }
    }
    (width as u32, height as u32, px)
}

/// Encodes `orthogonal_strip` as PNG bytes.
pub fn encode_png(v: &RealVolume, window: (f64, f64)) -> Result<Vec<u8>, CliError> {
    let (w, h, px) = orthogonal_strip(v, window);
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, w, h);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header()?;
        writer.write_image_data(&px)?;
    }
    Ok(out)
}

pub fn write_png(path: &Path, v: &RealVolume, window: (f64, f64)) -> Result<(), CliError> {
    let bytes = encode_png(v, window)?;
    crate::report::write_bytes(path, &bytes)
}
