//! Complex and real sample containers.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::KspaceError;
use crate::fft::centered_dft;
use crate::Result;

/// Which space a container's samples live in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Image,
    Kspace,
    Wavelet,
}

impl Domain {
    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Image => "image",
            Domain::Kspace => "kspace",
            Domain::Wavelet => "wavelet",
        }
    }
}

fn check_samples(expected: usize, data: &[Complex64]) -> Result<()> {
    if data.len() != expected {
        return Err(KspaceError::Shape(format!(
            "data length {} does not match extents product {}",
            data.len(),
            expected
        )));
    }
    if let Some(i) = data
        .iter()
        .position(|c| !c.re.is_finite() || !c.im.is_finite())
    {
        return Err(KspaceError::NonFinite(i));
    }
    Ok(())
}

fn check_extents(shape: &[usize]) -> Result<()> {
    if shape.contains(&0) {
        return Err(KspaceError::Shape(format!(
            "extents must be positive, got {shape:?}"
        )));
    }
    Ok(())
}

/// A 3D complex volume stored x-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVolume {
    shape: [usize; 3],
    data: Vec<Complex64>,
    domain: Domain,
}

impl ComplexVolume {
    /// Wraps `data` after checking its length and that every sample is finite.
    pub fn new(shape: [usize; 3], data: Vec<Complex64>, domain: Domain) -> Result<Self> {
        check_extents(&shape)?;
        check_samples(shape.iter().product(), &data)?;
        Ok(Self {
            shape,
            data,
            domain,
        })
    }

    pub fn zeros(shape: [usize; 3], domain: Domain) -> Result<Self> {
        check_extents(&shape)?;
        let n = shape.iter().product();
        Ok(Self {
            shape,
            data: vec![Complex64::new(0.0, 0.0); n],
            domain,
        })
    }

    /// Builds `m * exp(i phi)` voxel by voxel.
    pub fn from_polar(m: &RealVolume, phi: &RealVolume) -> Result<Self> {
        if m.shape() != phi.shape() {
            return Err(KspaceError::Shape(format!(
                "magnitude {:?} vs phase {:?}",
                m.shape(),
                phi.shape()
            )));
        }
        let data = m
            .data()
            .iter()
            .zip(phi.data())
            .map(|(&a, &p)| Complex64::from_polar(a, p))
            .collect();
        Self::new(m.shape(), data, Domain::Image)
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn set_domain(&mut self, domain: Domain) {
        self.domain = domain;
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    /// Linear index of voxel `(x, y, z)`.
    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.shape[0] * (y + self.shape[1] * z)
    }

    /// Euclidean norm over all samples.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Magnitude of every sample.
    pub fn magnitude(&self) -> RealVolume {
        RealVolume {
            shape: self.shape,
            data: self.data.iter().map(|c| c.norm()).collect(),
        }
    }

    /// Argument of every sample in (-pi, pi].
    pub fn phase(&self) -> RealVolume {
        RealVolume {
            shape: self.shape,
            data: self.data.iter().map(|c| c.arg()).collect(),
        }
    }

    /// Real part of every sample.
    pub fn real(&self) -> RealVolume {
        RealVolume {
            shape: self.shape,
            data: self.data.iter().map(|c| c.re).collect(),
        }
    }

    /// Centered unitary DFT along `axes`. When all three axes are transformed
    /// the result is tagged as k-space.
    pub fn dft_centered(&self, axes: &[usize]) -> Result<Self> {
        self.transform(axes, false)
    }

    /// Inverse of [`ComplexVolume::dft_centered`]. When all three axes are
    /// transformed the result is tagged as image.
    pub fn idft_centered(&self, axes: &[usize]) -> Result<Self> {
        self.transform(axes, true)
    }

    fn transform(&self, axes: &[usize], inverse: bool) -> Result<Self> {
        let mut out = self.clone();
        centered_dft(&mut out.data, &self.shape, axes, inverse)?;
        if covers_all(axes, 3) {
            out.domain = if inverse {
                Domain::Image
            } else {
                Domain::Kspace
            };
        }
        Ok(out)
    }
}

fn covers_all(axes: &[usize], rank: usize) -> bool {
    (0..rank).all(|a| axes.contains(&a))
}

/// A 2D complex slice in the y-z plane stored y-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSlice {
    shape: [usize; 2],
    data: Vec<Complex64>,
    domain: Domain,
}

impl ComplexSlice {
    pub fn new(shape: [usize; 2], data: Vec<Complex64>, domain: Domain) -> Result<Self> {
        check_extents(&shape)?;
        check_samples(shape[0] * shape[1], &data)?;
        Ok(Self {
            shape,
            data,
            domain,
        })
    }

    pub fn zeros(shape: [usize; 2], domain: Domain) -> Result<Self> {
        check_extents(&shape)?;
        Ok(Self {
            shape,
            data: vec![Complex64::new(0.0, 0.0); shape[0] * shape[1]],
            domain,
        })
    }

    pub fn shape(&self) -> [usize; 2] {
        self.shape
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn set_domain(&mut self, domain: Domain) {
        self.domain = domain;
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Centered unitary DFT along `axes` (0 = y, 1 = z).
    pub fn dft_centered(&self, axes: &[usize]) -> Result<Self> {
        self.transform(axes, false)
    }

    pub fn idft_centered(&self, axes: &[usize]) -> Result<Self> {
        self.transform(axes, true)
    }

    fn transform(&self, axes: &[usize], inverse: bool) -> Result<Self> {
        let mut out = self.clone();
        centered_dft(&mut out.data, &self.shape, axes, inverse)?;
        if covers_all(axes, 2) {
            out.domain = if inverse {
                Domain::Image
            } else {
                Domain::Kspace
            };
        }
        Ok(out)
    }
}

/// A real-valued 3D map (magnitude, phase, field, susceptibility) stored x-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct RealVolume {
    shape: [usize; 3],
    data: Vec<f64>,
}

impl RealVolume {
    pub fn new(shape: [usize; 3], data: Vec<f64>) -> Result<Self> {
        check_extents(&shape)?;
        if data.len() != shape.iter().product::<usize>() {
            return Err(KspaceError::Shape(format!(
                "data length {} does not match {:?}",
                data.len(),
                shape
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: [usize; 3]) -> Result<Self> {
        Self::new(shape, vec![0.0; shape.iter().product()])
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.shape[0] * (y + self.shape[1] * z)
    }

    /// Complex copy with zero imaginary part.
    pub fn to_complex(&self, domain: Domain) -> ComplexVolume {
        ComplexVolume {
            shape: self.shape,
            data: self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            domain,
        }
    }
}
