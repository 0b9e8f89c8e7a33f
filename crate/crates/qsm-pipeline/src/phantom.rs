//! Synthetic susceptibility phantoms.
//!
//! The object support is the ellipsoid with semi-axes `0.375 * n` on
//! centered integer coordinates, which leaves at least 25% zero padding on
//! every axis. Primitives are painted in order (later ones overwrite
//! earlier ones) with susceptibilities drawn uniformly from [-0.2, 0.5] ppm.

use kspace_core::RealVolume;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dipole::{dipole_kernel, filter};
use crate::error::QsmError;
use crate::{Result, GAMMA_B0_3T};

/// Fraction of each extent covered by the mask semi-axis.
pub const SUPPORT_SEMI_AXIS: f64 = 0.375;
pub const CHI_RANGE: (f64, f64) = (-0.2, 0.5);
pub const ECHO_COUNT: usize = 8;
pub const FIRST_TE: f64 = 3e-3;
pub const ECHO_SPACING: f64 = 3.3e-3;
pub const DEFAULT_R2STAR: f64 = 20.0;

const SPHERE_COUNT: usize = 24;
const SPHERE_RADIUS: (f64, f64) = (1.5, 2.5);
const SPHERE_MARGIN: f64 = 8.0;
const CYLINDER_COUNT: usize = 12;
const CYLINDER_HALF_LENGTH: (f64, f64) = (3.0, 6.0);
const CYLINDER_MARGIN: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhantomKind {
    Spheres,
    Cylinders,
    Shepp3d,
}

impl std::str::FromStr for PhantomKind {
    type Err = QsmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spheres" => Ok(Self::Spheres),
            "cylinders" => Ok(Self::Cylinders),
            "shepp3d" => Ok(Self::Shepp3d),
            _ => Err(QsmError::Param(format!("unknown phantom kind {s:?}"))),
        }
    }
}

impl PhantomKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Spheres => "spheres",
            Self::Cylinders => "cylinders",
            Self::Shepp3d => "shepp3d",
        }
    }
}

/// One painted primitive: an axis-aligned ellipsoid or cylinder.
#[derive(Debug, Clone, PartialEq)]
pub struct Primitive {
    /// Centered coordinates in voxels.
    pub center: [f64; 3],
    /// Semi-axes (ellipsoids) or radius/radius/half-length rotated onto `axis`.
    pub size: [f64; 3],
    /// `None` for ellipsoids, the long axis for cylinders.
    pub axis: Option<usize>,
    pub chi: f64,
    /// Voxels carrying this primitive's value in the final map.
    pub voxels: usize,
}

impl Primitive {
    fn contains(&self, p: [f64; 3]) -> bool {
        let d = [
            p[0] - self.center[0],
            p[1] - self.center[1],
            p[2] - self.center[2],
        ];
        match self.axis {
            None => (0..3).map(|a| (d[a] / self.size[a]).powi(2)).sum::<f64>() <= 1.0,
            Some(ax) => {
                let r2: f64 = (0..3)
                    .filter(|&a| a != ax)
                    .map(|a| (d[a] / self.size[a]).powi(2))
                    .sum();
                r2 <= 1.0 && d[ax].abs() <= self.size[ax]
            }
        }
    }
}

/// Susceptibility map, support and acquisition constants.
#[derive(Debug, Clone, PartialEq)]
pub struct SusceptibilityPhantom {
    /// ppm, zero outside `mask`.
    pub chi: RealVolume,
    pub mask: Vec<bool>,
    pub b0_dir: [f64; 3],
    /// Echo times in seconds.
    pub te_list: Vec<f64>,
    pub delta_te: f64,
    /// Field (ppm) to phase rate (rad/s).
    pub b0_gamma_scale: f64,
    pub r2star: f64,
    pub kind: PhantomKind,
    pub seed: u64,
    pub primitives: Vec<Primitive>,
}

impl SusceptibilityPhantom {
    pub fn shape(&self) -> [usize; 3] {
        self.chi.shape()
    }

    pub fn validate(&self) -> Result<()> {
        let n = (self.b0_dir.iter().map(|v| v * v).sum::<f64>()).sqrt();
        if (n - 1.0).abs() > 1e-12 {
            return Err(QsmError::Param(format!("b0_dir norm is {n}")));
        }
        if self.te_list.is_empty() || self.te_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(QsmError::Param(
                "te_list must be non-empty and strictly increasing".into(),
            ));
        }
        if self.mask.len() != self.chi.len() {
            return Err(QsmError::Shape("mask and chi differ in length".into()));
        }
        Ok(())
    }

    /// Primitive owning each voxel, `None` for background and outside the support.
    pub fn labels(&self) -> Vec<Option<usize>> {
        label_voxels(&self.primitives, &self.mask, self.shape())
    }

    /// Same phantom with a different field direction (normalized).
    pub fn with_b0_dir(&self, b: [f64; 3]) -> Result<Self> {
        let mut out = self.clone();
        out.b0_dir = crate::dipole::unit(b)?;
        Ok(out)
    }
}

fn centered(i: usize, n: usize) -> f64 {
    i as f64 - (n / 2) as f64
}

/// Ellipsoidal support with semi-axes `SUPPORT_SEMI_AXIS * n`.
pub fn support_mask(shape: [usize; 3]) -> Vec<bool> {
    let ax = semi_axes(shape);
    let mut m = Vec::with_capacity(shape.iter().product());
    for z in 0..shape[2] {
        for y in 0..shape[1] {
            for x in 0..shape[0] {
                let p = [
                    centered(x, shape[0]),
                    centered(y, shape[1]),
                    centered(z, shape[2]),
                ];
                m.push((0..3).map(|a| (p[a] / ax[a]).powi(2)).sum::<f64>() <= 1.0);
            }
        }
    }
    m
}

fn semi_axes(shape: [usize; 3]) -> [f64; 3] {
    shape.map(|n| SUPPORT_SEMI_AXIS * n as f64)
}

/// Center drawn uniformly inside the support shrunk by `extent + margin` per axis.
fn draw_center(rng: &mut ChaCha8Rng, ax: [f64; 3], extent: [f64; 3], margin: f64) -> [f64; 3] {
    let sh: [f64; 3] = std::array::from_fn(|a| (ax[a] - extent[a] - margin).max(0.5));
    loop {
        let c: [f64; 3] = std::array::from_fn(|a| rng.random_range(-1.0..1.0) * sh[a]);
        if (0..3).map(|a| (c[a] / sh[a]).powi(2)).sum::<f64>() <= 1.0 {
            return c;
        }
    }
}

fn draw_chi(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(CHI_RANGE.0..CHI_RANGE.1)
}

fn primitives(kind: PhantomKind, ax: [f64; 3], rng: &mut ChaCha8Rng) -> Vec<Primitive> {
    match kind {
        PhantomKind::Spheres => (0..SPHERE_COUNT)
            .map(|_| {
                let r = rng.random_range(SPHERE_RADIUS.0..SPHERE_RADIUS.1);
                let center = draw_center(rng, ax, [r; 3], SPHERE_MARGIN);
                Primitive {
                    center,
                    size: [r; 3],
                    axis: None,
                    chi: draw_chi(rng),
                    voxels: 0,
                }
            })
            .collect(),
        PhantomKind::Cylinders => (0..CYLINDER_COUNT)
            .map(|_| {
                let axis = rng.random_range(0..3usize);
                let r = rng.random_range(SPHERE_RADIUS.0..SPHERE_RADIUS.1);
                let h = rng.random_range(CYLINDER_HALF_LENGTH.0..CYLINDER_HALF_LENGTH.1);
                let mut size = [r; 3];
                size[axis] = h;
                let center = draw_center(rng, ax, size, CYLINDER_MARGIN);
                Primitive {
                    center,
                    size,
                    axis: Some(axis),
                    chi: draw_chi(rng),
                    voxels: 0,
                }
            })
            .collect(),
        PhantomKind::Shepp3d => {
            // (center, semi-axes) as fractions of the support semi-axes
            const ELLIPSOIDS: [([f64; 3], [f64; 3]); 10] = [
                ([0.0, 0.0, 0.0], [0.69, 0.92, 0.9]),
                ([0.0, 0.0, 0.0], [0.6624, 0.874, 0.88]),
                ([-0.22, 0.0, -0.25], [0.41, 0.16, 0.21]),
                ([0.22, 0.0, -0.25], [0.31, 0.11, 0.22]),
                ([0.0, 0.35, -0.25], [0.21, 0.25, 0.5]),
                ([0.0, 0.1, -0.25], [0.046, 0.046, 0.046]),
                ([-0.08, -0.65, -0.25], [0.046, 0.023, 0.02]),
                ([0.06, -0.65, -0.25], [0.046, 0.023, 0.02]),
                ([0.06, -0.105, 0.625], [0.056, 0.04, 0.1]),
                ([0.0, 0.1, 0.625], [0.056, 0.056, 0.1]),
            ];
            ELLIPSOIDS
                .iter()
                .map(|(c, s)| {
                    let jitter: [f64; 3] = std::array::from_fn(|_| rng.random_range(-0.02..0.02));
                    Primitive {
                        center: std::array::from_fn(|a| (c[a] + jitter[a]) * ax[a]),
                        size: std::array::from_fn(|a| (s[a] * ax[a]).max(1.0)),
                        axis: None,
                        chi: draw_chi(rng),
                        voxels: 0,
                    }
                })
                .collect()
        }
    }
}

/// Index of the last primitive containing each support voxel.
fn label_voxels(prims: &[Primitive], mask: &[bool], shape: [usize; 3]) -> Vec<Option<usize>> {
    let mut label = vec![None; mask.len()];
    let mut i = 0;
    for z in 0..shape[2] {
        for y in 0..shape[1] {
            for x in 0..shape[0] {
                let p = [
                    centered(x, shape[0]),
                    centered(y, shape[1]),
                    centered(z, shape[2]),
                ];
                if mask[i] {
                    label[i] = prims.iter().rposition(|q| q.contains(p));
                }
                i += 1;
            }
        }
    }
    label
}

/// Deterministic phantom of the given kind with default 3 T, 8-echo constants.
pub fn make_phantom(
    kind: PhantomKind,
    shape: [usize; 3],
    seed: u64,
) -> Result<SusceptibilityPhantom> {
    if shape.contains(&0) {
        return Err(QsmError::Shape(format!(
            "extents must be positive, got {shape:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ax = semi_axes(shape);
    let mut prims = primitives(kind, ax, &mut rng);
    let mask = support_mask(shape);
    let n: usize = shape.iter().product();
    let label = label_voxels(&prims, &mask, shape);
    let mut chi = vec![0.0; n];
    for (v, l) in chi.iter_mut().zip(&label) {
        if let Some(k) = *l {
            *v = prims[k].chi;
            prims[k].voxels += 1;
        }
    }
    let te_list = (0..ECHO_COUNT)
        .map(|e| FIRST_TE + ECHO_SPACING * e as f64)
        .collect();
    Ok(SusceptibilityPhantom {
        chi: RealVolume::new(shape, chi)?,
        mask,
        b0_dir: [0.0, 0.0, 1.0],
        te_list,
        delta_te: ECHO_SPACING,
        b0_gamma_scale: GAMMA_B0_3T,
        r2star: DEFAULT_R2STAR,
        kind,
        seed,
        primitives: prims,
    })
}

/// Field (ppm) of a unit-susceptibility sphere outside the support, masked to the support.
///
/// The sphere has radius 4 and sits at centered coordinates `(20, 20, 8)`
/// scaled to `shape` relative to 64 x 64 x 32. It does not overlap the support.
/// Returns the masked background field and the support.
pub fn background_source_phantom(
    shape: [usize; 3],
    b0_dir: [f64; 3],
) -> Result<(RealVolume, Vec<bool>)> {
    let mask = support_mask(shape);
    let scale = [
        shape[0] as f64 / 64.0,
        shape[1] as f64 / 64.0,
        shape[2] as f64 / 32.0,
    ];
    let c = [20.0 * scale[0], 20.0 * scale[1], 8.0 * scale[2]];
    let r = 4.0 * scale[0].min(scale[1]).min(scale[2]);
    let src = Primitive {
        center: c,
        size: [r; 3],
        axis: None,
        chi: 1.0,
        voxels: 0,
    };
    let mut chi = Vec::with_capacity(mask.len());
    for z in 0..shape[2] {
        for y in 0..shape[1] {
            for x in 0..shape[0] {
                let p = [
                    centered(x, shape[0]),
                    centered(y, shape[1]),
                    centered(z, shape[2]),
                ];
                chi.push(if src.contains(p) { 1.0 } else { 0.0 });
            }
        }
    }
    if chi.iter().zip(&mask).any(|(&v, &m)| v != 0.0 && m) {
        return Err(QsmError::Param(
            "background source overlaps the support".into(),
        ));
    }
    let d = dipole_kernel(shape, b0_dir)?;
    let mut f = filter(&chi, &d, shape);
    f.iter_mut().zip(&mask).for_each(|(v, &m)| {
        if !m {
            *v = 0.0
        }
    });
    Ok((RealVolume::new(shape, f)?, mask))
}
