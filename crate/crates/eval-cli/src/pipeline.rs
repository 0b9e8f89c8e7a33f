//! End-to-end run: phantom, undersampled echoes, reconstruction, QSM chain, metrics.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use cs_solvers::{recon_volume, CostTerms, Method, SolverConfig};
use dcrnet::{load_weights, reconstruct_volume, DcrNetModel};
use kspace_core::{zero_fill_recon, ComplexVolume, RealVolume, SamplingMask};
use qsm_pipeline::{
    make_phantom, run_chain, simulate_gre, ChainConfig, ChainOutput, PhantomKind,
    SusceptibilityPhantom,
};
use serde_json::{json, Value};

use crate::error::{Category, CliError};
use crate::experiment::{published_mask, undersample, REFERENCE_ECHO};
use crate::metrics::{self, RoiMask};
use crate::preview::{write_png, CHI_WINDOW, PHASE_WINDOW};
use crate::report::{metric_config, Report, Scope, Stage};

/// Default number of phase shifts for phase cycling.
pub const DEFAULT_SHIFTS: usize = 8;
/// Voxels added around the brightest primitive to form the hemorrhage-analogue region.
pub const HEMORRHAGE_SHELL: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReconMethod {
    ZeroFill,
    CsMag,
    Cspr,
    Cspc,
    Dcrnet,
}

impl ReconMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ZeroFill => "zero-fill",
            Self::CsMag => "cs-mag",
            Self::Cspr => "cspr",
            Self::Cspc => "cspc",
            Self::Dcrnet => "dcrnet",
        }
    }
}

/// A reconstructor for one echo volume at a time.
pub enum Reconstructor {
    Solver { method: Method, cfg: SolverConfig },
    Network(Box<DcrNetModel>),
}

/// Result of reconstructing one volume.
#[derive(Debug, Clone)]
pub struct Recon {
    pub image: ComplexVolume,
    pub history: Vec<CostTerms>,
    pub converged: bool,
}

impl Reconstructor {
    /// `weights` is required for [`ReconMethod::Dcrnet`] and ignored otherwise.
    pub fn new(
        method: ReconMethod,
        cfg: SolverConfig,
        shifts: usize,
        seed: u64,
        weights: Option<&Path>,
    ) -> Result<Self, CliError> {
        let solver = |method| {
            Ok(Self::Solver {
                method,
                cfg: cfg.clone(),
            })
        };
        match method {
            ReconMethod::ZeroFill => solver(Method::ZeroFill),
            ReconMethod::CsMag => solver(Method::MagnitudeCs),
            ReconMethod::Cspr => solver(Method::Cspr),
            ReconMethod::Cspc => solver(Method::Cspc { shifts, seed }),
            ReconMethod::Dcrnet => {
                let dir =
                    weights.ok_or_else(|| CliError::validation("method dcrnet needs --weights"))?;
                Ok(Self::Network(Box::new(load_weights(dir)?)))
            }
        }
    }

    pub fn run(&self, k: &ComplexVolume, mask: &SamplingMask) -> Result<Recon, CliError> {
        match self {
            Self::Solver { method, cfg } => {
                let r = recon_volume(k, mask, *method, cfg)?;
                Ok(Recon {
                    image: r.image,
                    history: r.history,
                    converged: r.converged,
                })
            }
            Self::Network(model) => {
                let zf = zero_fill_recon(k, mask)?;
                Ok(Recon {
                    image: reconstruct_volume(model, &zf, mask)?,
                    history: Vec::new(),
                    converged: true,
                })
            }
        }
    }

    fn describe(&self) -> Value {
        match self {
            Self::Solver { method, cfg } => json!({
                "method": format!("{method:?}"),
                "lambda1": cfg.lambda1,
                "lambda2": cfg.lambda2,
                "delta": cfg.delta,
                "max_outer": cfg.max_outer,
                "inner_iters": cfg.inner_iters,
                "tol": cfg.tol,
                "step_scale": cfg.step_scale,
                "max_backtracks": cfg.max_backtracks,
                "wavelet": { "family": "daubechies4", "levels": cfg.wavelet.levels },
            }),
            Self::Network(m) => json!({
                "arch": { "channels": m.arch.channels, "blocks": m.arch.blocks },
                "convention": m.convention().as_str(),
                "lambda": m.lambda(),
            }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub kind: PhantomKind,
    pub shape: [usize; 3],
    pub seed: u64,
    pub af: f64,
    pub method: ReconMethod,
    pub shifts: usize,
    pub solver: SolverConfig,
    pub chain: ChainConfig,
    pub weights: Option<PathBuf>,
}

impl PipelineOptions {
    pub fn new(kind: PhantomKind, seed: u64, af: f64, method: ReconMethod) -> Self {
        Self {
            kind,
            shape: crate::experiment::SHIPPED_SHAPE,
            seed,
            af,
            method,
            shifts: DEFAULT_SHIFTS,
            solver: SolverConfig::default(),
            chain: ChainConfig::default(),
            weights: None,
        }
    }
}

/// Everything a pipeline run produces.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub report: Report,
    pub phantom: SusceptibilityPhantom,
    pub echoes: Vec<ComplexVolume>,
    pub chain: ChainOutput,
    /// Chain output on the fully sampled echoes.
    pub reference_chain: ChainOutput,
    /// Cost history of the reference echo.
    pub history: Vec<CostTerms>,
    pub converged: bool,
}

/// Region around the primitive with the largest susceptibility, grown by
/// [`HEMORRHAGE_SHELL`] voxels per axis and restricted to `within`.
pub fn hemorrhage_region(ph: &SusceptibilityPhantom, within: &[bool]) -> Option<Vec<bool>> {
    let labels = ph.labels();
    let k = (0..ph.primitives.len())
        .max_by(|&a, &b| ph.primitives[a].chi.total_cmp(&ph.primitives[b].chi))?;
    let [nx, ny, nz] = ph.shape();
    let (mut lo, mut hi) = ([usize::MAX; 3], [0usize; 3]);
    for (i, l) in labels.iter().enumerate() {
        if *l == Some(k) {
            let c = [i % nx, (i / nx) % ny, i / (nx * ny)];
            for a in 0..3 {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a]);
            }
        }
    }
    if lo[0] == usize::MAX {
        return None;
    }
    let n = [nx, ny, nz];
    let lo: Vec<usize> = lo
        .iter()
        .map(|&v| v.saturating_sub(HEMORRHAGE_SHELL))
        .collect();
    let hi: Vec<usize> = (0..3)
        .map(|a| (hi[a] + HEMORRHAGE_SHELL).min(n[a] - 1))
        .collect();
    let region: Vec<bool> = (0..labels.len())
        .map(|i| {
            let c = [i % nx, (i / nx) % ny, i / (nx * ny)];
            within[i] && (0..3).all(|a| c[a] >= lo[a] && c[a] <= hi[a])
        })
        .collect();
    region.iter().any(|&r| r).then_some(region)
}

/// One region per primitive, restricted to `within`; primitives with no voxel left are skipped.
pub fn primitive_rois(ph: &SusceptibilityPhantom, within: &[bool]) -> Result<RoiMask, CliError> {
    let labels = ph.labels();
    let mut rois = RoiMask::new(ph.shape());
    for k in 0..ph.primitives.len() {
        let r: Vec<bool> = labels
            .iter()
            .zip(within)
            .map(|(l, &w)| w && *l == Some(k))
            .collect();
        if r.iter().any(|&v| v) {
            rois.add(format!("p{k:02}"), r)?;
        }
    }
    Ok(rois)
}

fn and(a: &[bool], b: &[bool]) -> Vec<bool> {
    a.iter().zip(b).map(|(&x, &y)| x && y).collect()
}

/// Magnitude-stage metrics of `img` against `reference`.
pub fn magnitude_metrics(
    r: &mut Report,
    method: &str,
    img: &ComplexVolume,
    reference: &ComplexVolume,
) -> Result<(), CliError> {
    let (m, mr) = (img.magnitude(), reference.magnitude());
    r.push(
        Stage::Magnitude,
        method,
        "psnr_complex",
        Scope::Volume,
        metrics::psnr_complex(img.data(), reference.data(), None)?,
    );
    r.push(
        Stage::Magnitude,
        method,
        "rmse_complex",
        Scope::Volume,
        metrics::rmse_complex(img.data(), reference.data())?,
    );
    r.push(
        Stage::Magnitude,
        method,
        "psnr",
        Scope::Volume,
        metrics::psnr_real(m.data(), mr.data(), None)?,
    );
    r.push(
        Stage::Magnitude,
        method,
        "ssim",
        Scope::SliceMean,
        metrics::ssim_volume(&m, &mr, None)?,
    );
    r.push(
        Stage::Magnitude,
        method,
        "ssim",
        Scope::CentralSlice,
        metrics::ssim_central(&m, &mr, None)?,
    );
    Ok(())
}

/// Phase-stage metrics inside `mask`.
pub fn phase_metrics(
    r: &mut Report,
    method: &str,
    img: &ComplexVolume,
    reference: &ComplexVolume,
    mask: &[bool],
) -> Result<(), CliError> {
    let a = metrics::select(img.phase().data(), mask);
    let b = metrics::select(reference.phase().data(), mask);
    r.push(
        Stage::Phase,
        method,
        "rmse",
        Scope::Volume,
        metrics::rmse_phase(&a, &b)?,
    );
    r.push(
        Stage::Phase,
        method,
        "psnr",
        Scope::Volume,
        metrics::psnr_phase(&a, &b, None)?,
    );
    Ok(())
}

/// Susceptibility metrics of `chi` against `truth` inside `mask`.
pub fn qsm_metrics(
    r: &mut Report,
    method: &str,
    chi: &RealVolume,
    truth: &RealVolume,
    mask: &[bool],
    ph: &SusceptibilityPhantom,
) -> Result<(), CliError> {
    let (a, b) = (
        metrics::select(chi.data(), mask),
        metrics::select(truth.data(), mask),
    );
    let (lo, hi) = b
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        });
    let rmse = metrics::rmse_real(&a, &b)?;
    r.push(Stage::Qsm, method, "rmse", Scope::Volume, rmse);
    r.push(Stage::Qsm, method, "nrmse", Scope::Volume, rmse / (hi - lo));
    r.push(
        Stage::Qsm,
        method,
        "psnr",
        Scope::Volume,
        metrics::psnr_real(&a, &b, None)?,
    );
    r.push(
        Stage::Qsm,
        method,
        "correlation",
        Scope::Volume,
        metrics::masked_correlation(chi.data(), truth.data(), mask)?,
    );
    let masked = |v: &RealVolume| -> Result<RealVolume, CliError> {
        Ok(RealVolume::new(
            v.shape(),
            v.data()
                .iter()
                .zip(mask)
                .map(|(&x, &m)| if m { x } else { 0.0 })
                .collect(),
        )?)
    };
    let (mc, mt) = (masked(chi)?, masked(truth)?);
    r.push(
        Stage::Qsm,
        method,
        "ssim",
        Scope::SliceMean,
        metrics::ssim_volume(&mc, &mt, None)?,
    );
    r.push(
        Stage::Qsm,
        method,
        "ssim",
        Scope::CentralSlice,
        metrics::ssim_central(&mc, &mt, None)?,
    );

    let mut regress = |name: &str, region: &[bool]| -> Result<(), CliError> {
        let fit = metrics::linreg(
            &metrics::select(truth.data(), region),
            &metrics::select(chi.data(), region),
        )?;
        r.push_region(Stage::Qsm, method, "slope", name, fit.slope);
        r.push_region(Stage::Qsm, method, "intercept", name, fit.intercept);
        r.push_region(Stage::Qsm, method, "r_squared", name, fit.r_squared);
        r.push_region(Stage::Qsm, method, "sse", name, fit.sse);
        Ok(())
    };
    regress("mask", mask)?;
    if let Some(h) = hemorrhage_region(ph, mask) {
        regress("hemorrhage", &h)?;
    }

    let rois = primitive_rois(ph, mask)?;
    for (s, t) in metrics::roi_stats(chi, &rois)?
        .iter()
        .zip(metrics::roi_stats(truth, &rois)?)
    {
        r.push_region(Stage::Qsm, method, "roi_mean", &s.name, s.mean);
        r.push_region(Stage::Qsm, method, "roi_std", &s.name, s.std);
        r.push_region(Stage::Qsm, method, "roi_truth", &s.name, t.mean);
    }
    Ok(())
}

fn mask_json(mask: &SamplingMask) -> Value {
    let s = mask.spec();
    json!({
        "pa": s.pa,
        "pb": s.pb,
        "calib": s.calib,
        "count": mask.count(),
        "fraction": mask.fraction(),
    })
}

fn chain_json(c: &ChainConfig) -> Value {
    json!({
        "resharp_radius": c.radius,
        "resharp_tik": c.tik,
        "tkd_threshold": c.threshold,
        "b0_dir": c.b0_dir,
        "b0_gamma_scale": c.b0_gamma_scale,
    })
}

/// Runs the whole chain and fills the report.
pub fn run_pipeline(opts: &PipelineOptions) -> Result<PipelineOutput, CliError> {
    let phantom = make_phantom(opts.kind, opts.shape, opts.seed)?;
    let series = simulate_gre(&phantom)?;
    let mask = published_mask(opts.af, opts.shape, opts.seed)?;
    let recon = Reconstructor::new(
        opts.method,
        opts.solver.clone(),
        opts.shifts,
        opts.seed,
        opts.weights.as_deref(),
    )?;
    let method = opts.method.as_str();

    let mut echoes = Vec::with_capacity(series.echoes.len());
    let mut history = Vec::new();
    let mut converged = true;
    let mut reference_zf = None;
    for (e, truth) in series.echoes.iter().enumerate() {
        let k = undersample(truth, &mask)?;
        let out = recon.run(&k, &mask)?;
        converged &= out.converged;
        if e == REFERENCE_ECHO {
            history = out.history;
            reference_zf = Some(zero_fill_recon(&k, &mask)?);
        }
        echoes.push(out.image);
    }
    let reference_chain = run_chain(&series.echoes, &series.te_list, &phantom.mask, &opts.chain)?;
    let chain = run_chain(&echoes, &series.te_list, &phantom.mask, &opts.chain)?;

    let inputs = json!({
        "phantom": opts.kind.as_str(),
        "shape": opts.shape,
        "seed": opts.seed,
        "af": opts.af,
        "method": method,
        "echoes": series.te_list.len(),
        "te": series.te_list,
        "reference_echo": REFERENCE_ECHO,
        "mask": mask_json(&mask),
    });
    let config = json!({
        "recon": recon.describe(),
        "cspc_shifts": opts.shifts,
        "chain": chain_json(&opts.chain),
        "metrics": metric_config(),
    });
    let mut report = Report::new(inputs, config);

    let reference = &series.echoes[REFERENCE_ECHO];
    if let Some(zf) = &reference_zf {
        magnitude_metrics(&mut report, "zero-fill", zf, reference)?;
        phase_metrics(&mut report, "zero-fill", zf, reference, &phantom.mask)?;
    }
    magnitude_metrics(&mut report, method, &echoes[REFERENCE_ECHO], reference)?;
    phase_metrics(
        &mut report,
        method,
        &echoes[REFERENCE_ECHO],
        reference,
        &phantom.mask,
    )?;
    report.push(
        Stage::Magnitude,
        method,
        "solver_converged",
        Scope::Volume,
        if converged { 1.0 } else { 0.0 },
    );

    let common = and(&chain.eroded, &reference_chain.eroded);
    let a = metrics::select(chain.local.field.data(), &common);
    let b = metrics::select(reference_chain.local.field.data(), &common);
    report.push(
        Stage::LocalField,
        method,
        "rmse",
        Scope::Volume,
        metrics::rmse_real(&a, &b)?,
    );
    report.push(
        Stage::LocalField,
        method,
        "psnr",
        Scope::Volume,
        metrics::psnr_real(&a, &b, None)?,
    );

    qsm_metrics(
        &mut report,
        method,
        &chain.chi,
        &phantom.chi,
        &chain.eroded,
        &phantom,
    )?;

    Ok(PipelineOutput {
        report,
        phantom,
        echoes,
        chain,
        reference_chain,
        history,
        converged,
    })
}

/// Writes the report, maps and previews of a run into `dir`.
pub fn write_outputs(out: &PipelineOutput, dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::new(Category::Io, format!("{}: {e}", dir.display())))?;
    let shape = out.phantom.shape();
    crate::files::write_real(&dir.join("chi.cvol"), &out.chain.chi, "ppm")?;
    crate::files::write_real(
        &dir.join("local_field.cvol"),
        &out.chain.local.field,
        "rad/s",
    )?;
    crate::files::write_bool(&dir.join("eroded_mask.cvol"), shape, &out.chain.eroded)?;
    crate::files::write_complex(
        &dir.join("reference_echo.cvol"),
        &out.echoes[REFERENCE_ECHO],
        None,
    )?;
    let img = &out.echoes[REFERENCE_ECHO];
    let peak = img.data().iter().map(|c| c.norm()).fold(0.0, f64::max);
    write_png(&dir.join("magnitude.png"), &img.magnitude(), (0.0, peak))?;
    write_png(&dir.join("phase.png"), &img.phase(), PHASE_WINDOW)?;
    let w = out
        .reference_chain
        .local
        .field
        .data()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    write_png(
        &dir.join("local_field.png"),
        &out.chain.local.field,
        (-w, w),
    )?;
    write_png(&dir.join("chi.png"), &out.chain.chi, CHI_WINDOW)?;
    out.report.write(&dir.join("report.json"))
}
