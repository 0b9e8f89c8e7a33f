//! Command-line surface.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use cs_solvers::SolverConfig;
use dcrnet::{save_weights, TrainConfig};
use kspace_core::io::{read_mask, write_mask};
use kspace_core::{
    realize_mask, zero_fill_recon, ComplexVolume, MaskSpec, RealVolume, SamplingMask,
};
use qsm_pipeline::{
    align_echoes, cosmos_invert, fit_field, make_phantom, resharp_remove, simulate_gre, tkd_invert,
    unwrap_phase, FieldMap, PhantomKind, SusceptibilityPhantom,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Category, CliError};
use crate::experiment::{train_toy_run, Scenario, TOY_ARCH};
use crate::files::{
    read_bool, read_complex, read_json, read_real, write_bool, write_complex, write_json,
    write_real,
};
use crate::metrics;
use crate::pipeline::{
    magnitude_metrics, phase_metrics, primitive_rois, qsm_metrics, run_pipeline, write_outputs,
    PipelineOptions, ReconMethod, Reconstructor, DEFAULT_SHIFTS,
};
use crate::report::{metric_config, Report, Scope, Stage};

const PHANTOM_JSON: &str = "phantom.json";
const CHI_FILE: &str = "chi.cvol";
const SUPPORT_FILE: &str = "support.cvol";
const ECHOES_JSON: &str = "echoes.json";

#[derive(Debug, Parser)]
#[command(
    name = "eval-cli",
    version,
    about = "Complex MRI reconstruction and QSM experiments"
)]
pub struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// CSV file for per-iteration traces.
    #[arg(long, global = true)]
    pub trace: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Realize a variable-density sampling mask.
    GenMask(GenMaskArgs),
    /// Generate a susceptibility phantom directory.
    Phantom(PhantomArgs),
    /// Simulate multi-echo GRE images of a phantom directory.
    Simulate(SimulateArgs),
    /// Transform an image to k-space and keep the sampled lines.
    Undersample(UndersampleArgs),
    /// Reconstruct an image from undersampled k-space.
    Recon(ReconArgs),
    /// Train the toy network on the phantom and save its weights.
    TrainToy(TrainToyArgs),
    /// Post-reconstruction QSM steps.
    Qsm {
        #[command(subcommand)]
        step: QsmStep,
    },
    /// Compare a volume against a reference.
    Metrics(MetricsArgs),
    /// Run phantom, reconstruction, QSM and metrics end to end.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct GenMaskArgs {
    #[arg(long)]
    pub af: f64,
    #[arg(long)]
    pub ny: usize,
    #[arg(long)]
    pub nz: usize,
    /// Density decay (default: the value tied to `af`).
    #[arg(long)]
    pub pa: Option<f64>,
    #[arg(long)]
    pub pb: Option<f64>,
    /// Calibration half-widths `cy,cz`.
    #[arg(long, value_parser = parse_list::<usize, 2>)]
    pub calib: Option<[usize; 2]>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct PhantomArgs {
    #[arg(long, default_value = "spheres", value_parser = parse_kind)]
    pub kind: PhantomKind,
    /// Extents `nx,ny,nz`.
    #[arg(long, value_parser = parse_list::<usize, 3>, default_value = "64,64,32")]
    pub shape: [usize; 3],
    /// Output directory.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Phantom directory.
    #[arg(long)]
    pub phantom: PathBuf,
    /// Field direction `bx,by,bz` (normalized).
    #[arg(long, value_parser = parse_list::<f64, 3>)]
    pub b0: Option<[f64; 3]>,
    /// Output directory for the echoes.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct UndersampleArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    /// Sampling mask; fully sampled when absent.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Phase shifts for phase cycling.
    #[arg(long, default_value_t = DEFAULT_SHIFTS)]
    pub shifts: usize,
    /// Treat a solver that stops at the iteration limit as an error.
    #[arg(long)]
    pub strict: bool,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        let mut cfg = SolverConfig::default();
        if let Some(v) = self.lambda1 {
            cfg.lambda1 = v;
        }
        if let Some(v) = self.lambda2 {
            cfg.lambda2 = v;
        }
        if let Some(v) = self.max_iters {
            cfg.max_outer = v;
        }
        cfg
    }
}

#[derive(Debug, Args)]
pub struct ReconArgs {
    #[arg(long, value_enum)]
    pub method: ReconMethod,
    /// Undersampled k-space.
    #[arg(short, long)]
    pub input: PathBuf,
    /// Sampling mask; fully sampled when absent.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Ground truth image; metrics are printed when given.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Network weights directory for `dcrnet`.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct TrainToyArgs {
    #[arg(long, default_value = "spheres", value_parser = parse_kind)]
    pub phantom: PhantomKind,
    #[arg(long, default_value_t = 4.0)]
    pub af: f64,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    #[arg(long, default_value_t = 8)]
    pub batch: usize,
    /// Largest noise level of the noise layer.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Output weights directory.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum QsmStep {
    /// Unwrap the phase of a complex image inside a mask.
    Unwrap {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Fit the field (rad/s) from an echo directory.
    Fit {
        #[arg(long)]
        echoes: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Remove the background field.
    Resharp {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        #[arg(long, default_value_t = qsm_pipeline::resharp::DEFAULT_RADIUS)]
        radius: f64,
        #[arg(long, default_value_t = qsm_pipeline::resharp::DEFAULT_TIK)]
        tik: f64,
        #[arg(short, long)]
        output: PathBuf,
        /// Where to write the eroded mask.
        #[arg(long)]
        eroded: Option<PathBuf>,
    },
    /// Invert a local field by truncated k-space division.
    Tkd {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        #[arg(long, value_parser = parse_list::<f64, 3>, default_value = "0,0,1")]
        b0: [f64; 3],
        #[arg(long, default_value_t = qsm_pipeline::inversion::DEFAULT_TKD_THRESHOLD)]
        threshold: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Invert local fields from several orientations.
    Cosmos {
        /// Local field per orientation, in the order of `--b0`.
        #[arg(short, long, required = true)]
        input: Vec<PathBuf>,
        /// Field direction per input, `bx,by,bz`.
        #[arg(long, required = true, value_parser = parse_list::<f64, 3>)]
        b0: Vec<[f64; 3]>,
        #[arg(long)]
        mask: PathBuf,
        #[arg(long, default_value_t = qsm_pipeline::inversion::DEFAULT_COSMOS_REG)]
        reg: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StageArg {
    Magnitude,
    Phase,
    LocalField,
    Qsm,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long, value_enum, default_value = "magnitude")]
    pub stage: StageArg,
    /// Region the metrics are restricted to (all voxels when absent).
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Phantom directory whose primitives become ROIs (`qsm` stage).
    #[arg(long)]
    pub rois_from: Option<PathBuf>,
    /// Report file; printed to stdout when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long, default_value = "spheres", value_parser = parse_kind)]
    pub phantom: PhantomKind,
    #[arg(long)]
    pub af: f64,
    #[arg(long, value_enum)]
    pub method: ReconMethod,
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Output directory for the report, maps and previews.
    #[arg(long)]
    pub report: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
}

fn parse_kind(s: &str) -> Result<PhantomKind, String> {
    s.parse().map_err(|e: qsm_pipeline::QsmError| e.to_string())
}

/// Parses exactly `N` comma-separated values.
fn parse_list<T, const N: usize>(s: &str) -> Result<[T; N], String>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    let v: Vec<T> = s
        .split(',')
        .map(|p| p.trim().parse::<T>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    <[T; N]>::try_from(v).map_err(|_| format!("expected {N} comma-separated values, got {s:?}"))
}

/// Phantom metadata stored next to `chi.cvol` and `support.cvol`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhantomMeta {
    pub kind: String,
    pub shape: [usize; 3],
    pub seed: u64,
    pub b0_dir: [f64; 3],
    pub te_list: Vec<f64>,
    pub delta_te: f64,
    pub b0_gamma_scale: f64,
    pub r2star: f64,
}

/// Echo list stored next to `echo_NN.cvol` files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EchoMeta {
    pub te_list: Vec<f64>,
    pub files: Vec<String>,
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))
}

fn check_shape(a: [usize; 3], b: [usize; 3], what: &str) -> Result<(), CliError> {
    if a != b {
        return Err(CliError::validation(format!(
            "{what}: shape {a:?} does not match {b:?}"
        )));
    }
    Ok(())
}

/// Loads a phantom directory; primitives are regenerated from kind, shape and seed.
fn load_phantom(dir: &Path) -> Result<SusceptibilityPhantom, CliError> {
    let meta: PhantomMeta = read_json(&dir.join(PHANTOM_JSON))?;
    let (chi, _) = read_real(&dir.join(CHI_FILE))?;
    let (shape, mask) = read_bool(&dir.join(SUPPORT_FILE))?;
    check_shape(shape, chi.shape(), "support")?;
    check_shape(meta.shape, chi.shape(), "phantom.json")?;
    let kind: PhantomKind = meta.kind.parse()?;
    let primitives = make_phantom(kind, meta.shape, meta.seed)?.primitives;
    let ph = SusceptibilityPhantom {
        chi,
        mask,
        b0_dir: meta.b0_dir,
        te_list: meta.te_list,
        delta_te: meta.delta_te,
        b0_gamma_scale: meta.b0_gamma_scale,
        r2star: meta.r2star,
        kind,
        seed: meta.seed,
        primitives,
    };
    ph.validate()?;
    Ok(ph)
}

fn load_mask(path: Option<&Path>, shape: [usize; 3]) -> Result<SamplingMask, CliError> {
    let m = match path {
        Some(p) => read_mask(p).map_err(|e| {
            let e: CliError = e.into();
            CliError::new(e.category, format!("{}: {}", p.display(), e.message))
        })?,
        None => SamplingMask::full(shape[1], shape[2])?,
    };
    if m.ny() != shape[1] || m.nz() != shape[2] {
        return Err(CliError::validation(format!(
            "mask is {}x{}, volume is {:?}",
            m.ny(),
            m.nz(),
            shape
        )));
    }
    Ok(m)
}

fn print_json(v: &Value) -> Result<(), CliError> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn json_number(v: f64) -> Value {
    if v.is_finite() {
        json!(crate::report::round_sig(v))
    } else if v.is_nan() {
        json!("nan")
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn warn_unconverged(converged: bool, strict: bool) -> Result<(), CliError> {
    if converged {
        return Ok(());
    }
    let msg = "solver stopped at the iteration limit before meeting the tolerance";
    if strict {
        return Err(CliError::new(Category::NonConvergence, msg));
    }
    eprintln!("warning: {msg}");
    Ok(())
}

/// Parses `args` and runs the selected command.
pub fn run<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).unwrap_or_else(|e| e.exit());
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::validation("--threads must be positive"));
        }
        // a pool that is already initialized (e.g. by an earlier call in the same process) is kept
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    execute(&cli)
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let seed = cli.seed;
    match &cli.command {
        Command::GenMask(a) => {
            let mut spec = MaskSpec::published(a.af, a.ny, a.nz, seed)?;
            if let Some(v) = a.pa {
                spec.pa = v;
            }
            if let Some(v) = a.pb {
                spec.pb = v;
            }
            if let Some(c) = a.calib {
                spec.calib = c;
            }
            let m = realize_mask(&spec)?;
            write_mask(&a.output, &m)?;
            print_json(&json!({ "count": m.count(), "fraction": json_number(m.fraction()) }))
        }
        Command::Phantom(a) => {
            let shape = a.shape;
            let ph = make_phantom(a.kind, shape, seed)?;
            let meta = PhantomMeta {
                kind: ph.kind.as_str().into(),
                shape,
                seed,
                b0_dir: ph.b0_dir,
                te_list: ph.te_list.clone(),
                delta_te: ph.delta_te,
                b0_gamma_scale: ph.b0_gamma_scale,
                r2star: ph.r2star,
            };
            ensure_dir(&a.output)?;
            write_real(&a.output.join(CHI_FILE), &ph.chi, "ppm")?;
            write_bool(&a.output.join(SUPPORT_FILE), shape, &ph.mask)?;
            write_json(&a.output.join(PHANTOM_JSON), &meta)
        }
        Command::Simulate(a) => {
            let mut ph = load_phantom(&a.phantom)?;
            if let Some(b) = a.b0 {
                ph = ph.with_b0_dir(b)?;
            }
            let series = simulate_gre(&ph)?;
            let files: Vec<String> = (0..series.echoes.len())
                .map(|e| format!("echo_{e:02}.cvol"))
                .collect();
            ensure_dir(&a.output)?;
            for (e, f) in series.echoes.iter().zip(&files) {
                write_complex(&a.output.join(f), e, None)?;
            }
            write_json(
                &a.output.join(ECHOES_JSON),
                &EchoMeta {
                    te_list: series.te_list,
                    files,
                },
            )
        }
        Command::Undersample(a) => {
            let (img, _) = read_complex(&a.input)?;
            let m = load_mask(a.mask.as_deref(), img.shape())?;
            let k = crate::experiment::undersample(&img, &m)?;
            write_complex(&a.output, &k, None)
        }
        Command::Recon(a) => recon(cli, a),
        Command::TrainToy(a) => {
            let s = Scenario::new(a.phantom, crate::experiment::SHIPPED_SHAPE, seed, a.af)?;
            let mut cfg = TrainConfig::toy();
            cfg.steps = a.steps;
            cfg.batch = a.batch;
            cfg.noise_sigma_max = a.noise;
            cfg.seed = seed;
            let run = train_toy_run(&s, TOY_ARCH, &cfg)?;
            ensure_dir(&a.output)?;
            save_weights(&run.model, &a.output)?;
            if let Some(t) = &cli.trace {
                dcrnet::write_trace(t, &run.report)?;
            }
            print_json(&json!({
                "train_mse_before": json_number(run.train_mse.0),
                "train_mse_after": json_number(run.train_mse.1),
                "held_psnr": json_number(run.held_psnr.0),
                "held_psnr_zero_fill": json_number(run.held_psnr.1),
                "seconds": json_number(run.seconds),
            }))
        }
        Command::Qsm { step } => qsm(step),
        Command::Metrics(a) => metrics_cmd(a),
        Command::Pipeline(a) => {
            let mut opts = PipelineOptions::new(a.phantom, seed, a.af, a.method);
            opts.solver = a.solver.config();
            opts.shifts = a.solver.shifts;
            opts.weights = a.weights.clone();
            let out = run_pipeline(&opts)?;
            warn_unconverged(out.converged, a.solver.strict)?;
            write_outputs(&out, &a.report)?;
            if let Some(t) = &cli.trace {
                cs_solvers::trace::write_trace(t, &out.history)?;
            }
            Ok(())
        }
    }
}

fn recon(cli: &Cli, a: &ReconArgs) -> Result<(), CliError> {
    let (k, _) = read_complex(&a.input)?;
    let m = load_mask(a.mask.as_deref(), k.shape())?;
    let r = Reconstructor::new(
        a.method,
        a.solver.config(),
        a.solver.shifts,
        cli.seed,
        a.weights.as_deref(),
    )?;
    let out = r.run(&k, &m)?;
    warn_unconverged(out.converged, a.solver.strict)?;
    let stored = crate::files::as_stored(&out.image)?;
    let mut summary = json!({ "method": a.method.as_str(), "iterations": out.history.len(), "converged": out.converged });
    if let Some(t) = &a.truth {
        let (truth, _) = read_complex(t)?;
        check_shape(truth.shape(), stored.shape(), "truth")?;
        let zf = zero_fill_recon(&k, &m)?;
        summary["psnr"] = json_number(metrics::psnr_complex(stored.data(), truth.data(), None)?);
        summary["ssim"] = json_number(metrics::ssim_magnitude(&stored, &truth)?);
        summary["psnr_zero_fill"] = json_number(metrics::psnr_complex(
            crate::files::as_stored(&zf)?.data(),
            truth.data(),
            None,
        )?);
    }
    write_complex(&a.output, &out.image, None)?;
    if let Some(t) = &cli.trace {
        cs_solvers::trace::write_trace(t, &out.history)?;
    }
    print_json(&summary)
}

fn field_map(path: &Path, mask: &Path) -> Result<FieldMap, CliError> {
    let (f, _) = read_real(path)?;
    let (shape, m) = read_bool(mask)?;
    check_shape(shape, f.shape(), "mask")?;
    Ok(FieldMap::masked(f, &m)?)
}

fn qsm(step: &QsmStep) -> Result<(), CliError> {
    match step {
        QsmStep::Unwrap {
            input,
            mask,
            output,
        } => {
            let (img, _) = read_complex(input)?;
            let (shape, m) = read_bool(mask)?;
            check_shape(shape, img.shape(), "mask")?;
            write_real(output, &unwrap_phase(&img.phase(), &m)?, "rad")
        }
        QsmStep::Fit {
            echoes,
            mask,
            output,
        } => {
            let meta: EchoMeta = read_json(&echoes.join(ECHOES_JSON))?;
            if meta.files.len() != meta.te_list.len() {
                return Err(CliError::format(
                    "echoes.json lists different numbers of files and echo times",
                ));
            }
            let imgs: Vec<ComplexVolume> = meta
                .files
                .iter()
                .map(|f| read_complex(&echoes.join(f)).map(|v| v.0))
                .collect::<Result<_, _>>()?;
            let (shape, m) = read_bool(mask)?;
            for img in &imgs {
                check_shape(shape, img.shape(), "echo")?;
            }
            let mut phases = imgs
                .iter()
                .map(|e| unwrap_phase(&e.phase(), &m))
                .collect::<Result<Vec<_>, _>>()?;
            align_echoes(&mut phases, &m)?;
            let mags: Vec<RealVolume> = imgs.iter().map(|e| e.magnitude()).collect();
            let mut field = fit_field(&phases, &mags, &meta.te_list)?;
            field.valid.iter_mut().zip(&m).for_each(|(v, &k)| *v &= k);
            let f = FieldMap::masked(field.field, &field.valid)?;
            write_real(output, &f.field, "rad/s")
        }
        QsmStep::Resharp {
            input,
            mask,
            radius,
            tik,
            output,
            eroded,
        } => {
            let f = field_map(input, mask)?;
            let valid = f.valid.clone();
            let (local, er) = resharp_remove(&f, &valid, *radius, *tik)?;
            write_real(output, &local.field, "rad/s")?;
            if let Some(p) = eroded {
                write_bool(p, local.shape(), &er)?;
            }
            Ok(())
        }
        QsmStep::Tkd {
            input,
            mask,
            b0,
            threshold,
            output,
        } => {
            let f = field_map(input, mask)?;
            write_real(
                output,
                &tkd_invert(&f, *b0, *threshold, qsm_pipeline::GAMMA_B0_3T)?,
                "ppm",
            )
        }
        QsmStep::Cosmos {
            input,
            b0,
            mask,
            reg,
            output,
        } => {
            if input.len() != b0.len() {
                return Err(CliError::validation(format!(
                    "{} inputs but {} directions",
                    input.len(),
                    b0.len()
                )));
            }
            let fields = input
                .iter()
                .zip(b0)
                .map(|(p, &b)| Ok((field_map(p, mask)?, b)))
                .collect::<Result<Vec<_>, CliError>>()?;
            write_real(
                output,
                &cosmos_invert(&fields, *reg, qsm_pipeline::GAMMA_B0_3T)?,
                "ppm",
            )
        }
    }
}

fn metrics_cmd(a: &MetricsArgs) -> Result<(), CliError> {
    let (test, _) = read_complex(&a.test)?;
    let (reference, _) = read_complex(&a.reference)?;
    check_shape(test.shape(), reference.shape(), "test")?;
    let shape = reference.shape();
    let region = match &a.mask {
        Some(p) => {
            let (s, m) = read_bool(p)?;
            check_shape(s, shape, "mask")?;
            m
        }
        None => vec![true; reference.len()],
    };
    let inputs = json!({
        "test": a.test.file_name().map(|s| s.to_string_lossy().into_owned()),
        "ref": a.reference.file_name().map(|s| s.to_string_lossy().into_owned()),
        "stage": format!("{:?}", a.stage),
        "shape": shape,
    });
    let mut r = Report::new(inputs, json!({ "metrics": metric_config() }));
    let method = "input";
    match a.stage {
        StageArg::Magnitude => magnitude_metrics(&mut r, method, &test, &reference)?,
        StageArg::Phase => phase_metrics(&mut r, method, &test, &reference, &region)?,
        StageArg::LocalField => {
            let (x, y) = (
                metrics::select(test.real().data(), &region),
                metrics::select(reference.real().data(), &region),
            );
            r.push(
                Stage::LocalField,
                method,
                "rmse",
                Scope::Volume,
                metrics::rmse_real(&x, &y)?,
            );
            r.push(
                Stage::LocalField,
                method,
                "psnr",
                Scope::Volume,
                metrics::psnr_real(&x, &y, None)?,
            );
        }
        StageArg::Qsm => match &a.rois_from {
            Some(dir) => {
                let ph = load_phantom(dir)?;
                check_shape(ph.shape(), shape, "phantom")?;
                qsm_metrics(
                    &mut r,
                    method,
                    &test.real(),
                    &reference.real(),
                    &region,
                    &ph,
                )?;
            }
            None => {
                let (x, y) = (
                    metrics::select(test.real().data(), &region),
                    metrics::select(reference.real().data(), &region),
                );
                r.push(
                    Stage::Qsm,
                    method,
                    "rmse",
                    Scope::Volume,
                    metrics::rmse_real(&x, &y)?,
                );
                r.push(
                    Stage::Qsm,
                    method,
                    "psnr",
                    Scope::Volume,
                    metrics::psnr_real(&x, &y, None)?,
                );
                let fit = metrics::linreg(&y, &x)?;
                r.push(Stage::Qsm, method, "slope", Scope::Volume, fit.slope);
                r.push(
                    Stage::Qsm,
                    method,
                    "r_squared",
                    Scope::Volume,
                    fit.r_squared,
                );
            }
        },
    }
    match &a.output {
        Some(p) => r.write(p),
        None => {
            let b = r.to_bytes()?;
            print!("{}", String::from_utf8_lossy(&b));
            Ok(())
        }
    }
}

/// Region statistics of `v` over the phantom primitives inside `within`.
pub fn phantom_roi_stats(
    v: &RealVolume,
    ph: &SusceptibilityPhantom,
    within: &[bool],
) -> Result<Vec<metrics::RoiStat>, CliError> {
    Ok(metrics::roi_stats(v, &primitive_rois(ph, within)?)?)
}
