//! Metrics and the command-line front end.
//!
//! [`metrics`] holds PSNR, SSIM, region statistics and voxel-wise regression.
//! [`experiment`] builds the shared phantom scenarios, [`pipeline`] runs the
//! full chain and fills a [`report::Report`], and [`cli`] exposes every stage
//! as a subcommand.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod experiment;
pub mod files;
pub mod metrics;
pub mod pipeline;
pub mod preview;
pub mod report;

pub use error::{Category, CliError};
pub use metrics::{
    linreg, psnr_complex, psnr_real, roi_stats, ssim_2d, MetricError, RegressionResult, RoiMask,
    RoiStat,
};
pub use pipeline::{run_pipeline, PipelineOptions, ReconMethod};
pub use report::Report;
