//! The JSON report `{inputs, config, metrics[], versions}`.
//!
//! Metric values are rounded to [`SIGNIFICANT_DIGITS`] significant digits so
//! that the bytes do not depend on last-bit differences between SIMD kernels.
//! Infinite values are written as the strings `"inf"` and `"-inf"`, NaN as `"nan"`.

use std::path::Path;

use serde::{Serialize, Serializer};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::metrics::{SSIM_K1, SSIM_K2, SSIM_SIGMA, SSIM_WINDOW};

pub const SIGNIFICANT_DIGITS: usize = 10;
pub const REPORT_FORMAT: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Magnitude,
    Phase,
    LocalField,
    Qsm,
}

/// Where a metric was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    /// The whole 3D volume (or its mask).
    Volume,
    /// Mean of per-x-slice 2D values.
    SliceMean,
    /// The central x-slice only.
    CentralSlice,
    /// A named region.
    Region,
}

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v)
        .parse()
        .unwrap_or(v)
}

fn ser_value<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_nan() {
        s.serialize_str("nan")
    } else if v.is_infinite() {
        s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
    } else {
        s.serialize_f64(round_sig(*v))
    }
}

/// Parses a value written by the report serializer.
pub fn parse_value(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => match s.as_str() {
            "inf" => Some(f64::INFINITY),
            "-inf" => Some(f64::NEG_INFINITY),
            "nan" => Some(f64::NAN),
            _ => None,
        },
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metric {
    pub stage: Stage,
    pub method: String,
    pub name: String,
    pub scope: Scope,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region: Option<String>,
    #[serde(serialize_with = "ser_value")]
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub inputs: Value,
    pub config: Value,
    pub metrics: Vec<Metric>,
    pub versions: Value,
}

impl Report {
    pub fn new(inputs: Value, config: Value) -> Self {
        Self {
            inputs,
            config,
            metrics: Vec::new(),
            versions: versions(),
        }
    }

    pub fn push(&mut self, stage: Stage, method: &str, name: &str, scope: Scope, value: f64) {
        self.metrics.push(Metric {
            stage,
            method: method.into(),
            name: name.into(),
            scope,
            region: None,
            value,
        });
    }

    pub fn push_region(
        &mut self,
        stage: Stage,
        method: &str,
        name: &str,
        region: &str,
        value: f64,
    ) {
        self.metrics.push(Metric {
            stage,
            method: method.into(),
            name: name.into(),
            scope: Scope::Region,
            region: Some(region.into()),
            value,
        });
    }

    /// First metric matching `stage`, `method` and `name` (and `region` when given).
    pub fn find(
        &self,
        stage: Stage,
        method: &str,
        name: &str,
        region: Option<&str>,
    ) -> Option<&Metric> {
        self.metrics.iter().find(|m| {
            m.stage == stage
                && m.method == method
                && m.name == name
                && m.region.as_deref() == region
        })
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_bytes(&self) -> Result<Vec<u8>, CliError> {
        let mut b = serde_json::to_vec_pretty(self)?;
        b.push(b'\n');
        Ok(b)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let bytes = self.to_bytes()?;
        write_bytes(path, &bytes)
    }
}

/// Atomically writes `bytes` to `path`.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    kspace_core::io::write_atomic(path, |w| Ok(w.write_all(bytes)?))?;
    Ok(())
}

pub fn versions() -> Value {
    json!({
        "eval-cli": env!("CARGO_PKG_VERSION"),
        "report_format": REPORT_FORMAT,
    })
}

/// Metric constants recorded in every report.
pub fn metric_config() -> Value {
    json!({
        "psnr_data_range": "max |ref| over the compared samples",
        "psnr_complex": "RMSE of |test - ref|",
        "phase_difference": "wrapped to (-pi, pi]",
        "ssim_window": SSIM_WINDOW,
        "ssim_sigma": SSIM_SIGMA,
        "ssim_k1": SSIM_K1,
        "ssim_k2": SSIM_K2,
        "ssim_positions": "windows fully inside the image",
        "slice_axis": "x",
        "roi_std": "population",
    })
}
