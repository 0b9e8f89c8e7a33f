//! Cost-history CSV output.

use std::path::Path;

use kspace_core::io::write_atomic;
use kspace_core::KspaceError;

use crate::error::SolverError;
use crate::problem::CostTerms;
use crate::Result;

pub const TRACE_HEADER: [&str; 5] = ["iteration", "data_term", "reg_m", "reg_phi", "total"];

/// Writes `history` as CSV, one row per iteration starting at 0.
pub fn write_trace(path: &Path, history: &[CostTerms]) -> Result<()> {
    write_atomic(path, |w| {
        let fmt = |e: csv::Error| KspaceError::Format(e.to_string());
        let mut out = csv::Writer::from_writer(w);
        out.write_record(TRACE_HEADER).map_err(fmt)?;
        for (i, c) in history.iter().enumerate() {
            out.write_record([
                i.to_string(),
                c.data_term.to_string(),
                c.reg_m.to_string(),
                c.reg_phi.to_string(),
                c.total.to_string(),
            ])
            .map_err(fmt)?;
        }
        out.flush()?;
        Ok(())
    })
    .map_err(|e| SolverError::Trace(e.to_string()))
}

/// Parses a trace written by [`write_trace`].
pub fn read_trace(path: &Path) -> Result<Vec<CostTerms>> {
    let err = |e: csv::Error| SolverError::Trace(e.to_string());
    let mut rd = csv::Reader::from_path(path).map_err(err)?;
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(err)?;
        let f = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| SolverError::Trace(format!("bad field {i} in {rec:?}")))
        };
        out.push(CostTerms {
            data_term: f(1)?,
            reg_m: f(2)?,
            reg_phi: f(3)?,
            total: f(4)?,
        });
    }
    Ok(out)
}
