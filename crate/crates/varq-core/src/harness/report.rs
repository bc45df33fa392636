//! Deterministic report emission: CSV with a fixed column set, a
//! structured JSON mirror of config plus rows, and two-column TSV curves
//! for sweep axes. Identical rows yield identical bytes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{ExperimentConfig, ReportRow};

const CSV_HEADER: &str = "experiment_id,kind,space,dim,p,q,family,estimate,diagnostic,seed";

fn csv_field(s: &str) -> String {
    // the column set is fixed; embedded separators are replaced, never quoted
    s.replace([',', '\n'], ";")
}

pub fn emit_csv(rows: &[ReportRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Validation("no rows to emit".into()));
    }
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            csv_field(&r.experiment_id),
            csv_field(&r.kind),
            csv_field(&r.space),
            r.dim,
            r.p,
            r.q,
            csv_field(&r.family),
            r.estimate,
            csv_field(&r.diagnostic),
            r.seed
        ));
    }
    Ok(out)
}

/// Two-column TSV of an axis curve.
pub fn emit_tsv(axis_label: &str, points: &[(f64, f64)]) -> Result<String> {
    if points.is_empty() {
        return Err(Error::Validation("no points to emit".into()));
    }
    let mut out = format!("{axis_label}\testimate\n");
    for (x, y) in points {
        out.push_str(&format!("{x}\t{y}\n"));
    }
    Ok(out)
}

/// Structured report: config echo plus rows, round-trippable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuredReport {
    pub config: Option<ExperimentConfig>,
    pub rows: Vec<ReportRow>,
}

pub fn write_structured(report: &StructuredReport, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_structured(path: &Path) -> Result<StructuredReport> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
