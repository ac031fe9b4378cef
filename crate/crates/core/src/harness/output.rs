use std::io::Write;
use std::path::Path;

use crate::error::Result;

/// Bumped whenever a CSV column is added, removed or renamed.
pub const RESULTS_SCHEMA_VERSION: u32 = 1;

/// Shortest round-trip decimal form; `NaN`/`inf` spelled out.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

/// An in-memory table written as RFC 4180 CSV.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(w.into_inner().map_err(|e| e.into_error())?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }
}

/// Whitespace-delimited data file with a `#` comment header.
pub(crate) fn write_dat(path: &Path, columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# {}", columns.join(" "))?;
    for r in rows {
        let line: Vec<String> = r.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(f, "{}", line.join(" "))?;
    }
    f.flush()?;
    Ok(())
}

pub(crate) fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub(crate) fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Write `results.csv`, `timing.csv`, `summary.json` and the resolved config.
pub fn write_simulate(out: &super::SimulateOutput, cfg: &super::ExperimentConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    out.results_table().write(&dir.join("results.csv"))?;
    out.timing_table().write(&dir.join("timing.csv"))?;
    write_json(
        &dir.join("summary.json"),
        &serde_json::json!({
            "schema_version": RESULTS_SCHEMA_VERSION,
            "params": out.params,
            "cells": out.summary,
        }),
    )?;
    std::fs::write(dir.join("config.toml"), cfg.to_toml())?;
    Ok(())
}

/// Write `coverage.csv`, `coverage_runs.csv`, `coverage.dat` and the resolved config.
pub fn write_coverage(out: &super::CoverageOutput, cfg: &super::ExperimentConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    out.cell_table().write(&dir.join("coverage.csv"))?;
    out.run_table().write(&dir.join("coverage_runs.csv"))?;
    let rows: Vec<Vec<f64>> = out
        .cells
        .iter()
        .map(|c| vec![c.particles as f64, c.coverage, c.mean_width])
        .collect();
    write_dat(&dir.join("coverage.dat"), &["particles", "coverage", "mean_width"], &rows)?;
    std::fs::write(dir.join("config.toml"), cfg.to_toml())?;
    Ok(())
}

/// Write `logistic_runs.csv`, `logistic_summary.json`, `logistic_curves.dat`
/// and the resolved config.
pub fn write_logistic(out: &super::LogisticOutput, cfg: &super::ExperimentConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    out.run_table().write(&dir.join("logistic_runs.csv"))?;
    let ok: Vec<&super::LogisticRun> = out.runs.iter().filter(|r| r.status == super::RowStatus::Ok).collect();
    let mean_ess = ok.iter().filter_map(|r| r.ess).sum::<f64>() / ok.len() as f64;
    write_json(
        &dir.join("logistic_summary.json"),
        &serde_json::json!({
            "schema_version": RESULTS_SCHEMA_VERSION,
            "private": out.private,
            "params": out.params,
            "runs": ok.len(),
            "failed": out.stalled(),
            "mean_estimate": out.mean_estimate(),
            "mean_ess": mean_ess,
        }),
    )?;
    if let Some(band) = &out.band {
        write_dat(&dir.join("logistic_curves.dat"), &["z", "lower", "upper", "mean"], &band.rows())?;
    }
    std::fs::write(dir.join("config.toml"), cfg.to_toml())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoting_follows_rfc4180() {
        let mut t = CsvTable::new(vec!["a".into(), "b".into()]);
        t.push(vec!["x,y".into(), "say \"hi\"".into()]);
        let s = String::from_utf8(t.to_bytes().unwrap()).unwrap();
        assert_eq!(s, "a,b\r\n\"x,y\",\"say \"\"hi\"\"\"\r\n");
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.1, -3.825, 1e-300, 123456.789] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(f64::NAN), "NaN");
    }
}
