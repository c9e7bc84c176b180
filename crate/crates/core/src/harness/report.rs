use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::ExperimentReport;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// Summary table plus per-run long table.
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::InvalidParameter(format!("unknown report format {s:?}"))),
        }
    }
}

fn fmt2(v: Option<f64>) -> String {
    v.map_or_else(|| "ERR".to_string(), |v| format!("{v:.2}"))
}

/// Summary table: one row per report, `<NAME>_ACC` and `<NAME>_R` columns for
/// every algorithm of the first report.
pub fn write_table_csv<W: Write>(reports: &[ExperimentReport], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let names: Vec<&str> = reports
        .first()
        .map(|r| r.algorithms.iter().map(|a| a.name.as_str()).collect())
        .unwrap_or_default();
    let mut header = vec!["size".to_string()];
    for name in &names {
        header.push(format!("{name}_ACC"));
        header.push(format!("{name}_R"));
    }
    out.write_record(&header)?;
    for report in reports {
        let mut row = vec![report.size.to_string()];
        for name in &names {
            let alg = report.algorithm(name);
            row.push(fmt2(alg.and_then(|a| a.mean_accuracy)));
            row.push(fmt2(alg.and_then(|a| a.mean_storage)));
        }
        out.write_record(&row)?;
    }
    out.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

/// Per-run long table: `algorithm,size,run,acc,storage`.
pub fn write_runs_csv<W: Write>(reports: &[ExperimentReport], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["algorithm", "size", "run", "acc", "storage"])?;
    for report in reports {
        for alg in &report.algorithms {
            for run in &alg.runs {
                out.write_record([
                    alg.name.clone(),
                    report.size.to_string(),
                    run.run.to_string(),
                    run.accuracy.map_or_else(|| "ERR".into(), |v| v.to_string()),
                    run.storage_pct.map_or_else(|| "ERR".into(), |v| v.to_string()),
                ])?;
            }
        }
    }
    out.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

pub fn write_json<W: Write>(report: &ExperimentReport, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, report)?;
    w.write_all(b"\n").map_err(|e| Error::io("<json output>", e))?;
    Ok(())
}

pub fn read_json<R: Read>(r: R) -> Result<ExperimentReport> {
    Ok(serde_json::from_reader(r)?)
}

/// `report.csv` -> `report_runs.csv`.
pub fn runs_csv_path(table_path: &Path) -> PathBuf {
    let stem = table_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    table_path.with_file_name(format!("{stem}_runs.csv"))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Writes the report to `path`; CSV output also writes the per-run table next
/// to it (see [`runs_csv_path`]). Returns the files written.
pub fn emit_report(report: &ExperimentReport, format: ReportFormat, path: &Path) -> Result<Vec<PathBuf>> {
    match format {
        ReportFormat::Json => {
            let mut w = create(path)?;
            write_json(report, &mut w)?;
            w.flush().map_err(|e| Error::io(path, e))?;
            Ok(vec![path.to_path_buf()])
        }
        ReportFormat::Csv => {
            let reports = std::slice::from_ref(report);
            write_table_csv(reports, create(path)?)?;
            let runs = runs_csv_path(path);
            write_runs_csv(reports, create(&runs)?)?;
            Ok(vec![path.to_path_buf(), runs])
        }
    }
}

/// Human-readable summary table.
pub fn format_summary(report: &ExperimentReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{} (n={}, {} repetitions)",
        report.dataset, report.size, report.spec.repetitions
    );
    let _ = writeln!(
        s,
        "{:<8} {:>14} {:>14} {:>8} {:>6}",
        "algo", "acc%", "storage%", "ratio", "runs"
    );
    for a in &report.algorithms {
        let pm = |m: Option<f64>, sd: Option<f64>| match (m, sd) {
            (Some(m), Some(sd)) => format!("{m:.2}±{sd:.2}"),
            _ => "ERR".to_string(),
        };
        let _ = writeln!(
            s,
            "{:<8} {:>14} {:>14} {:>8} {:>3}/{:<2}",
            a.name,
            pm(a.mean_accuracy, a.std_accuracy),
            pm(a.mean_storage, a.std_storage),
            a.ratio.map_or_else(|| "ERR".into(), |r| format!("{r:.3}")),
            a.completed_runs,
            a.runs.len()
        );
    }
    s
}
