//! Row-level and aggregate CSV output.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::Algorithm;
use crate::runner::{Row, TrialReport};
use crate::HarnessError;

pub const ROW_HEADER: [&str; 11] = [
    "algorithm",
    "experiment",
    "sweep_name",
    "sweep_value",
    "trial",
    "source_id",
    "rmse_deg",
    "detected",
    "ospa",
    "runtime_ms",
    "flags",
];

pub const AGGREGATE_HEADER: [&str; 9] = [
    "algorithm",
    "experiment",
    "sweep_name",
    "sweep_value",
    "rows",
    "pd",
    "mean_rmse_deg",
    "mean_ospa",
    "mean_runtime_ms",
];

/// Rounds to 6 significant digits.
pub fn round6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().expect("formatted float parses")
}

/// Shortest text that parses back to `round6(x)`.
pub fn fmt6(x: f64) -> String {
    format!("{}", round6(x))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub algorithm: String,
    pub experiment: String,
    pub sweep_name: String,
    pub sweep_value: f64,
    pub rows: usize,
    pub pd: f64,
    /// Over detected sources only.
    pub mean_rmse_deg: Option<f64>,
    pub mean_ospa: f64,
    pub mean_runtime_ms: f64,
}

/// Field values of a row exactly as written to CSV.
fn row_record(r: &Row) -> [String; 11] {
    [
        r.algorithm.name().to_string(),
        r.experiment.clone(),
        r.sweep_name.clone(),
        fmt6(r.sweep_value),
        r.trial.to_string(),
        r.source_id.to_string(),
        fmt6(r.rmse_deg),
        (r.detected as u8).to_string(),
        fmt6(r.ospa),
        fmt6(r.runtime_ms),
        r.flags.clone(),
    ]
}

/// Groups consecutive rows with the same (algorithm, experiment, sweep) key.
/// Values are rounded first so the result can be recomputed from the CSV.
pub fn aggregate(rows: &[Row]) -> Vec<AggregateRow> {
    let mut out: Vec<AggregateRow> = Vec::new();
    let mut sums: Vec<(f64, usize, f64, f64)> = Vec::new();
    for r in rows {
        let value = round6(r.sweep_value);
        let same = out.last().is_some_and(|a| {
            a.algorithm == r.algorithm.name()
                && a.experiment == r.experiment
                && a.sweep_name == r.sweep_name
                && a.sweep_value == value
        });
        if !same {
            out.push(AggregateRow {
                algorithm: r.algorithm.name().to_string(),
                experiment: r.experiment.clone(),
                sweep_name: r.sweep_name.clone(),
                sweep_value: value,
                rows: 0,
                pd: 0.0,
                mean_rmse_deg: None,
                mean_ospa: 0.0,
                mean_runtime_ms: 0.0,
            });
            sums.push((0.0, 0, 0.0, 0.0));
        }
        let a = out.last_mut().expect("pushed above");
        let s = sums.last_mut().expect("pushed above");
        a.rows += 1;
        if r.detected {
            s.0 += round6(r.rmse_deg);
            s.1 += 1;
        }
        s.2 += round6(r.ospa);
        s.3 += round6(r.runtime_ms);
    }
    for (a, s) in out.iter_mut().zip(sums) {
        let n = a.rows as f64;
        a.pd = s.1 as f64 / n;
        a.mean_rmse_deg = (s.1 > 0).then(|| s.0 / s.1 as f64);
        a.mean_ospa = s.2 / n;
        a.mean_runtime_ms = s.3 / n;
    }
    out
}

fn aggregate_record(a: &AggregateRow) -> [String; 9] {
    [
        a.algorithm.clone(),
        a.experiment.clone(),
        a.sweep_name.clone(),
        fmt6(a.sweep_value),
        a.rows.to_string(),
        fmt6(a.pd),
        a.mean_rmse_deg.map(fmt6).unwrap_or_default(),
        fmt6(a.mean_ospa),
        fmt6(a.mean_runtime_ms),
    ]
}

fn write_csv<const W: usize>(path: &Path, header: [&str; W], records: impl Iterator<Item = [String; W]>) -> Result<(), HarnessError> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    let wrap = |e: csv::Error| HarnessError::Csv(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(wrap)?;
    for r in records {
        w.write_record(&r).map_err(wrap)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn rows_csv(rows: &[Row]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(ROW_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record(row_record(r)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii fields")
}

/// Writes `rows.csv` and `aggregate.csv` into `dir`; returns both paths.
pub fn emit_results(report: &TrialReport, dir: &Path) -> Result<(PathBuf, PathBuf), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let rows_path = dir.join("rows.csv");
    let agg_path = dir.join("aggregate.csv");
    write_csv(&rows_path, ROW_HEADER, report.rows.iter().map(row_record))?;
    write_csv(&agg_path, AGGREGATE_HEADER, aggregate(&report.rows).iter().map(aggregate_record))?;
    Ok((rows_path, agg_path))
}

/// Parses a row-level CSV written by [`emit_results`].
pub fn read_rows(path: &Path) -> Result<Vec<Row>, HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| HarnessError::Csv(format!("{}: {e}", path.display())))?;
    let bad = |m: String| HarnessError::Csv(format!("{}: {m}", path.display()));
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |i: usize| -> Result<f64, HarnessError> { rec[i].parse().map_err(|_| bad(format!("bad number {:?}", &rec[i]))) };
        let int = |i: usize| -> Result<usize, HarnessError> { rec[i].parse().map_err(|_| bad(format!("bad integer {:?}", &rec[i]))) };
        rows.push(Row {
            algorithm: Algorithm::parse(&rec[0])?,
            experiment: rec[1].to_string(),
            sweep_name: rec[2].to_string(),
            sweep_value: num(3)?,
            trial: int(4)?,
            source_id: int(5)?,
            rmse_deg: num(6)?,
            detected: &rec[7] == "1",
            ospa: num(8)?,
            runtime_ms: num(9)?,
            flags: rec[10].to_string(),
        });
    }
    Ok(rows)
}

/// Writes one line per aggregate to `out` as aligned text.
pub fn print_aggregate(rows: &[Row], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{:<8} {:>10} {:>6} {:>12} {:>10} {:>12}", "algo", "sweep", "pd", "rmse_deg", "ospa", "runtime_ms")?;
    for a in aggregate(rows) {
        writeln!(
            out,
            "{:<8} {:>10} {:>6.3} {:>12} {:>10.4} {:>12.3}",
            a.algorithm,
            fmt6(a.sweep_value),
            a.pd,
            a.mean_rmse_deg.map_or("-".to_string(), |v| format!("{v:.4}")),
            a.mean_ospa,
            a.mean_runtime_ms
        )?;
    }
    Ok(())
}
