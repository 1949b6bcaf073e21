//! Bit-stable CSV and JSON output.
//!
//! Floats are written with 9 significant digits in plain decimal notation;
//! lines end in `\n`; column order is fixed.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use super::run::RunResult;
use super::study::{AblationRow, SweepRow};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

pub const RUNS_COLUMNS: [&str; 13] = [
    "run_id", "scenario", "attack", "seed", "ade", "fde", "apde", "ade_n", "ade_e", "chi_max", "detected",
    "latency_s", "peak_stat",
];
pub const TRACE_COLUMNS: [&str; 6] = ["t", "true_n", "true_e", "est_n", "est_e", "chi2"];
pub const SWEEP_COLUMNS: [&str; 5] = ["theta", "alpha", "phi", "mean_ade", "mean_chi_max"];
pub const ABLATION_COLUMNS: [&str; 5] = ["label", "ade_n", "ade_e", "ade", "chi_max"];

/// Decimal rendering with `digits` significant digits.
pub fn fmt_sig(v: f64, digits: usize) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    // round in scientific form first so a carry (9.99.. -> 10) fixes the magnitude
    let r: f64 = format!("{:.*e}", digits.saturating_sub(1), v).parse().unwrap_or(v);
    let mag = r.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - mag).max(0) as usize;
    let s = format!("{r:.decimals$}");
    trim_zeros(s)
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.to_string()
    }
}

fn f(v: f64) -> String {
    fmt_sig(v, 9)
}

fn opt(v: Option<f64>) -> String {
    v.map(f).unwrap_or_default()
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let wrap = |e: csv::Error| Error::Fault(format!("csv: {e}"));
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(&row).map_err(wrap)?;
    }
    w.into_inner().map_err(|e| Error::Fault(format!("csv: {e}")))
}

pub fn runs_csv(results: &[RunResult]) -> Result<Vec<u8>> {
    csv_bytes(
        &RUNS_COLUMNS,
        results.iter().enumerate().map(|(i, r)| {
            vec![
                i.to_string(),
                r.scenario.clone(),
                r.attack.clone(),
                r.seed.to_string(),
                f(r.metrics.ade),
                f(r.metrics.fde),
                f(r.metrics.apde),
                f(r.metrics.per_axis_ade.0),
                f(r.metrics.per_axis_ade.1),
                f(r.metrics.chi_max),
                r.detection.chi_square.detected.to_string(),
                opt(r.detection.chi_square.latency),
                f(r.detection.chi_square.peak_statistic),
            ]
        }),
    )
}

pub fn trace_csv(result: &RunResult) -> Result<Vec<u8>> {
    csv_bytes(
        &TRACE_COLUMNS,
        result.epochs.iter().map(|e| vec![f(e.t), f(e.true_n), f(e.true_e), f(e.est_n), f(e.est_e), opt(e.chi2)]),
    )
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<Vec<u8>> {
    csv_bytes(
        &SWEEP_COLUMNS,
        rows.iter().map(|r| vec![f(r.theta), f(r.alpha), f(r.phi), f(r.mean_ade), f(r.mean_chi_max)]),
    )
}

pub fn ablation_csv(rows: &[AblationRow]) -> Result<Vec<u8>> {
    csv_bytes(
        &ABLATION_COLUMNS,
        rows.iter().map(|r| vec![r.label.clone(), f(r.ade_n), f(r.ade_e), f(r.ade), f(r.chi_max)]),
    )
}

/// Rounds every float in a JSON tree to 9 significant digits.
fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap();
            f(x).parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
                .map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect::<Map<_, _>>()),
        other => other,
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let v = serde_json::to_value(value).map_err(|e| Error::Fault(format!("json: {e}")))?;
    let mut out = serde_json::to_vec_pretty(&round_json(v)).map_err(|e| Error::Fault(format!("json: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

/// Run summaries without the per-frame series.
#[derive(Serialize)]
struct RunSummary<'a> {
    run_id: usize,
    scenario: &'a str,
    attack: &'a str,
    seed: u64,
    ade: f64,
    fde: f64,
    apde: f64,
    ade_n: f64,
    ade_e: f64,
    chi_max: f64,
    detection: &'a super::run::Detections,
}

pub fn runs_json(results: &[RunResult]) -> Result<Vec<u8>> {
    let rows: Vec<_> = results
        .iter()
        .enumerate()
        .map(|(i, r)| RunSummary {
            run_id: i,
            scenario: &r.scenario,
            attack: &r.attack,
            seed: r.seed,
            ade: r.metrics.ade,
            fde: r.metrics.fde,
            apde: r.metrics.apde,
            ade_n: r.metrics.per_axis_ade.0,
            ade_e: r.metrics.per_axis_ade.1,
            chi_max: r.metrics.chi_max,
            detection: &r.detection,
        })
        .collect();
    to_json(&rows)
}

pub fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes `runs.<ext>` into `dir`, plus `trace.csv` of the first run for CSV.
pub fn emit(results: &[RunResult], format: Format, dir: &Path) -> Result<()> {
    match format {
        Format::Csv => {
            write(&dir.join("runs.csv"), &runs_csv(results)?)?;
            if let Some(first) = results.first() {
                write(&dir.join("trace.csv"), &trace_csv(first)?)?;
            }
        }
        Format::Json => write(&dir.join("runs.json"), &runs_json(results)?)?,
    }
    Ok(())
}
