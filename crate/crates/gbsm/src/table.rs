//! CSV tables: distance matrices and campaign reports.
//!
//! All reals are printed with 17 significant digits, which round-trips every
//! `f64` exactly.

use std::io::{Read, Write};

use gbsm_core::bounds::BoundReport;
use gbsm_core::DistanceMatrix;

use crate::error::{AppError, Result};

/// `x` with 17 significant digits, positional when the exponent is moderate.
pub fn fmt17(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..17).contains(&exp) {
        format!("{:.*}", (16 - exp) as usize, x)
    } else {
        format!("{x:.16e}")
    }
}

fn parse_f64(field: &str, what: &str) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| AppError::Format(format!("{what} `{field}` is not a number")))
}

/// Rows `s,s_prime,distance` in row-major order.
pub fn write_distance_csv(d: &DistanceMatrix, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["s", "s_prime", "distance"])?;
    for (s, t, v) in d.entries() {
        w.write_record([s.to_string(), t.to_string(), fmt17(v)])?;
    }
    w.flush().map_err(|e| AppError::io("<csv>", e))?;
    Ok(())
}

/// Reads `s,s_prime,distance` rows back into a dense row-major table.
pub fn read_distance_csv(input: impl Read) -> Result<(usize, usize, Vec<f64>)> {
    let mut r = csv::Reader::from_reader(input);
    let mut cells = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 3 {
            return Err(AppError::Format("distance rows need three fields".into()));
        }
        let s: usize = rec[0]
            .parse()
            .map_err(|_| AppError::Format(format!("bad state `{}`", &rec[0])))?;
        let t: usize = rec[1]
            .parse()
            .map_err(|_| AppError::Format(format!("bad state `{}`", &rec[1])))?;
        cells.push((s, t, parse_f64(&rec[2], "distance")?));
    }
    let rows = cells.iter().map(|c| c.0 + 1).max().unwrap_or(0);
    let cols = cells.iter().map(|c| c.1 + 1).max().unwrap_or(0);
    if cells.len() != rows * cols {
        return Err(AppError::Format(format!(
            "{} rows do not fill a {rows}x{cols} matrix",
            cells.len()
        )));
    }
    let mut values = vec![f64::NAN; rows * cols];
    for (s, t, v) in cells {
        values[s * cols + t] = v;
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(AppError::Format("distance table has duplicate pairs".into()));
    }
    Ok((rows, cols, values))
}

const FIXED: [&str; 5] = ["experiment", "gamma", "trial", "seed", "ground_truth"];

fn union_in_order<'a>(names: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for n in names {
        if !out.iter().any(|o| o == n) {
            out.push(n.to_string());
        }
    }
    out
}

/// Columns: `experiment,gamma,trial,seed,ground_truth,<bounds...>,tol,<metadata...>`.
///
/// Bound and metadata columns appear in first-seen order; missing cells are empty.
pub fn write_reports_csv(reports: &[BoundReport], out: impl Write) -> Result<()> {
    let bounds = union_in_order(reports.iter().flat_map(|r| r.bounds().iter().map(|(n, _)| n.as_str())));
    let meta = union_in_order(
        reports
            .iter()
            .flat_map(|r| r.metadata().iter().map(|(k, _)| k.as_str())),
    );
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = FIXED.iter().map(|s| s.to_string()).collect();
    header.extend(bounds.iter().cloned());
    header.push("tol".into());
    header.extend(meta.iter().cloned());
    w.write_record(&header)?;
    for r in reports {
        let mut row = vec![
            r.experiment.clone(),
            fmt17(r.gamma),
            r.trial.to_string(),
            r.seed.to_string(),
            fmt17(r.ground_truth),
        ];
        row.extend(bounds.iter().map(|b| r.bound(b).map(fmt17).unwrap_or_default()));
        row.push(fmt17(r.tol));
        row.extend(meta.iter().map(|k| r.meta(k).unwrap_or_default().to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| AppError::io("<csv>", e))?;
    Ok(())
}

pub fn read_reports_csv(input: impl Read) -> Result<Vec<BoundReport>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.len() < FIXED.len() + 1 || FIXED.iter().zip(header.iter()).any(|(a, b)| *a != b) {
        return Err(AppError::Format(
            "report header must start with experiment,gamma,trial,seed,ground_truth".into(),
        ));
    }
    let tol_at = header
        .iter()
        .position(|h| h == "tol")
        .ok_or_else(|| AppError::Format("report header lacks a tol column".into()))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let trial = rec[2]
            .parse()
            .map_err(|_| AppError::Format(format!("bad trial `{}`", &rec[2])))?;
        let seed = rec[3]
            .parse()
            .map_err(|_| AppError::Format(format!("bad seed `{}`", &rec[3])))?;
        let mut report = BoundReport::new(
            &rec[0],
            parse_f64(&rec[1], "gamma")?,
            trial,
            seed,
            parse_f64(&rec[tol_at], "tol")?,
            parse_f64(&rec[4], "ground_truth")?,
        );
        for i in FIXED.len()..tol_at {
            if !rec[i].is_empty() {
                report.set_bound(&header[i], parse_f64(&rec[i], &header[i])?)?;
            }
        }
        for i in tol_at + 1..header.len() {
            if !rec[i].is_empty() {
                report.set_meta(&header[i], &rec[i]);
            }
        }
        out.push(report);
    }
    Ok(out)
}
