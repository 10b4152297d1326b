//! CSV emission and parsing for trajectory records.
//!
//! Reals are written as `{:.16e}`, which round-trips `f64` exactly, so metrics
//! recomputed from a parsed file match the in-memory ones bit for bit.

use std::io::{Read, Write};

use thiserror::Error;

use crate::engine::{Row, SwitchRecord, TrajectoryRecord};

#[derive(Debug, Error)]
pub enum CsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad header: {0}")]
    Header(String),
    #[error("line {line}: {msg}")]
    Field { line: u64, msg: String },
}

pub fn trajectory_header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=n).map(|i| format!("x{i}")));
    h.extend((1..=n).map(|i| format!("xhat{i}")));
    h.extend(["u", "r", "m", "chi", "omega"].map(String::from));
    h
}

pub const SWITCHES_HEADER: [&str; 3] = ["m", "t_m", "r_m"];

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trajectory_csv<W: Write>(record: &TrajectoryRecord, out: W) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trajectory_header(record.n))?;
    let mut fields = Vec::with_capacity(2 * record.n + 6);
    for row in &record.rows {
        fields.clear();
        fields.push(real(row.t));
        fields.extend(row.x.iter().chain(&row.xhat).map(|v| real(*v)));
        fields.push(real(row.u));
        fields.push(real(row.r));
        fields.push(row.m.to_string());
        fields.push(real(row.chi));
        fields.push(real(row.omega));
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_switches_csv<W: Write>(switches: &[SwitchRecord], out: W) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWITCHES_HEADER)?;
    for s in switches {
        w.write_record([s.m.to_string(), real(s.t_m), real(s.r_m)])?;
    }
    w.flush()?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize) -> Result<T, CsvError> {
    let line = rec.position().map_or(0, |p| p.line());
    let s = rec.get(idx).ok_or_else(|| CsvError::Field { line, msg: format!("missing column {idx}") })?;
    s.parse().map_err(|_| CsvError::Field { line, msg: format!("cannot parse '{s}'") })
}

/// Parses a trajectory CSV into `(n, rows)`.
pub fn read_trajectory_csv<R: Read>(input: R) -> Result<(usize, Vec<Row>), CsvError> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(String::from).collect();
    if header.len() < 8 || !(header.len() - 6).is_multiple_of(2) {
        return Err(CsvError::Header(header.join(",")));
    }
    let n = (header.len() - 6) / 2;
    if header != trajectory_header(n) {
        return Err(CsvError::Header(header.join(",")));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let col = |k: usize| parse_field::<f64>(&rec, k);
        rows.push(Row {
            t: col(0)?,
            x: (1..=n).map(col).collect::<Result<_, _>>()?,
            xhat: (n + 1..=2 * n).map(col).collect::<Result<_, _>>()?,
            u: col(2 * n + 1)?,
            r: col(2 * n + 2)?,
            m: parse_field(&rec, 2 * n + 3)?,
            chi: col(2 * n + 4)?,
            omega: col(2 * n + 5)?,
        });
    }
    Ok((n, rows))
}

pub fn read_switches_csv<R: Read>(input: R) -> Result<Vec<SwitchRecord>, CsvError> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<&str> = rd.headers()?.iter().collect();
    if header != SWITCHES_HEADER {
        return Err(CsvError::Header(header.join(",")));
    }
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        out.push(SwitchRecord { m: parse_field(&rec, 0)?, t_m: parse_field(&rec, 1)?, r_m: parse_field(&rec, 2)? });
    }
    Ok(out)
}
