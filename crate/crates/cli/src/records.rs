//! CSV persistence of trial records.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use csv::{ReaderBuilder, Terminator, WriterBuilder};
use extorus::sim::TrialRecord;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const EXCEEDANCES_FILE: &str = "exceedances.csv";
pub const MAXIMA_FILE: &str = "maxima.csv";
pub const EXCEEDANCES_HEADER: [&str; 3] = ["trial", "time", "value"];
pub const MAXIMA_HEADER: [&str; 2] = ["trial", "maximum"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExceedanceRow {
    pub trial: u64,
    pub time: u64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaximumRow {
    pub trial: u64,
    pub maximum: f64,
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    WriterBuilder::new().terminator(Terminator::Any(b'\n')).from_writer(w)
}

pub fn write_exceedances<W: Write>(records: &[TrialRecord], w: W) -> csv::Result<()> {
    let mut out = writer(w);
    // An explicit header keeps the contract when there are no rows.
    out.write_record(EXCEEDANCES_HEADER)?;
    for r in records {
        for (&time, &value) in r.exceedance_times.iter().zip(&r.exceedance_values) {
            out.serialize((r.trial_id, time, value))?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_maxima<W: Write>(records: &[TrialRecord], w: W) -> csv::Result<()> {
    let mut out = writer(w);
    out.write_record(MAXIMA_HEADER)?;
    for r in records {
        out.serialize((r.trial_id, r.block_maximum))?;
    }
    out.flush()?;
    Ok(())
}

fn malformed(file: &str, err: &csv::Error) -> CliError {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    let message = match err.kind() {
        csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
        _ => err.to_string(),
    };
    CliError::Csv {
        file: file.to_string(),
        line,
        message,
    }
}

/// Reads rows of `T` after checking the header. An empty input yields no
/// rows.
fn read_rows<T, R>(input: R, file: &str, header: &[&str]) -> CliResult<Vec<T>>
where
    T: for<'de> Deserialize<'de>,
    R: Read,
{
    let mut reader = ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut records = reader.records();
    let first = match records.next() {
        None => return Ok(Vec::new()),
        Some(r) => r.map_err(|e| malformed(file, &e))?,
    };
    if first.iter().ne(header.iter().copied()) {
        return Err(CliError::Csv {
            file: file.to_string(),
            line: 1,
            message: format!("header must be exactly '{}'", header.join(",")),
        });
    }
    let head = csv::StringRecord::from(header.to_vec());
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| malformed(file, &e))?;
        let row: T = rec.deserialize(Some(&head)).map_err(|e| {
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            CliError::Csv {
                file: file.to_string(),
                line,
                message: match e.kind() {
                    csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
                    _ => e.to_string(),
                },
            }
        })?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_exceedances<R: Read>(input: R) -> CliResult<Vec<ExceedanceRow>> {
    read_rows(input, EXCEEDANCES_FILE, &EXCEEDANCES_HEADER)
}

pub fn read_maxima<R: Read>(input: R) -> CliResult<Vec<MaximumRow>> {
    read_rows(input, MAXIMA_FILE, &MAXIMA_HEADER)
}

/// Writes both CSV files into `dir`.
pub fn save_records(dir: &Path, records: &[TrialRecord]) -> CliResult<()> {
    let save = |name: &str, f: &dyn Fn(BufWriter<File>) -> csv::Result<()>| -> CliResult<()> {
        let path = dir.join(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        f(BufWriter::new(file)).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(&path, io),
            other => CliError::Invalid(format!("{}: {other:?}", path.display())),
        })
    };
    save(EXCEEDANCES_FILE, &|w| write_exceedances(records, w))?;
    save(MAXIMA_FILE, &|w| write_maxima(records, w))
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(path, e))
}

/// Rebuilds the trial records of a run with `trials` orbits of length `n`.
/// Every trial must have exactly one maximum row; exceedances are sorted
/// by time within each trial.
pub fn assemble_records(
    exceedances: &[ExceedanceRow],
    maxima: &[MaximumRow],
    trials: u64,
    n: u64,
) -> CliResult<Vec<TrialRecord>> {
    let bad = |file: &str, row: usize, message: String| CliError::Csv {
        file: file.to_string(),
        line: row as u64 + 2,
        message,
    };
    let mut records: Vec<Option<TrialRecord>> = vec![None; trials as usize];
    for (i, m) in maxima.iter().enumerate() {
        let slot = records
            .get_mut(m.trial as usize)
            .ok_or_else(|| bad(MAXIMA_FILE, i, format!("trial {} is not below {trials}", m.trial)))?;
        if slot.is_some() {
            return Err(bad(MAXIMA_FILE, i, format!("trial {} appears twice", m.trial)));
        }
        if m.maximum.is_nan() {
            return Err(bad(MAXIMA_FILE, i, "maximum is NaN".into()));
        }
        *slot = Some(TrialRecord {
            trial_id: m.trial,
            n,
            exceedance_times: Vec::new(),
            exceedance_values: Vec::new(),
            block_maximum: m.maximum,
        });
    }
    if let Some(missing) = records.iter().position(Option::is_none) {
        return Err(CliError::Invalid(format!("{MAXIMA_FILE} has no row for trial {missing}")));
    }
    let mut records: Vec<TrialRecord> = records.into_iter().flatten().collect();
    let mut rows: Vec<(usize, &ExceedanceRow)> = exceedances.iter().enumerate().collect();
    rows.sort_by_key(|(_, r)| (r.trial, r.time));
    for (i, e) in rows {
        let rec = records.get_mut(e.trial as usize).ok_or_else(|| {
            bad(EXCEEDANCES_FILE, i, format!("trial {} is not below {trials}", e.trial))
        })?;
        if e.time >= n {
            return Err(bad(EXCEEDANCES_FILE, i, format!("time {} is not below n = {n}", e.time)));
        }
        if rec.exceedance_times.last() == Some(&e.time) {
            return Err(bad(EXCEEDANCES_FILE, i, format!("duplicate time {}", e.time)));
        }
        if e.value.is_nan() {
            return Err(bad(EXCEEDANCES_FILE, i, "value is NaN".into()));
        }
        rec.exceedance_times.push(e.time);
        rec.exceedance_values.push(e.value);
    }
    Ok(records)
}

/// Loads and assembles the records saved in `dir`.
pub fn load_records(dir: &Path, trials: u64, n: u64) -> CliResult<Vec<TrialRecord>> {
    let exceedances = read_exceedances(open(&dir.join(EXCEEDANCES_FILE))?)?;
    let maxima = read_maxima(open(&dir.join(MAXIMA_FILE))?)?;
    assemble_records(&exceedances, &maxima, trials, n)
}
