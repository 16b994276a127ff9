//! Dataset loading (JSONL, CSV directories) and Gram matrix serialization.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::preprocess::Dataset;
use crate::sequence::Sequence;

/// Magic bytes opening a binary Gram file.
pub const GRAM_MAGIC: &[u8; 8] = b"SIGGRAM1";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonRecord {
    id: String,
    points: Vec<Vec<f64>>,
}

/// One sequence per line: `{"id": "...", "points": [[...], ...]}`. Blank lines are skipped.
pub fn load_jsonl(path: &Path) -> Result<Dataset> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut sequences = Vec::new();
    let mut ids = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let at = |msg: String| Error::parse(path, format!("line {}: {msg}", lineno + 1));
        let rec: JsonRecord = serde_json::from_str(line).map_err(|e| at(e.to_string()))?;
        let seq = Sequence::from_points(&rec.points).map_err(|e| at(e.to_string()))?;
        if let Some(first) = sequences.first().map(Sequence::dim) {
            if first != seq.dim() {
                return Err(at(format!("dimension {} differs from {first}", seq.dim())));
            }
        }
        sequences.push(seq);
        ids.push(rec.id);
    }
    if sequences.is_empty() {
        return Err(Error::parse(path, "no sequences"));
    }
    Dataset::new(sequences, ids)
}

/// Reads one sequence from a CSV file: one row per time step, one numeric
/// column per coordinate. A first row with no numeric cell is taken as a header.
pub fn load_csv_file(path: &Path) -> Result<Sequence> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::parse(path, e.to_string()))?;
    let mut points: Vec<Vec<f64>> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(path, format!("row {}: {e}", row + 1)))?;
        if record.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        if row == 0 && record.iter().all(|c| c.trim().parse::<f64>().is_err()) {
            continue;
        }
        let point = record
            .iter()
            .enumerate()
            .map(|(col, cell)| {
                cell.trim().parse::<f64>().map_err(|_| {
                    Error::parse(
                        path,
                        format!(
                            "row {}, column {}: non-numeric cell `{cell}`",
                            row + 1,
                            col + 1
                        ),
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = points.first() {
            if first.len() != point.len() {
                return Err(Error::parse(
                    path,
                    format!(
                        "row {}: {} columns, expected {}",
                        row + 1,
                        point.len(),
                        first.len()
                    ),
                ));
            }
        }
        points.push(point);
    }
    if points.is_empty() {
        return Err(Error::parse(path, "no data rows"));
    }
    Sequence::from_points(&points).map_err(|e| Error::parse(path, e.to_string()))
}

/// Loads every `*.csv` file of a directory, sorted by file name; ids are file stems.
pub fn load_csv_dir(dir: &Path) -> Result<Dataset> {
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .map(|e| e.map(|e| e.path()).map_err(io_err(dir)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::parse(dir, "no .csv files"));
    }
    let loaded = paths
        .par_iter()
        .map(|p| load_csv_file(p))
        .collect::<Vec<_>>();
    let mut sequences: Vec<Sequence> = Vec::with_capacity(paths.len());
    let mut ids = Vec::with_capacity(paths.len());
    for (p, seq) in paths.iter().zip(loaded) {
        let seq = seq?;
        if let Some(first) = sequences.first().map(Sequence::dim) {
            if first != seq.dim() {
                return Err(Error::parse(
                    p,
                    format!("dimension {} differs from {first}", seq.dim()),
                ));
            }
        }
        sequences.push(seq);
        ids.push(
            p.file_stem()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned(),
        );
    }
    Dataset::new(sequences, ids)
}

/// Loads a directory as CSV files and anything else as JSONL.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    if path.is_dir() {
        load_csv_dir(path)
    } else {
        load_jsonl(path)
    }
}

/// Dense CSV: a header row of ids, then one row per sequence.
pub fn write_gram_csv(out: &mut impl Write, ids: &[String], values: &[f64]) -> std::io::Result<()> {
    let n = ids.len();
    assert_eq!(values.len(), n * n);
    writeln!(out, "{}", ids.join(","))?;
    for row in values.chunks_exact(n.max(1)) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Binary layout: 8 magic bytes, `n` as little-endian u64, then `n²`
/// little-endian f64 values in row-major order.
pub fn write_gram_binary(out: &mut impl Write, values: &[f64]) -> std::io::Result<()> {
    let n = (values.len() as f64).sqrt() as usize;
    assert_eq!(n * n, values.len());
    out.write_all(GRAM_MAGIC)?;
    out.write_all(&(n as u64).to_le_bytes())?;
    for v in values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_gram_binary(bytes: &[u8]) -> Result<Vec<f64>> {
    let bad = |m: &str| Error::parse("<gram>", m.to_string());
    if bytes.len() < 16 || &bytes[..8] != GRAM_MAGIC {
        return Err(bad("missing gram header"));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body = &bytes[16..];
    if body.len() != n * n * 8 {
        return Err(bad("gram body length does not match header"));
    }
    Ok(body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

/// Parses a CSV Gram file back into ids and values.
pub fn read_gram_csv(text: &str) -> Result<(Vec<String>, Vec<f64>)> {
    let bad = |m: String| Error::parse("<gram>", m);
    let mut lines = text.lines();
    let ids: Vec<String> = lines
        .next()
        .ok_or_else(|| bad("empty".into()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut values = Vec::with_capacity(ids.len() * ids.len());
    for (r, line) in lines.enumerate() {
        for cell in line.split(',') {
            values.push(
                cell.parse()
                    .map_err(|_| bad(format!("row {}: bad number `{cell}`", r + 2)))?,
            );
        }
    }
    if values.len() != ids.len() * ids.len() {
        return Err(bad("shape does not match header".into()));
    }
    Ok((ids, values))
}
