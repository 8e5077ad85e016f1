//! CSV matrices in, CSV tables or JSON reports out.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! matrix written here and read back is bit-identical.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use longmem::TimeSeries;
use nalgebra::DMatrix;

use crate::error::{CliError, CliResult};

/// Reads a numeric matrix (one time step per row). A first row that does
/// not parse as numbers is taken to be a header. `-` reads standard input.
pub fn read_matrix(path: &Path) -> CliResult<TimeSeries> {
    let source: Box<dyn Read> = if path.as_os_str() == "-" {
        Box::new(io::stdin().lock())
    } else {
        let file = File::open(path)
            .map_err(|e| CliError::validation("io", format!("cannot open {}: {e}", path.display())))?;
        Box::new(BufReader::new(file))
    };
    parse_matrix(source)
}

pub fn parse_matrix(source: impl Read) -> CliResult<TimeSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(source);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if rows.is_empty() && width.is_none() => {
                width = Some(record.len());
                continue;
            }
            Err(e) => {
                return Err(CliError::validation("csv", format!("row {}: {e}", line + 1)));
            }
        };
        let w = *width.get_or_insert(row.len());
        if row.len() != w {
            return Err(CliError::validation(
                "csv",
                format!("row {} has {} fields, expected {w}", line + 1, row.len()),
            ));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::validation("csv", "input contains no numeric rows"));
    }
    Ok(TimeSeries::from_rows(&rows)?)
}

/// Output sink: a file path, or standard output when absent or `-`.
pub fn open_output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    match path {
        Some(p) if p.as_os_str() != "-" => {
            let file = File::create(p)
                .map_err(|e| CliError::validation("io", format!("cannot create {}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(file)))
        }
        _ => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

pub fn write_matrix(values: &DMatrix<f64>, out: &mut dyn Write) -> CliResult<()> {
    let header: Vec<String> = (1..=values.ncols()).map(|i| format!("x{i}")).collect();
    let rows = values.row_iter().map(|r| r.iter().map(|v| fmt_float(*v)).collect());
    write_table(&header, rows, out)
}

pub fn write_table<I>(header: &[String], rows: I, out: &mut dyn Write) -> CliResult<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest round-trip decimal; `NaN` becomes an empty cell.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

pub fn write_json(value: &serde_json::Value, out: &mut dyn Write) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| CliError::validation("io", e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_optional() {
        let with = parse_matrix("x1,x2\n1,2\n3,4\n".as_bytes()).unwrap();
        let without = parse_matrix("1,2\n3,4\n".as_bytes()).unwrap();
        assert_eq!(with, without);
        assert_eq!(with.len(), 2);
        assert_eq!(with.dim(), 2);
    }

    #[test]
    fn ragged_and_garbage_rows_are_rejected() {
        assert!(parse_matrix("1,2\n3\n".as_bytes()).is_err());
        assert!(parse_matrix("1,2\n3,abc\n".as_bytes()).is_err());
        assert!(parse_matrix("a,b\n".as_bytes()).is_err());
        assert!(parse_matrix("1,nan\n2,3\n".as_bytes()).is_err());
    }

    #[test]
    fn written_matrices_read_back_exactly() {
        let m = DMatrix::from_row_slice(3, 2, &[0.1, -1e-300, 1.0 / 3.0, 2.5e17, -0.0, f64::MIN_POSITIVE]);
        let mut buf = Vec::new();
        write_matrix(&m, &mut buf).unwrap();
        assert!(buf.starts_with(b"x1,x2\n"));
        let back = parse_matrix(buf.as_slice()).unwrap();
        assert_eq!(back.values(), &m);
    }
}
