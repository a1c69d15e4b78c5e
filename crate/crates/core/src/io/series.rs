//! `series.csv`: one header row with the diagnostics column names, then one
//! row per sample, every value in `{:.16e}` (17 significant digits).

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::diagnostics::{DiagnosticsSample, DiagnosticsSeries, COLUMNS};
use crate::error::{Error, Result};

pub fn write_series_to<W: Write>(out: W, series: &DiagnosticsSeries) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for s in series.samples() {
        w.write_record(s.to_row().iter().map(|v| format!("{v:.16e}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_series(path: impl AsRef<Path>, series: &DiagnosticsSeries) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_series_to(file, series).map_err(|e| Error::format(path, e.to_string()))
}

pub fn parse_series(text: &str, path: &Path) -> Result<DiagnosticsSeries> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| Error::format(path, e.to_string()))?;
    if header.iter().ne(COLUMNS.iter().copied()) {
        return Err(Error::format(
            path,
            format!("header must be `{}`", COLUMNS.join(",")),
        ));
    }
    let mut series = DiagnosticsSeries::new();
    for (k, rec) in r.records().enumerate() {
        let row_no = k + 2;
        let rec = rec.map_err(|e| Error::format(path, format!("row {row_no}: {e}")))?;
        if rec.len() != COLUMNS.len() {
            return Err(Error::format(path, format!("row {row_no}: expected {} fields", COLUMNS.len())));
        }
        let mut row = [0.0; 10];
        for (slot, (field, name)) in row.iter_mut().zip(rec.iter().zip(COLUMNS)) {
            *slot = field
                .trim()
                .parse()
                .map_err(|_| Error::format(path, format!("row {row_no}, column {name}: `{field}` is not a number")))?;
        }
        series
            .push(DiagnosticsSample::from_row(row))
            .map_err(|e| Error::format(path, format!("row {row_no}: {e}")))?;
    }
    Ok(series)
}

pub fn read_series(path: impl AsRef<Path>) -> Result<DiagnosticsSeries> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_series(&text, path)
}
