//! CSV reading and writing; the path `-` means standard output.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{BenchError, Result};

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> BenchError + '_ {
    move |source| BenchError::Csv { path: path.to_path_buf(), source }
}

/// Writes `rows` with a header row.
pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let sink: Box<dyn Write> = if path == Path::new("-") {
        Box::new(io::stdout().lock())
    } else {
        Box::new(File::create(path).map_err(|source| BenchError::Io { path: path.to_path_buf(), source })?)
    };
    let mut w = csv::Writer::from_writer(sink);
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| BenchError::Io { path: path.to_path_buf(), source })
}

pub fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(csv_err(path))
}

/// Header row of a CSV file.
pub fn read_header(path: &Path) -> Result<Vec<String>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    Ok(r.headers().map_err(csv_err(path))?.iter().map(str::to_string).collect())
}
