//! CSV ingestion: a two-column "x,y" file becomes a sorted sample.

use std::path::Path;

use penlogit::BinarySample;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("empty file: no data rows")]
    EmptyFile,
    #[error("line 1: expected header 'x,y', found '{0}'")]
    BadHeader(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {message}")]
    Domain { line: usize, message: String },
}

/// Reads "x,y" rows with x in [0, 1] and y in {0, 1}. Rows are sorted by x;
/// the sort is stable, so rows with equal x keep file order.
pub fn ingest_csv(path: &Path) -> Result<BinarySample, IngestError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, line)) if line.trim().is_empty() => continue,
            Some((_, line)) => break line,
            None => return Err(IngestError::EmptyFile),
        }
    };
    if header.trim() != "x,y" {
        return Err(IngestError::BadHeader(header.trim().to_string()));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (index, line) in lines {
        let line_no = index + 1;
        let row = line.trim();
        if row.is_empty() {
            continue;
        }
        let mut fields = row.split(',');
        let (Some(x_text), Some(y_text), None) = (fields.next(), fields.next(), fields.next())
        else {
            return Err(IngestError::Parse {
                line: line_no,
                message: format!("expected two comma-separated fields, found '{row}'"),
            });
        };
        let x: f64 = x_text.trim().parse().map_err(|_| IngestError::Parse {
            line: line_no,
            message: format!("cannot parse x value '{}'", x_text.trim()),
        })?;
        let y: f64 = y_text.trim().parse().map_err(|_| IngestError::Parse {
            line: line_no,
            message: format!("cannot parse y value '{}'", y_text.trim()),
        })?;
        if !(0.0..=1.0).contains(&x) {
            return Err(IngestError::Domain {
                line: line_no,
                message: format!("x = {x} outside [0, 1]"),
            });
        }
        if y != 0.0 && y != 1.0 {
            return Err(IngestError::Domain {
                line: line_no,
                message: format!("y = {y} is not 0 or 1"),
            });
        }
        xs.push(x);
        ys.push(y as u8);
    }
    if xs.is_empty() {
        return Err(IngestError::EmptyFile);
    }
    Ok(BinarySample::new(xs, ys).expect("rows validated"))
}
