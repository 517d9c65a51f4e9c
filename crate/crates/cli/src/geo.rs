//! Reader for GEO series-matrix text files.
//!
//! Lines starting with `!` are metadata. The expression table sits between
//! `!series_matrix_table_begin` and `!series_matrix_table_end`; its first row
//! holds sample identifiers and its first column probe identifiers. Fields
//! are tab separated and may be double quoted.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use arpivot::DenseMatrix;

/// Shape of the GSE10072 lung cancer data set, samples by probes.
pub const GSE10072_SHAPE: (usize, usize) = (107, 22283);

const TABLE_BEGIN: &str = "!series_matrix_table_begin";
const TABLE_END: &str = "!series_matrix_table_end";

#[derive(Debug, thiserror::Error)]
pub enum GeoError {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedTable { line: usize, expected: usize, found: usize },
}

/// Expression table, transposed to samples × probes.
#[derive(Clone, Debug)]
pub struct GeoMatrix {
    pub samples: Vec<String>,
    pub probes: Vec<String>,
    pub data: DenseMatrix,
}

fn unquote(field: &str) -> &str {
    let f = field.trim();
    f.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(f)
}

pub fn load_geo_series_matrix(path: &Path) -> Result<GeoMatrix, GeoError> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => GeoError::FileNotFound(path.to_path_buf()),
        _ => GeoError::Io(e),
    })?;

    let mut in_table = false;
    let mut finished = false;
    let mut samples: Option<Vec<String>> = None;
    let mut probes = Vec::new();
    // probes × samples, row-major
    let mut values = Vec::new();

    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.starts_with(TABLE_BEGIN) {
            in_table = true;
            continue;
        }
        if trimmed.starts_with(TABLE_END) {
            finished = in_table;
            break;
        }
        if !in_table || trimmed.starts_with('!') || trimmed.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        match &samples {
            None => {
                if fields.len() < 2 {
                    return Err(GeoError::ParseError { line: lineno, message: "header has no sample columns".into() });
                }
                samples = Some(fields[1..].iter().map(|f| unquote(f).to_string()).collect());
            }
            Some(s) => {
                if fields.len() != s.len() + 1 {
                    return Err(GeoError::RaggedTable { line: lineno, expected: s.len() + 1, found: fields.len() });
                }
                probes.push(unquote(fields[0]).to_string());
                for f in &fields[1..] {
                    let v: f64 = unquote(f).parse().map_err(|_| GeoError::ParseError {
                        line: lineno,
                        message: format!("cannot parse {f:?} as a number"),
                    })?;
                    values.push(v);
                }
            }
        }
    }

    if !finished {
        return Err(GeoError::ParseError { line: 0, message: "no complete series matrix table".into() });
    }
    let samples = samples.unwrap_or_default();
    let data = DenseMatrix::from_row_slice(probes.len(), samples.len(), &values).transpose();
    if data.shape() != GSE10072_SHAPE {
        log::warn!(
            "series matrix is {}x{} (samples x probes); the GSE10072 table is {}x{}",
            data.nrows(),
            data.ncols(),
            GSE10072_SHAPE.0,
            GSE10072_SHAPE.1
        );
    }
    Ok(GeoMatrix { samples, probes, data })
}
