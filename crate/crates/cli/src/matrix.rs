//! Matrix descriptors accepted by `--matrix` and loading of the inputs they
//! describe.
//!
//! | descriptor | matrix |
//! |---|---|
//! | `kernel[:G]` | inverse-distance kernel on two `G × G` grids |
//! | `dense-decay[:MxN]` | `diag(i⁻²)` times a dense Gaussian |
//! | `sparse-decay[:MxN[:NNZ]]` | same with `NNZ` Gaussian entries per column |
//! | `geo:PATH` | GEO series matrix, samples × probes |
//! | `file:PATH` | dense CSV, or MatrixMarket coordinate when the file says so |
//!
//! Omitted sizes take the desk-scale defaults, or the full-scale ones when
//! requested.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use arpivot::{DenseMatrix, MatrixOperand, SparseMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::generators::{gen_decay_dense, gen_decay_sparse, gen_kernel};
use crate::geo::load_geo_series_matrix;

pub const DESK_KERNEL_GRID: usize = 40;
pub const FULL_KERNEL_GRID: usize = 100;
pub const DESK_DENSE: (usize, usize) = (2000, 2000);
pub const FULL_DENSE: (usize, usize) = (10_000, 10_000);
pub const DESK_SPARSE: (usize, usize) = (100_000, 2000);
pub const FULL_SPARSE: (usize, usize) = (1_000_000, 10_000);
pub const DEFAULT_NNZ_PER_COL: usize = 30;

#[derive(Clone, Debug, PartialEq)]
pub enum MatrixSpec {
    Kernel { grid: usize },
    DenseDecay { m: usize, n: usize },
    SparseDecay { m: usize, n: usize, nnz_per_col: usize },
    Geo { path: PathBuf },
    File { path: PathBuf },
}

fn parse_dims(s: &str) -> anyhow::Result<(usize, usize)> {
    let (m, n) = s.split_once(['x', 'X']).with_context(|| format!("expected MxN, got {s:?}"))?;
    let m: usize = m.parse().with_context(|| format!("bad row count {m:?}"))?;
    let n: usize = n.parse().with_context(|| format!("bad column count {n:?}"))?;
    if m == 0 || n == 0 {
        bail!("matrix dimensions must be positive");
    }
    Ok((m, n))
}

impl MatrixSpec {
    /// Parses a descriptor; `full_scale` picks the defaults for omitted sizes.
    pub fn parse(s: &str, full_scale: bool) -> anyhow::Result<Self> {
        let (kind, rest) = match s.split_once(':') {
            Some((k, r)) => (k, Some(r)),
            None => (s, None),
        };
        let spec = match kind {
            "kernel" => {
                let grid = match rest {
                    Some(g) => g.parse().with_context(|| format!("bad grid side {g:?}"))?,
                    None if full_scale => FULL_KERNEL_GRID,
                    None => DESK_KERNEL_GRID,
                };
                if grid == 0 {
                    bail!("grid side must be positive");
                }
                MatrixSpec::Kernel { grid }
            }
            "dense-decay" => {
                let (m, n) = match rest {
                    Some(d) => parse_dims(d)?,
                    None if full_scale => FULL_DENSE,
                    None => DESK_DENSE,
                };
                MatrixSpec::DenseDecay { m, n }
            }
            "sparse-decay" => {
                let mut parts = rest.map(|r| r.splitn(2, ':'));
                let dims = parts.as_mut().and_then(|p| p.next());
                let nnz = parts.as_mut().and_then(|p| p.next());
                let (m, n) = match dims {
                    Some(d) => parse_dims(d)?,
                    None if full_scale => FULL_SPARSE,
                    None => DESK_SPARSE,
                };
                let nnz_per_col = match nnz {
                    Some(z) => z.parse().with_context(|| format!("bad nonzero count {z:?}"))?,
                    None => DEFAULT_NNZ_PER_COL.min(m),
                };
                MatrixSpec::SparseDecay { m, n, nnz_per_col }
            }
            "geo" | "file" => {
                let path = PathBuf::from(rest.filter(|p| !p.is_empty()).context("missing path")?);
                if kind == "geo" {
                    MatrixSpec::Geo { path }
                } else {
                    MatrixSpec::File { path }
                }
            }
            other => bail!("unknown matrix kind {other:?}"),
        };
        Ok(spec)
    }

    /// Builds the matrix. Generators draw from `ChaCha8Rng` seeded with
    /// `seed` on stream 0.
    pub fn load(&self, seed: u64) -> anyhow::Result<Input> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0);
        Ok(match self {
            MatrixSpec::Kernel { grid } => Input::Dense(gen_kernel(*grid)),
            MatrixSpec::DenseDecay { m, n } => Input::Dense(gen_decay_dense(*m, *n, &mut rng)),
            MatrixSpec::SparseDecay { m, n, nnz_per_col } => {
                Input::Sparse(gen_decay_sparse(*m, *n, *nnz_per_col, &mut rng)?)
            }
            MatrixSpec::Geo { path } => Input::Dense(load_geo_series_matrix(path)?.data),
            MatrixSpec::File { path } => read_matrix_file(path)?,
        })
    }
}

impl fmt::Display for MatrixSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixSpec::Kernel { grid } => write!(f, "kernel:{grid}"),
            MatrixSpec::DenseDecay { m, n } => write!(f, "dense-decay:{m}x{n}"),
            MatrixSpec::SparseDecay { m, n, nnz_per_col } => write!(f, "sparse-decay:{m}x{n}:{nnz_per_col}"),
            MatrixSpec::Geo { path } => write!(f, "geo:{}", path.display()),
            MatrixSpec::File { path } => write!(f, "file:{}", path.display()),
        }
    }
}

impl FromStr for MatrixSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        Self::parse(s, false)
    }
}

pub enum Input {
    Dense(DenseMatrix),
    Sparse(SparseMatrix),
}

impl Input {
    pub fn operand(&self) -> &dyn MatrixOperand {
        match self {
            Input::Dense(a) => a,
            Input::Sparse(a) => a,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.operand().shape()
    }
}

const MM_HEADER: &str = "%%MatrixMarket matrix coordinate real general";

/// Reads a dense comma-separated matrix, one row per line, or a MatrixMarket
/// coordinate file. Lines starting with `#` are ignored in the CSV form.
pub fn read_matrix_file(path: &Path) -> anyhow::Result<Input> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.starts_with("%%MatrixMarket") {
        return read_matrix_market(&text).map(Input::Sparse);
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("line {}: not a list of numbers", i + 1))?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                bail!("line {}: expected {} values, found {}", i + 1, first.len(), row.len());
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{} holds no matrix entries", path.display());
    }
    let n = rows[0].len();
    Ok(Input::Dense(DenseMatrix::from_row_iterator(rows.len(), n, rows.into_iter().flatten())))
}

fn read_matrix_market(text: &str) -> anyhow::Result<SparseMatrix> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with('%') && !l.trim().is_empty());
    let (_, size) = lines.next().context("missing size line")?;
    let dims: Vec<usize> = size.split_whitespace().map(str::parse).collect::<Result<_, _>>().context("bad size line")?;
    let [m, n, nnz] = dims[..] else { bail!("size line must hold three integers") };
    let mut triplets = Vec::with_capacity(nnz);
    for (i, line) in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        let [r, c, v] = f[..] else { bail!("line {}: expected `row col value`", i + 1) };
        let r: usize = r.parse().with_context(|| format!("line {}", i + 1))?;
        let c: usize = c.parse().with_context(|| format!("line {}", i + 1))?;
        if r == 0 || c == 0 {
            bail!("line {}: indices are 1-based", i + 1);
        }
        triplets.push((r - 1, c - 1, v.parse::<f64>().with_context(|| format!("line {}", i + 1))?));
    }
    if triplets.len() != nnz {
        bail!("expected {nnz} entries, found {}", triplets.len());
    }
    Ok(SparseMatrix::from_triplets(m, n, &triplets)?)
}

/// Writes `input` in the format [`read_matrix_file`] reads back exactly.
pub fn write_matrix<W: Write>(input: &Input, out: &mut W) -> anyhow::Result<()> {
    let mut buf = ryu::Buffer::new();
    match input {
        Input::Dense(a) => {
            for row in a.row_iter() {
                let line: Vec<String> = row.iter().map(|v| buf.format(*v).to_string()).collect();
                writeln!(out, "{}", line.join(","))?;
            }
        }
        Input::Sparse(a) => {
            writeln!(out, "{MM_HEADER}")?;
            writeln!(out, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
            for j in 0..a.ncols() {
                let (rows, vals) = a.column(j);
                for (&i, &v) in rows.iter().zip(vals) {
                    writeln!(out, "{} {} {}", i + 1, j + 1, buf.format(v))?;
                }
            }
        }
    }
    Ok(())
}
