//! Benchmark runs: one record per (method, k, trial seed), written as CSV
//! with a JSON summary of the error per (method, k).

use std::io::{Read, Write};
use std::time::Instant;

use anyhow::{bail, Context};
use arpivot::{residual_fro, ArpConfig, MatrixOperand, Variant};
use serde::Serialize;

use crate::methods::Method;

pub const CSV_HEADER: [&str; 9] =
    ["method", "matrix", "m", "n", "k", "seed", "rel_fro_error", "wall_time_s", "effective_rank"];

/// Timing runs report the median of this many repeats.
pub const TIMING_REPEATS: usize = 3;

/// A failed decomposition is recorded with a NaN error and rank 0.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkRecord {
    pub method: Method,
    pub matrix: String,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub rel_fro_error: f64,
    pub wall_time_s: f64,
    pub effective_rank: usize,
}

impl BenchmarkRecord {
    pub fn failed(&self) -> bool {
        self.rel_fro_error.is_nan()
    }

    fn sort_key(&self) -> (Method, usize, u64) {
        (self.method, self.k, self.seed)
    }
}

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub methods: Vec<Method>,
    pub ks: Vec<usize>,
    pub seeds: Vec<u64>,
    pub zeta: usize,
    pub oversample: f64,
    /// Repeat every decomposition and report the median wall time.
    pub timing: bool,
}

impl BenchOptions {
    /// Trial `t` uses decomposition seed `master + t`.
    pub fn trial_seeds(master: u64, trials: usize) -> Vec<u64> {
        (0..trials as u64).map(|t| master.wrapping_add(t)).collect()
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

/// Runs every cell and returns the records sorted by (method, k, seed).
pub fn run_bench(a: &dyn MatrixOperand, matrix: &str, opts: &BenchOptions) -> Vec<BenchmarkRecord> {
    let (m, n) = a.shape();
    let norm = a.frobenius_norm();
    let mut records = Vec::new();
    for &method in &opts.methods {
        for &k in &opts.ks {
            for &seed in &opts.seeds {
                let cfg = ArpConfig { zeta: opts.zeta, oversample: opts.oversample, ..ArpConfig::new(k, Variant::Type1, seed) };
                let start = Instant::now();
                let outcome = method.run(a, &cfg);
                let mut times = vec![start.elapsed().as_secs_f64()];
                if opts.timing {
                    for _ in 1..TIMING_REPEATS {
                        let start = Instant::now();
                        let _ = method.run(a, &cfg);
                        times.push(start.elapsed().as_secs_f64());
                    }
                }
                let (rel_fro_error, effective_rank) = match outcome.and_then(|id| Ok((residual_fro(a, &id)?, id))) {
                    Ok((r, id)) => (if norm > 0.0 { r / norm } else { r }, id.effective_rank),
                    Err(e) => {
                        log::warn!("{method} on {matrix} with k={k}, seed={seed} failed: {e}");
                        (f64::NAN, 0)
                    }
                };
                records.push(BenchmarkRecord {
                    method,
                    matrix: matrix.to_string(),
                    m,
                    n,
                    k,
                    seed,
                    rel_fro_error,
                    wall_time_s: median(times).max(f64::MIN_POSITIVE),
                    effective_rank,
                });
            }
        }
    }
    records.sort_by_key(BenchmarkRecord::sort_key);
    records
}

pub fn write_csv<W: Write>(records: &[BenchmarkRecord], out: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    let mut err = ryu::Buffer::new();
    let mut time = ryu::Buffer::new();
    for r in records {
        w.write_record([
            r.method.name(),
            &r.matrix,
            &r.m.to_string(),
            &r.n.to_string(),
            &r.k.to_string(),
            &r.seed.to_string(),
            err.format(r.rel_fro_error),
            time.format(r.wall_time_s),
            &r.effective_rank.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> anyhow::Result<Vec<BenchmarkRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    if rdr.headers()?.iter().ne(CSV_HEADER) {
        bail!("unexpected CSV header");
    }
    rdr.records()
        .enumerate()
        .map(|(i, row)| {
            let row = row?;
            let field = |j: usize| row.get(j).with_context(|| format!("record {}: missing field {}", i + 1, CSV_HEADER[j]));
            Ok(BenchmarkRecord {
                method: field(0)?.parse()?,
                matrix: field(1)?.to_string(),
                m: field(2)?.parse()?,
                n: field(3)?.parse()?,
                k: field(4)?.parse()?,
                seed: field(5)?.parse()?,
                rel_fro_error: field(6)?.parse()?,
                wall_time_s: field(7)?.parse()?,
                effective_rank: field(8)?.parse()?,
            })
        })
        .collect()
}

/// Error statistics over the successful trials of one (method, k) cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellSummary {
    pub method: String,
    pub k: usize,
    pub trials: usize,
    pub failures: usize,
    pub mean: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub median_wall_time_s: f64,
}

pub fn summarize(records: &[BenchmarkRecord]) -> Vec<CellSummary> {
    let mut sorted: Vec<&BenchmarkRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.sort_key());
    sorted
        .chunk_by(|a, b| (a.method, a.k) == (b.method, b.k))
        .map(|cell| {
            let errors: Vec<f64> = cell.iter().filter(|r| !r.failed()).map(|r| r.rel_fro_error).collect();
            let ok = !errors.is_empty();
            CellSummary {
                method: cell[0].method.name().to_string(),
                k: cell[0].k,
                trials: cell.len(),
                failures: cell.len() - errors.len(),
                mean: ok.then(|| errors.iter().sum::<f64>() / errors.len() as f64),
                min: ok.then(|| errors.iter().copied().fold(f64::INFINITY, f64::min)),
                max: ok.then(|| errors.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
                median_wall_time_s: median(cell.iter().map(|r| r.wall_time_s).collect()),
            }
        })
        .collect()
}

pub fn write_summary<W: Write>(records: &[BenchmarkRecord], out: W) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(out, &summarize(records))?;
    Ok(())
}

/// Mean error of one (method, k) cell, if any trial succeeded.
pub fn mean_error(records: &[BenchmarkRecord], method: Method, k: usize) -> Option<f64> {
    summarize(records)
        .into_iter()
        .find(|c| c.method == method.name() && c.k == k)
        .and_then(|c| c.mean)
}
