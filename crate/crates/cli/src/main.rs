use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use arpivot::{residual_fro, ArpConfig, Variant};
use arpivot_cli::bench::{write_csv, write_summary};
use arpivot_cli::matrix::write_matrix;
use arpivot_cli::{run_bench, run_verify, BenchOptions, MatrixSpec, Method, VerifyOptions};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

/// Row interpolative decompositions by adaptive randomized pivoting.
///
/// All randomness derives from --seed. Generated matrices use the ChaCha8
/// stream 0 of --seed; trial t of a decomposition uses seed --seed + t.
#[derive(Parser)]
#[command(name = "arpivot", version)]
struct Cli {
    /// Use the full-size defaults for matrix kinds given without dimensions.
    #[arg(long, global = true)]
    full_scale: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// kernel[:G], dense-decay[:MxN], sparse-decay[:MxN[:NNZ]], geo:PATH or file:PATH
    #[arg(long)]
    matrix: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Nonzeros per row of the SparseStack sketches.
    #[arg(long, default_value_t = 4)]
    zeta: usize,
    /// Oversampling factor for the SkARP and SkQR sketches.
    #[arg(long, default_value_t = 2.0)]
    oversample: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose one matrix and report the selected rows and the error.
    Decompose {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: usize,
        /// ARP, ProjARP (alias OptARP), SkARP, SkQR or RPQR.
        #[arg(long, default_value = "ARP")]
        method: Method,
        /// Write the pivots and the interpolation matrix as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare methods over several ranks and trials.
    Bench {
        #[command(flatten)]
        common: Common,
        /// Comma-separated target ranks.
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<usize>,
        /// Comma-separated methods; all five by default.
        #[arg(long, value_delimiter = ',')]
        method: Vec<Method>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// Report the median wall time of three repeats.
        #[arg(long)]
        timing: bool,
        /// CSV output; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON summary; defaults to the CSV path with a .json extension.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Run the verification suite; exits nonzero if any check fails.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
        #[arg(long, hide = true)]
        corrupt_acceptance: bool,
    },
    /// Generate a matrix and write it in a format `file:` reads back.
    Gen {
        #[arg(long)]
        matrix: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct DecomposeOutput {
    method: String,
    matrix: String,
    m: usize,
    n: usize,
    k: usize,
    seed: u64,
    effective_rank: usize,
    rel_fro_error: f64,
    pinv_fallback: bool,
    pivots: Vec<usize>,
    weights: Vec<Vec<f64>>,
}

fn output(path: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Decompose { common, k, method, out } => {
            let spec = MatrixSpec::parse(&common.matrix, cli.full_scale)?;
            let input = spec.load(common.seed)?;
            let a = input.operand();
            let cfg = ArpConfig {
                zeta: common.zeta,
                oversample: common.oversample,
                ..ArpConfig::new(k, Variant::Type1, common.seed)
            };
            let id = method.run(a, &cfg)?;
            let norm = a.frobenius_norm();
            let rel = residual_fro(a, &id)? / if norm > 0.0 { norm } else { 1.0 };
            let (m, n) = a.shape();
            println!(
                "{method} on {spec} ({m}x{n}), k={k}: rank {}, relative error {rel:e}",
                id.effective_rank
            );
            if id.pinv_fallback {
                println!("selected rows were numerically rank deficient; used a truncated SVD");
            }
            if let Some(path) = out {
                let doc = DecomposeOutput {
                    method: method.name().into(),
                    matrix: spec.to_string(),
                    m,
                    n,
                    k,
                    seed: common.seed,
                    effective_rank: id.effective_rank,
                    rel_fro_error: rel,
                    pinv_fallback: id.pinv_fallback,
                    pivots: id.pivots.indices().to_vec(),
                    weights: id.weights.row_iter().map(|r| r.iter().copied().collect()).collect(),
                };
                let mut w = output(&Some(path))?;
                serde_json::to_writer(&mut w, &doc)?;
                w.flush()?;
            }
        }
        Command::Bench { common, k, method, trials, timing, out, summary } => {
            if trials == 0 {
                bail!("--trials must be positive");
            }
            let spec = MatrixSpec::parse(&common.matrix, cli.full_scale)?;
            let input = spec.load(common.seed)?;
            let opts = BenchOptions {
                methods: if method.is_empty() { Method::ALL.to_vec() } else { method },
                ks: k,
                seeds: BenchOptions::trial_seeds(common.seed, trials),
                zeta: common.zeta,
                oversample: common.oversample,
                timing,
            };
            let records = run_bench(input.operand(), &spec.to_string(), &opts);
            let mut w = output(&out)?;
            write_csv(&records, &mut w)?;
            w.flush()?;
            let summary = summary.or_else(|| out.map(|p| p.with_extension("json")));
            if let Some(path) = summary {
                let mut w = output(&Some(path))?;
                write_summary(&records, &mut w)?;
                w.flush()?;
            }
        }
        Command::Verify { seed, samples, corrupt_acceptance } => {
            let report = run_verify(&VerifyOptions { seed, corrupt_acceptance, samples });
            println!("{report}");
            if !report.all_passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Gen { matrix, seed, out } => {
            let spec = MatrixSpec::parse(&matrix, cli.full_scale)?;
            let input = spec.load(seed)?;
            let mut w = output(&out)?;
            write_matrix(&input, &mut w)?;
            w.flush()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
