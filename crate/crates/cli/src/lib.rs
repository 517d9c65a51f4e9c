//! Matrix generators, input loading, benchmarking and verification for the
//! `arpivot` command line tool.

pub mod bench;
pub mod generators;
pub mod geo;
pub mod matrix;
pub mod methods;
pub mod verify;

pub use bench::{run_bench, BenchOptions, BenchmarkRecord};
pub use matrix::{Input, MatrixSpec};
pub use methods::Method;
pub use verify::{run_verify, VerifyOptions, VerifyReport};
