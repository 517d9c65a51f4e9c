//! Row interpolative decompositions by adaptive randomized pivoting.
//!
//! A rangefinder built from a [`SparseStack`] sketch feeds a block rejection
//! sampler for volume-sampled row pivots; the interpolation weights come from
//! one of three formulas selected by [`Variant`].

pub mod arp;
pub mod error;
pub mod linalg;
pub mod operand;
pub mod oracle;
pub mod samplers;
pub mod sketch;
pub mod sparse;

#[cfg(test)]
mod testutil;

pub use arp::{arp_decompose, residual_fro, ArpConfig, InterpolativeDecomposition, PivotSampler, Variant};
pub use error::{Error, Result};
pub use linalg::{orth, DenseMatrix, HouseholderQr};
pub use operand::MatrixOperand;
pub use samplers::{rejection_rpqr, rpqr_sequential, PivotSet, RejectionConfig};
pub use sketch::SparseStack;
pub use sparse::SparseMatrix;
