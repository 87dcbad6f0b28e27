//! Pathwise local times for sampled càdlàg paths.
//!
//! Three constructions are provided side by side: the occupation density
//! with respect to `[x]^c`, discrete level-crossing times along partitions,
//! and normalised interval-crossing counts of the Skorokhod (play operator)
//! regularisation. The exact discrete Tanaka–Meyer identities that tie them
//! together are exposed as residual checks, and [`lab`] runs Monte Carlo
//! experiments against the classical Tanaka reference.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod crossing;
pub mod dc;
pub mod error;
pub mod field;
pub mod follmer;
pub mod lab;
pub mod path;
pub mod quad;
pub mod skorokhod;

pub use dc::{DcFunction, FunctionDescriptor, Mollifier, SecondDerivativeMeasure};
pub use error::{Error, Result};
pub use field::{FieldKind, LevelFunction, LocalTimeField, Sampling};
pub use path::{LevelGrid, PartitionDescriptor, PartitionScheme, SampledCadlagPath};
pub use skorokhod::SkorokhodSolution;
