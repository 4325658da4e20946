//! Feature extraction for higher-order tensors through a mixed-canonical
//! matrix product state (tensor train) decomposition, with a Tucker/HOOI
//! baseline and a KNN-1 / LDA benchmark harness.
//!
//! The usual flow:
//!
//! 1. stack training samples along a trailing mode
//!    ([`tensor::concat_along_new_last_mode`]),
//! 2. decompose the stack ([`mps::mps_decompose`] or
//!    [`hooi::hooi_decompose`]) and read the training features off the core,
//! 3. project test samples onto the same common factors
//!    ([`mps::mps_project_test`], [`hooi::hooi_project_test`]),
//! 4. classify ([`classify`]).
//!
//! [`bench::run_benchmark`] runs the whole loop over holdout splits.

pub mod bench;
pub mod classify;
pub mod config;
pub mod error;
pub mod format;
pub mod hooi;
pub mod ingest;
pub mod linalg;
pub mod mps;
pub mod report;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};
pub use hooi::{TuckerModel, TuckerOptions};
pub use linalg::{Matrix, SvdResult, TruncationCriterion};
pub use mps::{FeatureMatrix, MpsModel, MpsOptions};
pub use tensor::DenseTensor;
