//! Monte Carlo estimation of the generalization capacity of cost functions
//! for the sparse mean-localization problem.
//!
//! The crate is organized around the pipeline
//! hypothesis space -> cost model -> log partition functions -> information
//! content -> generalization capacity, with exhaustive, uniform-sampling and
//! importance-sampling partition estimators and common-random-number noise
//! coupling. All partition arithmetic is done in the log domain.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod combin;
pub mod correlated;
pub mod cost;
pub mod error;
pub mod gc;
pub mod hypothesis;
pub mod partition;
pub mod rng;

pub use error::{Error, Result};
pub use hypothesis::{Hypothesis, HypothesisClass, SparseSpace, Stratum};
pub use cost::{CostKind, Covariance, ModelParams, NoiseDraw};
pub use gc::{BetaGrid, CrnScheme, EstimatorSpec, GcResult, Method};
pub use partition::{LogPartitionTriple, Normalization};
