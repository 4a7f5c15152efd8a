//! Sparse graph-indexed quadratic forms and their limit laws.
//!
//! The statistic of interest is `T_n = Σ_{(u,v) ∈ E} X_u X_v` for i.i.d. sparse
//! non-negative integer weights `X_v`. This crate provides:
//!
//! - [`graph`]: graph families, canonical degree-sorted labeling, motif counts.
//! - [`graphon`]: empirical graphons, degree functions, cut-norm and L1 distances.
//! - [`quadform`]: simulation, exact enumeration and moments of `T_n` and its truncation.
//! - [`limit`]: the limiting law `Q1 + Q2 + Q3` for step-graphon specifications,
//!   together with block-level Poisson stochastic integrals.
//! - [`lab`]: end-to-end experiments comparing finite graphs with their predicted limits.

pub mod error;
pub mod graph;
pub mod graphon;
pub mod lab;
pub mod limit;
pub mod quadform;
pub mod rng;

pub use error::{Error, Result};
pub use graph::{Graph, GraphFamily, Motif};
pub use graphon::{BlockKernel, CutNormMode, CutNormResult, StepFunction, StepGraphon};
pub use lab::{ExperimentReport, TvDistance};
pub use limit::LimitSpec;
pub use quadform::{Pmf, SimConfig, SparseLaw};
