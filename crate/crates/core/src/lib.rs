//! Verbosity and scope normalization for retrieval functions.
//!
//! Documents are split into two length factors, scope s(d) and verbosity
//! v(d) = |d|/s(d). Term frequencies are first divided by verbosity, and the
//! usual length normalization of DP, Okapi and MRF is then applied to scope.

pub mod analysis;
pub mod axioms;
pub mod error;
pub mod eval;
pub mod index;
pub mod scope;
pub mod scoring;
pub mod tuning;

pub use error::{Error, Result};
