//! Privacy-preserving collaborative learning with random projections.
//!
//! Participants obfuscate their training data with private random matrices
//! (or a differential-privacy baseline) and a coordinator trains a classifier
//! on the anonymised pool. The crate provides the matrix machinery, the
//! obfuscation schemes, a small from-scratch neural network library, the
//! privacy verifiers and a deterministic simulator tying them together.

pub mod data;
pub mod error;
pub mod learner;
pub mod linalg;
pub mod obfuscate;
pub mod privacy;
pub mod randmat;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
