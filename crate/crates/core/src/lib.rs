//! Simulation library for studying what a released classifier leaks about
//! its training data, and whether training on synthetic data instead
//! changes that.
//!
//! The pipeline: generate a categorical survey-style population with known
//! dependencies ([`surrogate`]), optionally synthesize a stand-in training
//! set with sequential CART models ([`synth`]), reduce to the strongest
//! features ([`features`]), train a classifier zoo ([`classifier`]), then
//! run a label-only attribute-inference attack against the released model
//! ([`attack`]) and score both utility and leakage ([`metrics`]).
//!
//! Everything is seeded: the same root seed reproduces every dataset, model,
//! attack decision, and report byte-for-byte.

pub mod attack;
pub mod classifier;
pub mod data;
pub mod error;
pub mod experiment;
pub mod features;
pub mod marginals;
pub mod metrics;
pub mod report;
pub mod schema;
pub mod seed;
pub mod surrogate;
pub mod synth;
pub mod tree;

pub use data::Dataset;
pub use error::{Error, Result};
pub use marginals::MarginalSet;
pub use schema::{AttributeSpec, LevelIdx, Role, Schema};
