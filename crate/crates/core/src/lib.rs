//! Dynamic predictive-coding networks with generalized Hierarchical Gaussian
//! Filter updates, plus the tooling to invert them from behaviour: response
//! models, MCMC and MAP parameter inference, batch and multilevel fitting,
//! parameter recovery and WAIC model comparison.
//!
//! - [`network`]: the network tuple, structural edits, sequence derivation and propagation
//! - [`ghgf`]: node-level prediction, prediction-error and posterior-update rules, presets
//! - [`response`]: belief-to-action models and their likelihoods
//! - [`inference`]: posterior sampling, diagnostics, optimisation and model comparison
//! - [`io`]: configuration, CSV ingestion, result files and SVG plots

// `!(x > 0.0)` checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod ghgf;
pub mod inference;
pub mod io;
pub mod network;
pub mod response;

pub use error::{HgfError, Result};
pub use io::InputSeries;
pub use network::{Coupling, Network, NodeAttributes, NodeKind, Trajectory, UpdateSequence};
