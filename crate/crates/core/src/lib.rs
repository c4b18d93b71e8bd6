//! Label-noise robust node classification on graphs.
//!
//! The pipeline detects noisy node labels by measuring how much diffusion
//! influence each labeled node receives from nodes annotated with *other*
//! classes (the influence contradiction score, ICS), fits a two-component
//! Gaussian mixture over those scores to obtain a per-node clean-label
//! confidence, softly corrects labels with diffusion-weighted neighbor
//! predictions, pseudo-labels the unlabeled nodes, and trains a two-layer
//! graph convolutional network on the resulting soft targets.
//!
//! Module map:
//!
//! | module | contents |
//! |--------|----------|
//! | [`graph`] | graph storage, normalized adjacency, KNN affinity graphs |
//! | [`diffusion`] | personalized PageRank diffusion matrices |
//! | [`indicator`] | influence contradiction scores, 1-D GMM, clean confidence |
//! | [`encoder`] | two-layer GCN with analytic gradients and Adam |
//! | [`refinery`] | neighbor aggregation, label correction, pseudo-labels |
//! | [`harness`] | datasets, SBM generator, noise, splits, training loop, metrics |
//! | [`cli`] | the `icgnn` command line |

pub mod cli;
pub mod diffusion;
pub mod encoder;
mod error;
pub mod graph;
pub mod harness;
pub mod indicator;
mod linalg;
pub mod refinery;
pub mod rng;

pub use error::{Error, Result};
