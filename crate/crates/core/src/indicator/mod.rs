//! Noise detection by influence contradiction.
//!
//! A labeled node whose label disagrees with its neighborhood receives a lot
//! of diffusion influence from nodes annotated with other classes. The
//! influence contradiction score measures that, at the structure level (from
//! `T`) and at the attribute level (from `R` over the KNN affinity graph of
//! the labeled representations). A two-component 1-D Gaussian mixture over
//! the fused scores turns them into a clean-label confidence.

mod gmm;
mod ics;

pub use gmm::{clean_confidence, fit_gmm, CleanConfidence, GmmModel, DEFAULT_GMM_ITERS, VARIANCE_FLOOR};
pub use ics::{attribute_ics, class_index_sets, fuse_ics, structure_ics, ClassIndexSets, IcsLevel, IcsVector};
