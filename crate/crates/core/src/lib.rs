//! Stochastic neighbor embedding for data on Riemannian manifolds.
//!
//! High-dimensional affinities come from a Brownian-motion heat-kernel
//! approximation calibrated per point to a target perplexity; the embedding
//! minimizes the KL divergence against a low-dimensional similarity model
//! (student-t, von Mises–Fisher, or Brownian) by gradient descent, with
//! VP-tree sparse affinities and a Barnes-Hut gradient for large inputs.
//!
//! The narrative guide lives in `book/`; its code snippets compile as part
//! of this workspace's test suite.

pub mod affinity;
pub mod dataset;
pub mod embedding;
pub mod error;
pub mod geometry;
pub mod neighbors;
pub mod tangent_pca;

pub use dataset::{DatasetTable, DistanceCache};
pub use error::{Error, Result};
pub use geometry::{Manifold, Point, Tangent};
