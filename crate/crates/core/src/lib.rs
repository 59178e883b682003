//! Doubly unfolded adjacency spectral embedding (DUASE) for dynamic multiplex graphs.
//!
//! A dynamic multiplex graph carries one directed adjacency matrix per
//! (layer, time) pair over a shared node set. Arranging those matrices in a
//! single `nK x nT` block matrix (layers stacked vertically, time points
//! horizontally) and taking a rank-`d` truncated SVD yields layer-specific
//! left embeddings and time-specific right embeddings that are directly
//! comparable across blocks.
//!
//! Modules:
//!
//! - [`graph`]: graph model, unfolding, block stacking, event ingestion.
//! - [`sampler`]: generative samplers for the random dot product and blockmodel variants.
//! - [`svd`]: dense and Lanczos truncated SVD.
//! - [`embedding`]: the embedding itself, alignment maps, error metrics, CLT covariances.
//! - [`clustering`]: Gaussian mixture clustering and adjusted Rand index.
//! - [`isomirror`]: block distances, classical MDS, ISOMAP iso-mirror curves.
//! - [`io`]: on-disk formats shared with the command-line tool.

pub mod clustering;
pub mod embedding;
pub mod error;
pub mod events;
pub mod graph;
pub mod io;
pub mod isomirror;
pub mod linalg;
pub mod sampler;
pub mod sparse;
pub mod svd;

pub use error::{Error, Result};
pub use graph::{DynamicMultiplexGraph, UnfoldedMatrix};
pub use embedding::{EmbeddingPair, Side};
