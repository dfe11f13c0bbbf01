//! Principal nested submanifolds: a backward, nonlinear analogue of PCA.
//!
//! Given a noisy point cloud, the fit removes the least-variance local
//! direction first and projects every sample onto the root set of a smooth
//! bias field, then repeats with one more direction discarded. Each level is
//! projected from the previous level's output, so the fitted sets are nested.
//!
//! The crate is `no_std` + `alloc`. Enable `std` for `std::error::Error`
//! integration and `parallel` to spread per-sample work over a rayon pool;
//! results are bit-identical with and without `parallel`.
//!
//! Layout:
//!
//! - [`embeddings`]: Euclidean, S² and T² embedding sets with retraction.
//! - [`spectral`]: radius-r local covariance and its ascending eigenframe.
//! - [`field`]: weights, reference point, aggregated directions, bias sums.
//! - [`projection`]: per-point iterative projection and the nested fit.
//! - [`generators`]: seeded synthetic curves in R³ and in angle planes.
//! - [`metrics`]: silhouette, graph-geodesic variation, MSE, outlier filter.

#![cfg_attr(not(feature = "std"), no_std)]
#![warn(missing_debug_implementations)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod cloud;
pub mod embeddings;
pub mod error;
pub mod field;
pub mod generators;
pub mod linalg;
pub mod metrics;
pub mod projection;
pub mod spectral;

mod math;
mod par;

pub use cloud::PointCloud;
pub use embeddings::EmbeddingSpec;
pub use error::{Error, Result};
pub use field::{FieldEvaluation, FieldParams, LocalField};
pub use projection::{fit_nested, pca_projection, project_point, FitConfig, NestedResult};
pub use spectral::{precompute_frames, SpectralFrame};
