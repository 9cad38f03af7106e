//! Cluster-geometry diagnostics for static token-embedding spaces.
//!
//! The pipeline measures three statistics on a filtered embedding matrix:
//!
//! * **λ_r** ([`radial`]): curvature of binned self-information against
//!   embedding norm, with a nested F-test for significance;
//! * **β** ([`cohesion`]): how much closer tokens sit to their own k-means
//!   centroid than to the others;
//! * **α** ([`polarity`]): span of a cluster along its antonym-derived axis,
//!   relative to the cluster radius.
//!
//! [`diagnostics`] adds dimensionality and isotropy measures, and [`detector`]
//! turns the cluster structure into a percentile-calibrated, three-tier
//! classifier for center-drift, wrong-well and coverage-gap tokens.

pub mod clustering;
pub mod cohesion;
pub mod detector;
pub mod diagnostics;
pub mod error;
pub mod polarity;
pub mod radial;
pub mod report;
pub mod stats;
pub mod store;
pub mod synthetic;
pub mod util;

pub use error::{GeomError, Result};
pub use store::{load_store, save_store, EmbeddingStore, TokenRecord};
