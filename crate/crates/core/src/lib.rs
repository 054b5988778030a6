//! Online trip-destination clustering and prediction.
//!
//! The pipeline runs per vehicle: trip destinations are clustered online
//! (two centroid-compressed DBSCAN variants, with offline DBSCAN as the
//! oracle), the next destination is predicted with a sequential
//! Dirichlet-categorical model or a sleeping-experts leader, and the whole
//! online pipeline is scored against the offline oracle with a squared
//! Hellinger regret split into distributional and state-space parts.

pub mod cli;
pub mod error;
pub mod eval;
pub mod geo;
pub mod ingest;
pub mod predict;
pub mod stream_cluster;

pub use error::{Error, Result};
pub use geo::{haversine_distance, GeoPoint};
pub use stream_cluster::{ClusterEvent, ClusterLabel, ClusterParams};
