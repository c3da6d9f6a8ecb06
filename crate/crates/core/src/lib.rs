//! Clustering of probability distributions under the 2-Wasserstein and
//! expectation distances.

pub mod barycenter;
pub mod clustering;
pub mod distances;
pub mod distributions;
pub mod error;
pub mod fixtures;
pub mod ingest;
pub mod metrics;
pub mod pipeline;
pub mod psd;
pub mod report;

pub use error::{Error, Result};
