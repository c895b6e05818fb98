//! Measuring scientific collaboration distance between countries and blocs
//! from bibliographic counts: Jaccard distances between parties, their
//! low-dimensional geometry, cross-party author flows, and simple projections.

pub mod corpus;
pub mod distance;
pub mod error;
pub mod geometry;
pub mod kflow;
pub mod openalex;
pub mod report;
pub mod scenarios;
pub mod store;

pub use error::Error;
