//! Stay-point trajectory reduction and fuzzy-logic map matching.
//!
//! The pipeline reads a GPS trajectory and a road network, optionally
//! collapses stationary clusters (stay points) into single representatives,
//! and matches the result to road links.

pub mod error;
pub mod eval;
pub mod fuzzy;
pub mod geo;
pub mod ingest;
pub mod staypoint;

pub use error::{Error, ErrorClass, Result};
