//! Correlation-filter tracking with a particle filter that samples from the response map.

pub mod config;
pub mod corrfilter;
pub mod error;
pub mod eval;
pub mod features;
pub mod grid;
pub mod likelihood;
pub mod pfilter;
pub mod sequences;
pub mod suites;

pub use error::{Error, Result};
pub use grid::{BoundingBox, GridPoint, ImageRaster, ResponseMap};
