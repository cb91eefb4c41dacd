//! Stability of surfaces with constant Gauss–Kronecker curvature in space forms.

pub mod cli;
pub mod discretize;
pub mod error;
pub mod jet;
pub mod spaceform;
pub mod sparse;
pub mod stability;
pub mod surface;
pub mod topology;
pub mod variations;

pub use error::{Error, Result};
