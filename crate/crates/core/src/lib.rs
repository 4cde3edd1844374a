//! Soft-threshold Dikin walk for sampling log-concave densities restricted
//! to polytopes and spectrahedra.

pub mod barriers;
pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod rla;
pub mod seeding;
pub mod walk;

pub use error::{Error, Result};
