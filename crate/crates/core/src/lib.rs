//! Numerical toolkit for the quaternionic Calabi-Yau problem on flat HKT tori.

pub mod checks;
pub mod error;
pub mod estimates;
pub mod fiber;
pub mod field;
pub mod quat_maps;
pub mod quaternion;
pub mod report;
pub mod sampling;
pub mod solver;

pub use error::{Error, Result};
pub use fiber::{FiberAlgebra, FiberForm, HypercomplexStructure, Unit, WeightDecomposition};
pub use field::{FormField, ScalarField, TorusCalculus, TorusGrid};
pub use quaternion::Quaternion;
