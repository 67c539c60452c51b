//! Pointwise exterior algebra of a flat hypercomplex space.

mod form;
mod structure;
mod weights;

pub use form::*;
pub use structure::{FiberAlgebra, HypercomplexStructure, Unit};
pub(crate) use weights::require_bidegree;
pub use weights::WeightDecomposition;
