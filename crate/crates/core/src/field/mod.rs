//! Periodic fields on the flat torus and their spectral differential operators.

mod calculus;
mod form_field;
mod grid;
mod hessian;
mod scalar;
mod snapshot;

pub use calculus::TorusCalculus;
pub use form_field::FormField;
pub use grid::TorusGrid;
pub use hessian::{pfaffian, HessianOperator};
pub use scalar::ScalarField;
pub use snapshot::{read_snapshot, write_snapshot};
