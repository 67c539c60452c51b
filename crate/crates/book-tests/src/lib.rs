//! Guide snippets compiled as doc-tests.
//!
//! Each chapter of `book/src` becomes the docs of an empty module here, so
//! `cargo test -p hkt-book --doc` runs every code block in the guide.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/fiber-forms.md")]
pub mod fiber_forms {}
#[doc = include_str!("../../../book/src/quaternionic-maps.md")]
pub mod quaternionic_maps {}
#[doc = include_str!("../../../book/src/torus-fields.md")]
pub mod torus_fields {}
#[doc = include_str!("../../../book/src/solver.md")]
pub mod solver {}
#[doc = include_str!("../../../book/src/estimates.md")]
pub mod estimates {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
