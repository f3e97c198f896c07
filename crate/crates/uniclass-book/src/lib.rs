//! mdbook cannot run a book's code fences as tests, so every chapter is
//! included here as a module doc and `cargo test --doc` does the work. One
//! module per chapter keeps a failing snippet attributable to its file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/distributions.md")]
pub mod distributions {}

#[doc = include_str!("../../../book/src/collisions.md")]
pub mod collisions {}

#[doc = include_str!("../../../book/src/estimating-l2.md")]
pub mod estimating_l2 {}

#[doc = include_str!("../../../book/src/testing-uniformity.md")]
pub mod testing_uniformity {}

#[doc = include_str!("../../../book/src/lower-bounds.md")]
pub mod lower_bounds {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
