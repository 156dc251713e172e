//! Keeps the book honest: every `rust` code fence in `book/src/` is
//! included here as module documentation, so `cargo test` compiles and
//! runs the snippets as doctests. mdbook itself cannot run examples with
//! dependencies; this crate is the workaround.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/geometry.md")]
pub mod geometry {}

#[doc = include_str!("../../../book/src/affinities.md")]
pub mod affinities {}

#[doc = include_str!("../../../book/src/neighbors.md")]
pub mod neighbors {}

#[doc = include_str!("../../../book/src/embedding.md")]
pub mod embedding {}

#[doc = include_str!("../../../book/src/baseline.md")]
pub mod baseline {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
