//! The guide in `book/` is plain mdbook, which cannot build listings that
//! depend on workspace crates. Each chapter is included here as a module doc
//! so `cargo test` runs its listings as doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/toy-language.md")]
pub mod toy_language {}
#[doc = include_str!("../../../book/src/endpoints.md")]
pub mod endpoints {}
#[doc = include_str!("../../../book/src/prefix-extraction.md")]
pub mod prefix_extraction {}
#[doc = include_str!("../../../book/src/read-policies.md")]
pub mod read_policies {}
#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}
#[doc = include_str!("../../../book/src/metrics.md")]
pub mod metrics {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
