//! Compiles every code block of the guide in `book/` as a doc-test, so the
//! chapters cannot drift from the library (`mdbook` does not run example
//! code itself; `cargo test -p ptsb-book` does).
//!
//! One module per chapter keeps failing snippets attributable to their
//! source file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/model-and-bath.md")]
pub mod model_and_bath {}

#[doc = include_str!("../../../book/src/projection-method.md")]
pub mod projection_method {}

#[doc = include_str!("../../../book/src/exceptional-points.md")]
pub mod exceptional_points {}

#[doc = include_str!("../../../book/src/dynamics.md")]
pub mod dynamics {}

#[doc = include_str!("../../../book/src/oracle-validation.md")]
pub mod oracle_validation {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli_reference {}
