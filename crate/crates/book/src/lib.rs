//! Compiles and runs the code listings of the guide in `book/src` as
//! doc-tests, one module per chapter so failures point at their chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/polynomials.md")]
pub mod polynomials {}
#[doc = include_str!("../../../book/src/solvers.md")]
pub mod solvers {}
#[doc = include_str!("../../../book/src/paths.md")]
pub mod paths {}
#[doc = include_str!("../../../book/src/bounds.md")]
pub mod bounds {}
#[doc = include_str!("../../../book/src/programs.md")]
pub mod programs {}
#[doc = include_str!("../../../book/src/tuning.md")]
pub mod tuning {}
#[doc = include_str!("../../../book/src/shattering.md")]
pub mod shattering {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
