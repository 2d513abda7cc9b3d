//! Pseudo-dimension bounds and exact solvers for data-driven hyperparameter
//! tuning of regularized least squares.
//!
//! The crate is organized bottom-up:
//!
//! - [`polynomial`]: sparse multivariate polynomials and formal rational
//!   functions.
//! - [`piecewise`]: piecewise-polynomial functions keyed by boundary sign
//!   patterns, piecewise-rational solution paths, and the semi-algebraic
//!   lifting of group lasso.
//! - [`gj`]: Goldberg–Jerrum style arithmetic programs with formal degree
//!   tracking.
//! - [`bounds`]: closed-form pseudo-dimension and sample-complexity bounds.
//! - [`solvers`]: elastic net, weighted fused lasso (via its dual) and
//!   weighted group lasso, with exact paths and brute-force oracles.
//! - [`tuning`]: bi-level losses, synthetic instance distributions, grid ERM
//!   and Monte Carlo generalization-gap curves.
//! - [`shatter`]: exact shattering search over a finite hyperparameter grid.
//!
//! ```
//! use pdimtune::bounds::{pdim_fused_lasso, DEFAULT_C};
//!
//! let report = pdim_fused_lasso(4, DEFAULT_C).unwrap();
//! assert_eq!(report.bound_value, 16.0);
//! ```

pub mod bounds;
mod error;
pub mod gj;
pub mod piecewise;
pub mod polynomial;
pub mod shatter;
pub mod solvers;
pub mod tuning;

pub use error::{Error, Result};

/// Library version embedded in emitted artifacts.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
