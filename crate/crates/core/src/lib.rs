//! Uplink virtual-cell network simulation.
//!
//! The pipeline for one network realization is:
//!
//! 1. [`scenario`] draws BS/user positions and the channel tensor.
//! 2. [`clustering`] builds a size-constrained minimax-linkage hierarchy over
//!    the BSs, cuts it at `m` virtual cells and affiliates every user with its
//!    best-channel BS.
//! 3. [`intergraph`] links nearby BSs of different virtual cells and colors the
//!    graph into non-interfering groups.
//! 4. [`freqalloc`] hands each group a contiguous block of bands in proportion
//!    to the users it serves, and derives each user's transmit bands.
//! 5. [`powalloc`] runs cyclic iterative water-filling inside every virtual cell.
//! 6. [`evaluator`] decodes every cell with successive interference cancellation
//!    under full inter-cell interference and counts unsatisfied users.
//!
//! [`harness`] drives the whole thing over a Monte Carlo parameter sweep.

// index loops mirror the matrix formulas; negated comparisons reject NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod clustering;
pub mod config;
pub mod error;
pub mod evaluator;
pub mod freqalloc;
pub mod harness;
pub mod intergraph;
pub mod linalg;
pub mod powalloc;
pub mod scenario;

pub use error::{Error, Result};
pub use num_complex::Complex64;
