//! Exact computational laboratory for the stationary measure of the
//! multispecies totally asymmetric simple exclusion process on a ring.
//!
//! Four independent routes to the same exact stationary weights, cross-
//! verified down to the integer:
//!
//! - [`tensor`] — the tensor-product operator ansatz: stationary weights as
//!   traces of site-ordered operator products over queue-counter states.
//! - [`pushing`] — string weights by the pushing procedure and the recursive
//!   ancestor sum over staged rightward pushes.
//! - [`multiline`] — uniform multiline sampling, line-by-line labeling, and
//!   brute-force ancestor counting.
//! - [`oracle`] — the sector Markov generator solved exactly with
//!   fraction-free elimination.
//!
//! All weights are arbitrary-precision integers and all probabilities exact
//! rationals; nothing is floating point. The [`algebra`] module verifies the
//! operator relations behind the ansatz (quadratic algebra, hat operators,
//! and the telescoping stationarity identity).
//!
//! With the default `parallel` feature, enumeration, sampling, and trace
//! evaluation distribute over threads via rayon; disabling it leaves the
//! same code paths running sequentially.

pub mod algebra;
pub mod config;
mod error;
mod exec;
pub mod multiline;
pub mod oracle;
pub mod pushing;
pub mod tensor;

pub use config::{sectors_with_all_classes, Configuration, Counts, Sector};
pub use error::{Error, Result};
