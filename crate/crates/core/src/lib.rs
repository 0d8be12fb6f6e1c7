//! Distribution of the difference Z = X1 - X2 of two inverse Gaussian
//! first-hitting times, as arises between consecutive molecule arrivals in
//! a flow-driven channel.
//!
//! The crate has three layers:
//!
//! * exact machinery: the IG law itself ([`ig`]), adaptive-quadrature
//!   convolution for the density and tail of Z ([`diff`]), and exact
//!   samplers ([`mc`]);
//! * the moment-matched normal inverse Gaussian surrogate ([`nig`]) with
//!   closed forms for the equal-pair and equal-ratio parameter families;
//! * the large-z tail approximation and its floor ([`diff`]), plus
//!   evaluation measures ([`metrics`]).
//!
//! Everything is deterministic: quadrature refinement is tie-broken by
//! insertion order and Monte-Carlo work is keyed to counter-based
//! substreams, so identical inputs give identical bytes regardless of
//! thread count.

// Deliberate idioms: `!(x >= 0.0)` rejects NaN alongside the sign check, and
// reference constants keep every digit of the values they were checked against.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod cli;
pub mod diff;
pub mod error;
pub mod ig;
pub mod mc;
pub mod metrics;
pub mod nig;
mod quad;
pub mod special_fn;

#[cfg(test)]
pub(crate) mod testkit;

pub use error::{Error, Result};
