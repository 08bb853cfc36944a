//! Extreme value laws for skew-product dynamical systems.
//!
//! * [`maps`]: the systems (expanding and intermittent bases, circle
//!   extensions, Gouëzel and Viana skew products) on exact coordinates.
//! * [`orbit`]: seeded, thread-count independent orbit ensembles.
//! * [`evt`]: block maxima of `−log d(p, p₀)` and their Gumbel limit.
//! * [`hypotheses`]: return-set measures, correlation decay, exponent thresholds.
//! * [`config`] and [`run`]: configuration files and result emission.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod evt;
pub mod hypotheses;
pub mod maps;
pub mod orbit;
pub mod run;

pub use error::{Error, Result};
