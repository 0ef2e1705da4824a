//! Thermodynamic information flux, entropy production and divisibility analysis for
//! open quantum systems in Lindblad form.
//!
//! Units are natural throughout (hbar = k_B = 1); temperatures enter only as inverse
//! temperatures `beta`, with `beta = 0` standing for infinite temperature. Entropies and
//! information are in nats.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod divisibility;
pub mod error;
pub mod lindblad;
pub mod measures;
pub mod models;
pub mod qcore;
pub mod thermoflux;

pub use error::{Error, Result};
