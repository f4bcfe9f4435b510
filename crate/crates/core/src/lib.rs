//! Spatial-consistency statistics for sub-THz channels.
//!
//! The analysis direction turns directional PDP sweeps into per-location
//! path loss, delay spread and angular spread, fits close-in path-loss models
//! and estimates spatial autocorrelation of those parameters. The simulation
//! direction runs the fitted statistics forward, generating spatially
//! consistent large-scale parameters along a receiver route.

// `!(x > 0.0)` style checks are deliberate: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod error;
pub mod field;
pub mod io;
pub mod pathloss;
pub mod pdp;
pub mod route;
pub mod spatial;
pub mod synth;

pub use error::{Error, Result};
