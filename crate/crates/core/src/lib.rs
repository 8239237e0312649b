//! Channel-adaptive multisine waveform design for far-field wireless power
//! transfer.
//!
//! The crate models a multisine power signal through a frequency-selective
//! multipath channel into a diode rectifier, scores designs with a DC-output
//! proxy built from the second- and fourth-order moments of the received
//! signal, and provides a family of transmit designers — from a fixed
//! uniform-power baseline to a per-channel scaled matched filter and a
//! numeric optimum. A seeded Monte Carlo harness sweeps tone counts and
//! strategies over random channel realizations.

pub mod channel;
pub mod designers;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod signal;

mod accum;

pub use error::{Error, Result};
