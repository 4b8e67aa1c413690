//! Link-level simulation of MIMO and OFDM systems whose receivers are Rydberg
//! atomic sensors.
//!
//! An atomic receiver reports only the envelope `|h^T x + v + r|` of the field
//! it sees. This crate provides the envelope signal model, phase-rotated symbol
//! spreading (PRSS) which turns two envelope measurements back into a linear
//! observation, the envelope-domain and linear detectors, the capacity
//! expressions that compare the two architectures, and a Monte Carlo harness
//! with a small CLI for BER and capacity sweeps.
//!
//! Module map:
//!
//! * [`sigcore`]: constellations with Gray labels, Rayleigh channels, AWGN,
//!   reproducible RNG substreams.
//! * [`frontend`]: envelope observation, reference injection, PRSS spreading and
//!   de-spreading.
//! * [`detect`]: MLD, EMF, ES-LS and EM-GS on envelopes; MLD, ZF, LMMSE and MF on
//!   the de-spread linear model.
//! * [`capacity`]: closed-form capacity and mutual-information expressions plus a
//!   Monte Carlo MI estimator.
//! * [`ofdm`]: circulant channel, PRSS-OFDM transmitter and FFT receiver.
//! * [`harness`]: experiment configs, parallel sweeps, CSV output and the CLI.

pub mod capacity;
pub mod detect;
pub mod error;
pub mod frontend;
pub mod harness;
pub mod ofdm;
pub mod sigcore;

pub use error::{Error, Result};

/// Complex baseband sample.
pub type C64 = num_complex::Complex64;
