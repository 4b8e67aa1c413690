//! Shared numerical substrate: constellations, channels, noise and RNG streams.

mod channel;
mod constellation;
mod rng;

pub use channel::{awgn, rayleigh_channel, unitary_channel, ChannelMatrix};
pub use constellation::{
    bit_errors_between, demodulate_hard, make_constellation, modulate, Constellation, Modulation,
};
pub use rng::RngStream;

/// Linear power ratio from decibels.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
