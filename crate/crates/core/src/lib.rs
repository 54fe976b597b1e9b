//! Desk-scale physics and data pipeline of single-photon extinction
//! spectroscopy of a single two-level emitter: photon wavepacket scattering in
//! the time and frequency domains, extinction-spectrum reconstruction,
//! lineshape fitting, and a synthetic measurement campaign with shot noise and
//! drift.

pub mod error;
pub mod fitting;
pub mod quantities;
pub mod scatter;
pub mod wavepacket;

pub use error::{Error, Result};
