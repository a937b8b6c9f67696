//! Dual-pipeline simulator for degradation under alpha-stable noise at
//! matched empirical SNR: a digital link measured by bit error rate and an
//! image classifier measured by accuracy drop, sharing one noise core and
//! one SNR definition so the two curves are directly comparable.

pub mod comm;
pub mod experiment;
pub mod fmt;
pub mod noise;
pub mod pnm;
pub mod rng;
pub mod snr;
pub mod stable;

pub mod classifier;

pub use rng::Seed;
pub use snr::{ImageF, NoiseField, SnrDb};
pub use stable::StableParams;
