//! Simulation core for dynamical tunneling out of quantum accelerator modes.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every numerical
//! kernel of the toolkit:
//!
//! * [`map`]: the pseudo-classical (epsilon-classical) map of the kicked
//!   accelerator, its period-1 fixed points and phase portraits.
//! * [`area`]: the grid-fill estimator of the regular island area.
//! * [`quantum`]: exact Floquet evolution of a single beta-rotor, including the
//!   spontaneous-emission recoil channel.
//! * [`ensemble`]: Gaussian beta ensembles, counter-keyed random streams and
//!   ensemble momentum histograms.
//! * [`analysis`]: mode tracking, survival probabilities and the exponential
//!   decay and scaling fits.
//! * [`units`]: laboratory to dimensionless parameter conversion.
//!
//! The spectral transform used by the kick operator is abstracted by
//! [`fft::SpectralTransform`]; [`fft::Radix2Fft`] is the built-in
//! implementation. Hosted builds can plug in a faster backend.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod area;
pub mod ensemble;
pub mod error;
pub mod fft;
pub mod map;
pub mod quantum;
pub mod rng;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// 2π.
pub const TWO_PI: f64 = core::f64::consts::TAU;
