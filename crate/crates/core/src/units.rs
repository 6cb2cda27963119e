//! Laboratory units to the dimensionless kick period `τ` and acceleration `η`.
//!
//! The kicking lattice is formed by counter-propagating beams, so its period is
//! `λ_G = λ/2` and the grating vector `G = 2π/λ_G`. Momenta are measured in
//! units of `ħG`. With `T₁/₂ = 2πM/(ħG²)`,
//!
//! ```text
//! τ = 2π T / T₁/₂        η = g M T / (ħ G)
//! ```
//!
//! so `τ = 2π` exactly at the half-Talbot time. The experimental kick strength
//! `k ≈ Ω²Δt/Δ` is not derived here; simulations take `k` directly.

use crate::{Error, Result, TWO_PI};

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Mass of ⁸⁷Rb (kg).
pub const RB87_MASS: f64 = 1.443_160_60e-25;
/// Standard gravity (m/s²).
pub const STANDARD_GRAVITY: f64 = 9.806_65;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UnitContext {
    /// Laser wavelength `λ` (m).
    pub wavelength: f64,
    /// Atomic mass `M` (kg).
    pub mass: f64,
    /// Kick period `T` (s).
    pub period: f64,
    /// Gravitational acceleration `g` (m/s²) along the lattice.
    pub gravity: f64,
}

impl UnitContext {
    /// ⁸⁷Rb at `λ = 780 nm`.
    pub fn rubidium87(period: f64, gravity: f64) -> Self {
        UnitContext {
            wavelength: 780e-9,
            mass: RB87_MASS,
            period,
            gravity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("wavelength", self.wavelength),
            ("mass", self.mass),
            ("period", self.period),
            ("gravity", self.gravity),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, v, "must be finite and > 0"));
            }
        }
        Ok(())
    }

    /// `G = 4π/λ` (1/m).
    pub fn grating_vector(&self) -> f64 {
        2.0 * TWO_PI / self.wavelength
    }

    /// `T₁/₂ = 2πM/(ħG²)` (s).
    pub fn half_talbot_time(&self) -> f64 {
        let g = self.grating_vector();
        TWO_PI * self.mass / (HBAR * g * g)
    }

    /// Kick period giving the dimensionless period `tau`.
    pub fn period_for_tau(&self, tau: f64) -> f64 {
        tau / TWO_PI * self.half_talbot_time()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DimensionlessParams {
    pub tau: f64,
    pub eta: f64,
    /// `T₁/₂` (s).
    pub half_talbot_time: f64,
}

pub fn convert_units(u: &UnitContext) -> Result<DimensionlessParams> {
    u.validate()?;
    let t_half = u.half_talbot_time();
    Ok(DimensionlessParams {
        tau: TWO_PI * u.period / t_half,
        eta: u.gravity * u.mass * u.period / (HBAR * u.grating_vector()),
        half_talbot_time: t_half,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rubidium_half_talbot_time() {
        // 2π·1.44316060e-25 / (1.054571817e-34 · (4π/780e-9)²)
        let u = UnitContext::rubidium87(30e-6, 9.8);
        assert_relative_eq!(u.half_talbot_time(), 3.312_744e-5, max_relative = 1e-6);
    }

    #[test]
    fn half_talbot_time_is_resonant() {
        let mut u = UnitContext::rubidium87(1.0, 9.8);
        u.period = u.half_talbot_time();
        assert_eq!(convert_units(&u).unwrap().tau, TWO_PI);
    }

    #[test]
    fn fig1_eta() {
        let mut u = UnitContext::rubidium87(1.0, 9.8);
        u.period = u.period_for_tau(5.97);
        assert_relative_eq!(u.period, 31.48e-6, max_relative = 1e-3);
        let d = convert_units(&u).unwrap();
        assert_relative_eq!(d.tau, 5.97, max_relative = 1e-14);
        assert_relative_eq!(d.eta, 0.0257, max_relative = 0.02);
    }

    #[test]
    fn rejects_non_positive() {
        assert!(convert_units(&UnitContext::rubidium87(-1.0, 9.8)).is_err());
        assert!(convert_units(&UnitContext::rubidium87(1e-5, 0.0)).is_err());
    }
}
