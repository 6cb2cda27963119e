//! The pseudo-classical map of the kicked accelerator.
//!
//! With `s = sgn(ε)`, kick strength `k̃ = k|ε|` and drift `τη`, one step is
//!
//! ```text
//! θ' = θ + s·J            (mod 2π)
//! J' = J + k̃·sin θ' + s·τη
//! ```
//!
//! i.e. a free rotation with the current momentum followed by the kick (at the
//! rotated angle) and the gravity drift. This is the ordering realised by the
//! quantum one-period operator (free flight, then kick) and the unique one
//! used throughout the crate. `J` is never reduced by the step; reduction mod
//! 2π happens only in [`phase_portrait`] and the area estimator.

use alloc::vec::Vec;
use libm::{asin, cos, floor, sin};

use crate::{Error, Result, TWO_PI};

/// Sign of `ε = τ - 2π`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum EpsilonSign {
    Positive,
    Negative,
}

impl EpsilonSign {
    pub fn of(eps: f64) -> Option<Self> {
        if eps > 0.0 {
            Some(EpsilonSign::Positive)
        } else if eps < 0.0 {
            Some(EpsilonSign::Negative)
        } else {
            None
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        match self {
            EpsilonSign::Positive => 1.0,
            EpsilonSign::Negative => -1.0,
        }
    }
}

/// Parameters of the pseudo-classical map.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MapParams {
    /// `k̃ = k|ε|`.
    pub k_tilde: f64,
    pub eps_sign: EpsilonSign,
    /// Gravity drift `τη` added (times `sgn ε`) to `J` every kick.
    pub tau_eta: f64,
    /// Kick period; only used to recover `|ε| = |τ - 2π|`.
    pub tau: f64,
    pub eta: f64,
}

impl MapParams {
    pub fn new(
        k_tilde: f64,
        eps_sign: EpsilonSign,
        tau_eta: f64,
        tau: f64,
        eta: f64,
    ) -> Result<Self> {
        if !(k_tilde >= 0.0) || !k_tilde.is_finite() {
            return Err(Error::invalid("k_tilde", k_tilde, "must be finite and >= 0"));
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::invalid("tau", tau, "must be finite and > 0"));
        }
        if !tau_eta.is_finite() {
            return Err(Error::invalid("tau_eta", tau_eta, "must be finite"));
        }
        if !eta.is_finite() {
            return Err(Error::invalid("eta", eta, "must be finite"));
        }
        Ok(MapParams {
            k_tilde,
            eps_sign,
            tau_eta,
            tau,
            eta,
        })
    }

    /// Map parameters of the quantum system `(k, τ, η)`: `k̃ = k|τ-2π|`,
    /// drift `τη`, sign of `τ - 2π`.
    pub fn from_quantum(k: f64, tau: f64, eta: f64) -> Result<Self> {
        let eps = tau - TWO_PI;
        let sign = EpsilonSign::of(eps)
            .ok_or(Error::invalid("tau", tau, "tau = 2π has no pseudo-classical limit"))?;
        if !(k >= 0.0) {
            return Err(Error::invalid("k", k, "must be >= 0"));
        }
        MapParams::new(k * eps.abs(), sign, tau * eta, tau, eta)
    }

    #[inline]
    pub fn sign(&self) -> f64 {
        self.eps_sign.value()
    }

    /// `|ε|`, the effective Planck constant.
    #[inline]
    pub fn hbar_eff(&self) -> f64 {
        (self.tau - TWO_PI).abs()
    }
}

/// A point `(θ, J)` of the map's phase space.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhasePoint {
    pub theta: f64,
    pub momentum_j: f64,
}

impl PhasePoint {
    pub const fn new(theta: f64, momentum_j: f64) -> Self {
        PhasePoint { theta, momentum_j }
    }

    /// The same point with both coordinates reduced to `[0, 2π)`.
    pub fn reduced(self) -> Self {
        PhasePoint {
            theta: wrap_angle(self.theta),
            momentum_j: wrap_angle(self.momentum_j),
        }
    }
}

/// Reduce `x` to `[0, 2π)`.
#[inline]
pub fn wrap_angle(x: f64) -> f64 {
    let r = x - TWO_PI * floor(x / TWO_PI);
    if r >= TWO_PI || r < 0.0 {
        0.0
    } else {
        r
    }
}

/// Signed distance between two angles, in `(-π, π]`.
#[inline]
pub fn angle_difference(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    if d > core::f64::consts::PI {
        d - TWO_PI
    } else {
        d
    }
}

/// One step of the map. `theta` of the result is in `[0, 2π)`.
#[inline]
pub fn map_step(p: PhasePoint, m: &MapParams) -> PhasePoint {
    let s = m.sign();
    let theta = wrap_angle(p.theta + s * p.momentum_j);
    let momentum_j = p.momentum_j + m.k_tilde * sin(theta) + s * m.tau_eta;
    PhasePoint { theta, momentum_j }
}

/// Exact inverse of [`map_step`].
#[inline]
pub fn map_step_inverse(p: PhasePoint, m: &MapParams) -> PhasePoint {
    let s = m.sign();
    let momentum_j = p.momentum_j - m.k_tilde * sin(p.theta) - s * m.tau_eta;
    let theta = wrap_angle(p.theta - s * momentum_j);
    PhasePoint { theta, momentum_j }
}

/// Iterator over successive map images of a starting point (the start itself
/// is not yielded).
#[derive(Debug, Clone)]
pub struct Orbit {
    point: PhasePoint,
    params: MapParams,
}

impl Orbit {
    pub fn new(start: PhasePoint, params: MapParams) -> Self {
        Orbit {
            point: start,
            params,
        }
    }
}

impl Iterator for Orbit {
    type Item = PhasePoint;

    #[inline]
    fn next(&mut self) -> Option<PhasePoint> {
        self.point = map_step(self.point, &self.params);
        Some(self.point)
    }
}

/// A period-1 fixed point and its linear stability.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FixedPoint {
    pub point: PhasePoint,
    /// Trace of the one-step Jacobian, `2 + s·k̃·cos θ*`.
    pub trace: f64,
    /// Elliptic, `|trace| < 2`.
    pub stable: bool,
}

/// Trace of the Jacobian of [`map_step`] at a fixed point with angle `theta`.
#[inline]
pub fn jacobian_trace(theta: f64, m: &MapParams) -> f64 {
    2.0 + m.sign() * m.k_tilde * cos(theta)
}

/// Period-1 fixed point `sin θ* = -s·τη/k̃`, `J* = 0`.
///
/// Both roots `asin(x)` and `π - asin(x)` are evaluated and the one with the
/// smaller `|trace|` is returned (the elliptic one whenever it exists; ties
/// go to the smaller angle). `None` when `|τη| > k̃`.
pub fn find_period1_fixed_point(m: &MapParams) -> Option<FixedPoint> {
    if m.k_tilde == 0.0 || m.tau_eta.abs() > m.k_tilde {
        return None;
    }
    let x = (-m.sign() * m.tau_eta / m.k_tilde).clamp(-1.0, 1.0);
    let a = wrap_angle(asin(x));
    let b = wrap_angle(core::f64::consts::PI - asin(x));
    let (ta, tb) = (jacobian_trace(a, m), jacobian_trace(b, m));
    let (theta, trace) = if ta.abs() < tb.abs() || (ta.abs() == tb.abs() && a <= b) {
        (a, ta)
    } else {
        (b, tb)
    };
    Some(FixedPoint {
        point: PhasePoint::new(theta, 0.0),
        trace,
        stable: trace.abs() < 2.0,
    })
}

/// Map momentum of the quantum state `|n⟩` of a rotor with quasimomentum
/// `beta`, after `j` periods:
///
/// ```text
/// J = n|ε| + s·[π + τ(β + jη + η/2)]
/// ```
///
/// The gravity term is `jη`: the effective quasimomentum of the free flight
/// following kick `j` is `β + η(j + 1/2)`. See
/// [`momentum_to_map_coordinate_literal`] for the alternative `j·n` reading
/// of the printed relation.
pub fn momentum_to_map_coordinate(n: i64, beta: f64, j: u64, m: &MapParams) -> f64 {
    let b = beta + j as f64 * m.eta + 0.5 * m.eta;
    n as f64 * m.hbar_eff() + m.sign() * (core::f64::consts::PI + m.tau * b)
}

/// The relation with the product `j·n` in place of `j·η`, kept only for
/// comparison; it is not used by any other routine.
pub fn momentum_to_map_coordinate_literal(n: i64, beta: f64, j: u64, m: &MapParams) -> f64 {
    let b = beta + j as f64 * n as f64 + 0.5 * m.eta;
    n as f64 * m.hbar_eff() + m.sign() * (core::f64::consts::PI + m.tau * b)
}

/// One iterate of a phase portrait, `J` reduced mod 2π.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PortraitPoint {
    pub seed_id: usize,
    pub theta: f64,
    pub momentum_j: f64,
}

/// Iterates every seed `kicks` times and records each image.
pub fn phase_portrait(m: &MapParams, seeds: &[PhasePoint], kicks: usize) -> Vec<PortraitPoint> {
    let mut out = Vec::with_capacity(seeds.len() * kicks);
    for (seed_id, &seed) in seeds.iter().enumerate() {
        out.extend(Orbit::new(seed, *m).take(kicks).map(|p| PortraitPoint {
            seed_id,
            theta: p.theta,
            momentum_j: wrap_angle(p.momentum_j),
        }));
    }
    out
}
