//! Floquet evolution of a single beta-rotor.
//!
//! A rotor with quasimomentum `β` is a wavefunction over integer momenta `n`.
//! One period is the free flight between kick `j` and kick `j + 1`,
//!
//! ```text
//! c_n ← exp(-i (τ/2)(n + β + η(j + 1/2))²) c_n
//! ```
//!
//! (gravity enters only through the drifting quasimomentum), followed by the
//! kick `exp(-ik cos θ)`, applied on the angle grid.

use alloc::vec;
use alloc::vec::Vec;
use libm::{cbrt, ceil, cos, floor, sin};
use num_complex::Complex64;
use rand::Rng;

use crate::fft::{Radix2Fft, SpectralTransform};
use crate::map::{wrap_angle, MapParams};
use crate::{Error, Result, TWO_PI};

/// Largest amplitude tolerated on the outermost basis states.
pub const OVERFLOW_AMPLITUDE: f64 = 1e-12;

/// Amplitudes at or below this modulus outside the occupied range are set to
/// zero, so that the kick can run on a smaller grid around that range.
pub const FLUSH_AMPLITUDE: f64 = 1e-15;

/// Front speed of the chaotic tails, in momentum states per kick and per
/// unit kick strength, used by [`QuantumParams::sized_for_run`].
pub const TAIL_SPEED_PER_K: f64 = 0.2;

/// Parameters of the quantum kicked accelerator and its momentum basis.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuantumParams {
    pub k: f64,
    pub tau: f64,
    pub eta: f64,
    pub n_min: i64,
    pub n_max: i64,
}

impl QuantumParams {
    pub fn new(k: f64, tau: f64, eta: f64, n_min: i64, n_max: i64) -> Result<Self> {
        let q = QuantumParams {
            k,
            tau,
            eta,
            n_min,
            n_max,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k >= 0.0) || !self.k.is_finite() {
            return Err(Error::invalid("k", self.k, "must be finite and >= 0"));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::invalid("tau", self.tau, "must be finite and > 0"));
        }
        if !self.eta.is_finite() {
            return Err(Error::invalid("eta", self.eta, "must be finite"));
        }
        if self.n_max <= self.n_min {
            return Err(Error::invalid(
                "n_max",
                self.n_max as f64,
                "must exceed n_min",
            ));
        }
        Ok(())
    }

    /// Parameters with a basis large enough for `kicks` periods starting from
    /// the plane wave `n = 0`.
    ///
    /// The basis covers the accelerator-mode displacement `(τη/|ε|)·kicks`,
    /// the chaotic tails spreading at [`TAIL_SPEED_PER_K`]`·k` states per kick
    /// (`k` per kick at exact resonance) and the single-kick spectral width
    /// `k + 10 k^{1/3}`; its length is rounded up to a power of two on the side
    /// the mode moves to.
    pub fn sized_for_run(k: f64, tau: f64, eta: f64, kicks: u64) -> Result<Self> {
        let eps = tau - TWO_PI;
        let kicks_f = kicks as f64;
        let spectral = kick_spectral_width(k) as i64;
        let spread = if eps.abs() < 1e-9 {
            ceil(k * kicks_f) as i64
        } else {
            ceil(TAIL_SPEED_PER_K * k * kicks_f) as i64
        };
        let drift = if eps != 0.0 {
            -eps.signum() * tau * eta / eps.abs() * kicks_f
        } else {
            0.0
        };
        let lo = (floor(drift) as i64).min(-spread) - spectral;
        let hi = (ceil(drift) as i64).max(spread) + spectral;
        let len = ((hi - lo + 1) as usize).next_power_of_two() as i64;
        let (n_min, n_max) = if drift < 0.0 {
            (hi - len + 1, hi)
        } else {
            (lo, lo + len - 1)
        };
        QuantumParams::new(k, tau, eta, n_min, n_max)
    }

    /// `ε = τ - 2π`.
    pub fn eps(&self) -> f64 {
        self.tau - TWO_PI
    }

    /// `|ε|`.
    pub fn hbar_eff(&self) -> f64 {
        self.eps().abs()
    }

    pub fn basis_len(&self) -> usize {
        (self.n_max - self.n_min + 1) as usize
    }

    /// Angle-grid size: the basis length rounded up to a power of two.
    pub fn grid_len(&self) -> usize {
        self.basis_len().next_power_of_two()
    }

    pub fn map_params(&self) -> Result<MapParams> {
        MapParams::from_quantum(self.k, self.tau, self.eta)
    }

    /// Mode displacement per kick in the falling frame, `-sgn(ε)·τη/|ε|`.
    pub fn mode_drift_per_kick(&self) -> f64 {
        let eps = self.eps();
        if eps == 0.0 {
            0.0
        } else {
            -eps.signum() * self.tau * self.eta / eps.abs()
        }
    }
}

/// Phase `(τ/2)(n + β + η(j + 1/2))²` picked up by `|n⟩` during the free
/// flight after kick `j`.
pub fn free_propagation_phase(n: i64, beta: f64, j: u64, q: &QuantumParams) -> f64 {
    let p = n as f64 + beta + q.eta * (j as f64 + 0.5);
    0.5 * q.tau * p * p
}

/// A single beta-rotor.
#[derive(Debug, Clone, PartialEq)]
pub struct RotorState {
    pub beta: f64,
    n_min: i64,
    amplitudes: Vec<Complex64>,
    pub kick_index: u64,
}

impl RotorState {
    /// The momentum eigenstate `|n⟩` in the basis of `q`.
    pub fn plane_wave(beta: f64, n: i64, q: &QuantumParams) -> Result<Self> {
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::invalid("beta", beta, "must lie in [0, 1)"));
        }
        if n < q.n_min || n > q.n_max {
            return Err(Error::invalid("n", n as f64, "outside the momentum basis"));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); q.basis_len()];
        amplitudes[(n - q.n_min) as usize] = Complex64::new(1.0, 0.0);
        Ok(RotorState {
            beta,
            n_min: q.n_min,
            amplitudes,
            kick_index: 0,
        })
    }

    pub fn from_amplitudes(beta: f64, n_min: i64, amplitudes: Vec<Complex64>) -> Result<Self> {
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::invalid("beta", beta, "must lie in [0, 1)"));
        }
        if amplitudes.is_empty() {
            return Err(Error::invalid("amplitudes", 0.0, "empty basis"));
        }
        Ok(RotorState {
            beta,
            n_min,
            amplitudes,
            kick_index: 0,
        })
    }

    pub fn n_min(&self) -> i64 {
        self.n_min
    }

    pub fn n_max(&self) -> i64 {
        self.n_min + self.amplitudes.len() as i64 - 1
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn amplitude(&self, n: i64) -> Complex64 {
        if n < self.n_min || n > self.n_max() {
            Complex64::new(0.0, 0.0)
        } else {
            self.amplitudes[(n - self.n_min) as usize]
        }
    }

    pub fn probability(&self, n: i64) -> f64 {
        self.amplitude(n).norm_sqr()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `Σ n^power |c_n|²`.
    pub fn momentum_moment(&self, power: i32) -> f64 {
        self.probabilities()
            .map(|(n, p)| libm::pow(n as f64, power as f64) * p)
            .sum()
    }

    /// `(n, |c_n|²)` over the basis.
    pub fn probabilities(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let n0 = self.n_min;
        self.amplitudes
            .iter()
            .enumerate()
            .map(move |(i, c)| (n0 + i as i64, c.norm_sqr()))
    }
}

/// Buffers reused across periods by one worker.
#[derive(Debug, Clone)]
pub struct Workspace {
    grid: Vec<Complex64>,
    scratch: Vec<Complex64>,
    powers: Vec<Complex64>,
}

const PHASE_BLOCK: usize = 64;

/// The kick `exp(-ik cos θ)` on an angle grid of fixed size.
#[derive(Debug, Clone)]
pub struct KickOperator<T> {
    strength: f64,
    transform: T,
    /// `exp(-ik cos θ_l) / M`; the `1/M` completes the inverse transform.
    factors: Vec<Complex64>,
    threshold: f64,
}

impl<T: SpectralTransform> KickOperator<T> {
    pub fn new(strength: f64, transform: T) -> Result<Self> {
        let m = transform.len();
        if m == 0 || !m.is_power_of_two() {
            return Err(Error::invalid("grid", m as f64, "must be a power of two"));
        }
        let scale = 1.0 / m as f64;
        let factors = (0..m)
            .map(|l| {
                let theta = TWO_PI * l as f64 / m as f64;
                let a = -strength * cos(theta);
                Complex64::new(cos(a) * scale, sin(a) * scale)
            })
            .collect();
        Ok(KickOperator {
            strength,
            transform,
            factors,
            threshold: OVERFLOW_AMPLITUDE,
        })
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn grid_len(&self) -> usize {
        self.transform.len()
    }

    pub fn transform(&self) -> &T {
        &self.transform
    }

    pub fn workspace(&self) -> Workspace {
        Workspace {
            grid: vec![Complex64::new(0.0, 0.0); self.transform.len()],
            scratch: vec![Complex64::new(0.0, 0.0); self.transform.scratch_len()],
            powers: vec![Complex64::new(0.0, 0.0); PHASE_BLOCK],
        }
    }

    /// Kicks `amplitudes` in place. Amplitudes pushed past either end of the
    /// basis (or left on its outermost states) above the overflow threshold
    /// raise [`Error::BasisOverflow`] and leave `amplitudes` untouched.
    pub fn apply(&self, amplitudes: &mut [Complex64], kick: u64, ws: &mut Workspace) -> Result<()> {
        let len = amplitudes.len();
        let grid = &mut ws.grid[..self.transform.len()];
        assert!(len <= grid.len(), "basis larger than the angle grid");
        grid[..len].copy_from_slice(amplitudes);
        grid[len..].fill(Complex64::new(0.0, 0.0));
        self.transform.backward(grid, &mut ws.scratch);
        for (g, f) in grid.iter_mut().zip(&self.factors) {
            *g *= f;
        }
        self.transform.forward(grid, &mut ws.scratch);

        let edge = grid[len..]
            .iter()
            .chain([&grid[0], &grid[len - 1]])
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        if edge >= self.threshold {
            return Err(Error::BasisOverflow {
                rotor: None,
                kick,
                amplitude: edge,
            });
        }
        amplitudes.copy_from_slice(&grid[..len]);
        Ok(())
    }
}

/// Kicks a state once, using the built-in transform.
pub fn apply_kick(state: &mut RotorState, k: f64) -> Result<()> {
    let grid = state.amplitudes.len().next_power_of_two();
    let kick = KickOperator::new(k, Radix2Fft::new(grid)?)?;
    let mut ws = kick.workspace();
    kick.apply(&mut state.amplitudes, state.kick_index, &mut ws)
}

/// Single-kick momentum spread `k + 10k^{1/3}` plus a safety margin.
pub fn kick_spectral_width(k: f64) -> usize {
    ceil(k + 10.0 * cbrt(k)) as usize + 32
}

/// Index range `[a, b]` of amplitudes above [`FLUSH_AMPLITUDE`]; everything
/// outside it is zeroed. `None` for a state with no such amplitude.
fn occupied_range(amplitudes: &mut [Complex64]) -> Option<(usize, usize)> {
    let above = |c: &Complex64| c.norm_sqr() > FLUSH_AMPLITUDE * FLUSH_AMPLITUDE;
    let a = amplitudes.iter().position(above)?;
    let b = amplitudes.iter().rposition(above)?;
    amplitudes[..a].fill(Complex64::new(0.0, 0.0));
    amplitudes[b + 1..].fill(Complex64::new(0.0, 0.0));
    Some((a, b))
}

/// One-period Floquet operator: free flight, then kick.
///
/// With several transforms the kick runs on the smallest grid that holds the
/// occupied momentum range padded by [`kick_spectral_width`] on each side.
#[derive(Debug, Clone)]
pub struct FloquetPropagator<T> {
    params: QuantumParams,
    /// Ascending grid sizes; the last covers the basis.
    kicks: Vec<KickOperator<T>>,
    pad: usize,
    /// `(-1)^n exp(-i ε n²/2)`, the β-independent part of the free phase.
    quadratic: Vec<Complex64>,
}

impl<T: SpectralTransform> FloquetPropagator<T> {
    pub fn new(params: QuantumParams, transform: T) -> Result<Self> {
        Self::with_transforms(params, vec![transform])
    }

    /// Propagator that picks among `transforms` by occupied range. The largest
    /// must cover the basis.
    pub fn with_transforms(params: QuantumParams, mut transforms: Vec<T>) -> Result<Self> {
        params.validate()?;
        transforms.sort_by_key(|t| t.len());
        let largest = transforms.last().map_or(0, |t| t.len());
        if largest < params.basis_len() {
            return Err(Error::invalid(
                "grid",
                largest as f64,
                "angle grid smaller than the momentum basis",
            ));
        }
        let eps = params.eps();
        let quadratic = (params.n_min..=params.n_max)
            .map(|n| {
                let nf = n as f64;
                let a = -0.5 * eps * nf * nf;
                let c = Complex64::new(cos(a), sin(a));
                if n.rem_euclid(2) == 1 {
                    -c
                } else {
                    c
                }
            })
            .collect();
        Ok(FloquetPropagator {
            params,
            kicks: transforms
                .into_iter()
                .map(|t| KickOperator::new(params.k, t))
                .collect::<Result<_>>()?,
            pad: kick_spectral_width(params.k),
            quadratic,
        })
    }

    pub fn params(&self) -> &QuantumParams {
        &self.params
    }

    pub fn workspace(&self) -> Workspace {
        let largest = self.kicks.last().expect("at least one transform");
        let mut ws = largest.workspace();
        let scratch = self.kicks.iter().map(|k| k.transform.scratch_len()).max().unwrap_or(0);
        ws.scratch.resize(scratch, Complex64::new(0.0, 0.0));
        ws
    }

    /// Grid sizes available to the kick.
    pub fn grid_lens(&self) -> impl Iterator<Item = usize> + '_ {
        self.kicks.iter().map(|k| k.grid_len())
    }

    /// Free flight after kick `state.kick_index`, up to a global phase.
    ///
    /// `(τ/2)(n+b)² = πn² + (ε/2)n² + τbn + const`; the linear part
    /// `exp(-i x n)`, `x = τb mod 2π`, is built blockwise from exact anchors so
    /// that its modulus stays 1 to rounding.
    pub fn apply_free(&self, state: &mut RotorState, ws: &mut Workspace) {
        let len = state.amplitudes.len();
        self.apply_free_range(state, 0, len, ws);
    }

    fn apply_free_range(&self, state: &mut RotorState, start: usize, end: usize, ws: &mut Workspace) {
        debug_assert_eq!(state.n_min, self.params.n_min);
        let b = state.beta + self.params.eta * (state.kick_index as f64 + 0.5);
        let x = wrap_angle(self.params.tau * b);
        for (r, p) in ws.powers.iter_mut().enumerate() {
            let a = -x * r as f64;
            *p = Complex64::new(cos(a), sin(a));
        }
        for (block, (amps, quad)) in state.amplitudes[start..end]
            .chunks_mut(PHASE_BLOCK)
            .zip(self.quadratic[start..end].chunks(PHASE_BLOCK))
            .enumerate()
        {
            let n0 = state.n_min + (start + block * PHASE_BLOCK) as i64;
            let a = -wrap_angle(x * n0 as f64);
            let anchor = Complex64::new(cos(a), sin(a));
            for ((c, q), p) in amps.iter_mut().zip(quad).zip(&ws.powers) {
                *c *= q * (anchor * p);
            }
        }
    }

    /// Kicks `state` on the full basis.
    pub fn apply_kick(&self, state: &mut RotorState, ws: &mut Workspace) -> Result<()> {
        let kick = self.kicks.last().expect("at least one transform");
        kick.apply(&mut state.amplitudes, state.kick_index + 1, ws)
    }

    /// Advances `state` by one period and increments its kick index.
    pub fn evolve_one_period(&self, state: &mut RotorState, ws: &mut Workspace) -> Result<()> {
        let len = state.amplitudes.len();
        let Some((a, b)) = occupied_range(&mut state.amplitudes) else {
            state.kick_index += 1;
            return Ok(());
        };
        self.apply_free_range(state, a, b + 1, ws);
        let need = b - a + 1 + 2 * self.pad;
        let kick = self
            .kicks
            .iter()
            .find(|k| k.grid_len() >= need && k.grid_len() < len)
            .unwrap_or_else(|| self.kicks.last().expect("at least one transform"));
        let m = kick.grid_len();
        if m >= len {
            kick.apply(&mut state.amplitudes, state.kick_index + 1, ws)?;
        } else {
            let start = a.saturating_sub(self.pad).min(len - m);
            kick.apply(&mut state.amplitudes[start..start + m], state.kick_index + 1, ws)?;
        }
        state.kick_index += 1;
        Ok(())
    }
}

/// Rigid momentum recoil `δ`: `β ← frac(β + δ)` and the integer carry shifts
/// the amplitudes along the basis.
pub fn apply_spontaneous_emission(state: &mut RotorState, recoil: f64) -> Result<()> {
    let total = state.beta + recoil;
    let carry = floor(total);
    let mut beta = total - carry;
    if beta >= 1.0 {
        beta = 0.0;
    }
    let shift = carry as i64;
    let len = state.amplitudes.len();
    if shift != 0 {
        let s = shift.unsigned_abs() as usize;
        let lost = if s >= len {
            &state.amplitudes[..]
        } else if shift > 0 {
            &state.amplitudes[len - s..]
        } else {
            &state.amplitudes[..s]
        };
        let edge = lost.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if edge >= OVERFLOW_AMPLITUDE {
            return Err(Error::BasisOverflow {
                rotor: None,
                kick: state.kick_index,
                amplitude: edge,
            });
        }
        let zero = Complex64::new(0.0, 0.0);
        if s >= len {
            state.amplitudes.fill(zero);
        } else if shift > 0 {
            state.amplitudes.rotate_right(s);
            state.amplitudes[..s].fill(zero);
        } else {
            state.amplitudes.rotate_left(s);
            state.amplitudes[len - s..].fill(zero);
        }
    }
    state.beta = beta;
    Ok(())
}

/// Spontaneous emission probability per atom and kick, `k / (τ_SE Δ)`, with
/// `Δ` in rad/s and `τ_SE` in s.
pub fn se_probability_from_formula(k: f64, detuning: f64, lifetime: f64) -> Result<f64> {
    if !(detuning > 0.0) {
        return Err(Error::invalid("detuning", detuning, "must be > 0"));
    }
    if !(lifetime > 0.0) {
        return Err(Error::invalid("lifetime", lifetime, "must be > 0"));
    }
    if !(k >= 0.0) {
        return Err(Error::invalid("k", k, "must be >= 0"));
    }
    Ok(k / (lifetime * detuning))
}

/// Per-kick emission probability per unit kick strength used by the
/// simulations with spontaneous emission.
pub const SE_PROBABILITY_PER_UNIT_K: f64 = 5e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SeMode {
    Off,
    /// `p = k / (τ_SE Δ)`.
    Formula,
    /// `p` given directly.
    Fixed,
}

/// Distribution of the recoil `δ` (recoil units) of one emission event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum RecoilDistribution {
    /// Uniform on `[-1, 1]`.
    #[default]
    Uniform,
    /// Density `3(1 + δ²)/8` on `[-1, 1]`.
    Dipole,
}

impl RecoilDistribution {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            RecoilDistribution::Uniform => 2.0 * rng.random::<f64>() - 1.0,
            RecoilDistribution::Dipole => loop {
                let d = 2.0 * rng.random::<f64>() - 1.0;
                if 2.0 * rng.random::<f64>() < 1.0 + d * d {
                    break d;
                }
            },
        }
    }
}

/// Spontaneous emission channel.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeModel {
    pub mode: SeMode,
    pub p_per_kick: f64,
    /// Detuning `Δ` in rad/s (formula mode).
    pub detuning: Option<f64>,
    /// Excited-state lifetime `τ_SE` in s (formula mode).
    pub lifetime: Option<f64>,
    pub recoil: RecoilDistribution,
}

impl SeModel {
    pub fn off() -> Self {
        SeModel {
            mode: SeMode::Off,
            p_per_kick: 0.0,
            detuning: None,
            lifetime: None,
            recoil: RecoilDistribution::Uniform,
        }
    }

    pub fn fixed(p_per_kick: f64) -> Result<Self> {
        let m = SeModel {
            mode: SeMode::Fixed,
            p_per_kick,
            ..SeModel::off()
        };
        m.validate()?;
        Ok(m)
    }

    /// `p = 5×10⁻³ k`.
    pub fn proportional_to_kick(k: f64) -> Result<Self> {
        SeModel::fixed(SE_PROBABILITY_PER_UNIT_K * k)
    }

    pub fn from_formula(k: f64, detuning: f64, lifetime: f64) -> Result<Self> {
        let m = SeModel {
            mode: SeMode::Formula,
            p_per_kick: se_probability_from_formula(k, detuning, lifetime)?,
            detuning: Some(detuning),
            lifetime: Some(lifetime),
            recoil: RecoilDistribution::Uniform,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_recoil(mut self, recoil: RecoilDistribution) -> Self {
        self.recoil = recoil;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.p_per_kick) {
            return Err(Error::invalid(
                "p_per_kick",
                self.p_per_kick,
                "must lie in [0, 1)",
            ));
        }
        Ok(())
    }

    pub fn enabled(&self) -> bool {
        self.mode != SeMode::Off && self.p_per_kick > 0.0
    }

    /// Probability actually applied per kick.
    pub fn probability(&self) -> f64 {
        if self.enabled() {
            self.p_per_kick
        } else {
            0.0
        }
    }
}
