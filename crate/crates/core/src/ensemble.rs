//! Ensembles of beta-rotors and their momentum histograms.

use alloc::vec;
use alloc::vec::Vec;
use libm::floor;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::fft::SpectralTransform;
use crate::quantum::{
    apply_spontaneous_emission, FloquetPropagator, QuantumParams, RotorState, SeModel, Workspace,
};
use crate::rng::{kick_stream, preparation_stream};
use crate::{Error, Result};

/// `2√(2 ln 2)`: full width at half maximum of a unit-variance Gaussian.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949;

/// Initial ensemble: Gaussian quasimomenta around `beta_center`, all rotors in
/// the momentum state `initial_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnsembleSpec {
    pub count: usize,
    pub beta_center: f64,
    pub beta_fwhm: f64,
    pub initial_n: i64,
    pub seed: u64,
}

impl EnsembleSpec {
    /// `β` centred at 0.5 with FWHM 0.06, all rotors starting at `n = 0`.
    pub fn condensate(count: usize, seed: u64) -> Self {
        EnsembleSpec {
            count,
            beta_center: 0.5,
            beta_fwhm: 0.06,
            initial_n: 0,
            seed,
        }
    }

    /// A zero width is accepted and places every rotor at `beta_center`.
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::invalid("count", 0.0, "need at least one rotor"));
        }
        if !(0.0..1.0).contains(&self.beta_center) {
            return Err(Error::invalid(
                "beta_center",
                self.beta_center,
                "must lie in [0, 1)",
            ));
        }
        if !(0.0..1.0).contains(&self.beta_fwhm) {
            return Err(Error::invalid(
                "beta_fwhm",
                self.beta_fwhm,
                "must lie in [0, 1)",
            ));
        }
        Ok(())
    }
}

/// Draws `count` quasimomenta, folded into `[0, 1)`.
pub fn sample_betas(spec: &EnsembleSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let normal = Normal::new(spec.beta_center, spec.beta_fwhm / FWHM_PER_SIGMA)
        .map_err(|_| Error::invalid("beta_fwhm", spec.beta_fwhm, "invalid width"))?;
    let mut rng = preparation_stream(spec.seed);
    Ok((0..spec.count)
        .map(|_| {
            let b: f64 = normal.sample(&mut rng);
            let folded = b - floor(b);
            if folded >= 1.0 {
                0.0
            } else {
                folded
            }
        })
        .collect())
}

/// Plane waves `|initial_n⟩` with sampled quasimomenta.
pub fn sample_beta_ensemble(spec: &EnsembleSpec, q: &QuantumParams) -> Result<Vec<RotorState>> {
    sample_betas(spec)?
        .into_iter()
        .map(|beta| RotorState::plane_wave(beta, spec.initial_n, q))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Frame {
    #[default]
    Falling,
    Lab,
}

/// Ensemble-averaged momentum distribution after `kick_index` kicks.
///
/// Bin `n` collects `|c_n|²` of every rotor. The physical momentum of the bin is
/// `n + momentum_offset` in recoil units, where the offset is the mean
/// quasimomentum in the falling frame and additionally carries the gravity
/// drift `η·j` in the lab frame.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MomentumHistogram {
    pub kick_index: u64,
    pub n_min: i64,
    pub probabilities: Vec<f64>,
    pub frame: Frame,
    pub momentum_offset: f64,
}

impl MomentumHistogram {
    pub fn zeros(kick_index: u64, n_min: i64, len: usize) -> Self {
        MomentumHistogram {
            kick_index,
            n_min,
            probabilities: vec![0.0; len],
            frame: Frame::Falling,
            momentum_offset: 0.0,
        }
    }

    /// Adds `|c_n|²` of one rotor.
    pub fn accumulate(&mut self, state: &RotorState) {
        let shift = (state.n_min() - self.n_min) as usize;
        for (p, c) in self.probabilities[shift..].iter_mut().zip(state.amplitudes()) {
            *p += c.norm_sqr();
        }
    }

    /// Normalised histogram of `states`, summed in slice order.
    pub fn from_states(states: &[RotorState], kick_index: u64) -> Self {
        let n_min = states.iter().map(RotorState::n_min).min().unwrap_or(0);
        let n_max = states.iter().map(RotorState::n_max).max().unwrap_or(0);
        let mut h = MomentumHistogram::zeros(kick_index, n_min, (n_max - n_min + 1) as usize);
        for s in states {
            h.accumulate(s);
        }
        h.scale(1.0 / states.len().max(1) as f64);
        h.momentum_offset = if states.is_empty() {
            0.0
        } else {
            states.iter().map(|s| s.beta).sum::<f64>() / states.len() as f64
        };
        h
    }

    pub fn scale(&mut self, factor: f64) {
        for p in &mut self.probabilities {
            *p *= factor;
        }
    }

    pub fn n_max(&self) -> i64 {
        self.n_min + self.probabilities.len() as i64 - 1
    }

    pub fn get(&self, n: i64) -> f64 {
        if n < self.n_min || n > self.n_max() {
            0.0
        } else {
            self.probabilities[(n - self.n_min) as usize]
        }
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// `(n, probability)` over the support.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let n0 = self.n_min;
        self.probabilities
            .iter()
            .enumerate()
            .map(move |(i, &p)| (n0 + i as i64, p))
    }

    /// Relabels the momentum offset for `frame`; bins are untouched.
    pub fn in_frame(mut self, frame: Frame, eta: f64) -> Self {
        let drift = eta * self.kick_index as f64;
        match (self.frame, frame) {
            (Frame::Falling, Frame::Lab) => self.momentum_offset += drift,
            (Frame::Lab, Frame::Falling) => self.momentum_offset -= drift,
            _ => {}
        }
        self.frame = frame;
        self
    }
}

/// One period for rotor `rotor`, then a possible spontaneous emission drawn
/// from the stream keyed by `(seed, rotor, kick)`.
pub fn step_rotor<T: SpectralTransform>(
    state: &mut RotorState,
    rotor: usize,
    prop: &FloquetPropagator<T>,
    ws: &mut Workspace,
    se: &SeModel,
    seed: u64,
) -> Result<()> {
    prop.evolve_one_period(state, ws)
        .map_err(|e| e.with_rotor(rotor))?;
    if se.enabled() {
        let mut rng = kick_stream(seed, rotor, state.kick_index);
        if rng.random::<f64>() < se.p_per_kick {
            let recoil = se.recoil.sample(&mut rng);
            apply_spontaneous_emission(state, recoil).map_err(|e| e.with_rotor(rotor))?;
        }
    }
    Ok(())
}

/// True when the histogram after `t` of `kicks` kicks is emitted.
pub fn is_emitted(t: u64, kicks: u64, stride: u64) -> bool {
    t == kicks || t % stride.max(1) == 0
}

/// Evolves `states` for `kicks` periods on the current thread.
///
/// `sink` receives the histogram at `t = 0`, at every multiple of `stride` and
/// after the last kick.
pub fn evolve_ensemble<T, F>(
    states: &mut [RotorState],
    prop: &FloquetPropagator<T>,
    kicks: u64,
    se: &SeModel,
    seed: u64,
    stride: u64,
    mut sink: F,
) -> Result<()>
where
    T: SpectralTransform,
    F: FnMut(&MomentumHistogram) -> Result<()>,
{
    let mut ws = prop.workspace();
    let start = states.first().map_or(0, |s| s.kick_index);
    sink(&MomentumHistogram::from_states(states, start))?;
    for t in start + 1..=start + kicks {
        for (rotor, state) in states.iter_mut().enumerate() {
            step_rotor(state, rotor, prop, &mut ws, se, seed)?;
        }
        if is_emitted(t - start, kicks, stride) {
            sink(&MomentumHistogram::from_states(states, t))?;
        }
    }
    Ok(())
}
