//! Run configuration: one JSON document per run.

use std::path::{Path, PathBuf};

use qam_core::analysis::DEFAULT_WINDOW_WIDTH;
use qam_core::ensemble::EnsembleSpec;
use qam_core::map::{EpsilonSign, MapParams};
use qam_core::quantum::{QuantumParams, RecoilDistribution, SeMode, SeModel};
use qam_core::TWO_PI;
use serde::{Deserialize, Serialize};

use crate::error::RunError;

/// Ensemble size used by `--paper-scale`.
pub const PAPER_SCALE_ROTORS: usize = 10_000;
/// Kick count used by `--paper-scale`.
pub const PAPER_SCALE_KICKS: u64 = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Portrait,
    Area,
    Evolve,
    Sweep,
    Fit,
    ConvertUnits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub quantum: Option<QuantumConfig>,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub se: SeConfig,
    #[serde(default = "defaults::kicks")]
    pub kicks: u64,
    /// Histogram output stride.
    #[serde(default = "defaults::stride")]
    pub stride: u64,
    #[serde(default)]
    pub window: WindowConfig,
    #[serde(default)]
    pub area: AreaConfig,
    #[serde(default)]
    pub portrait: PortraitConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub fit: Option<FitConfig>,
    #[serde(default)]
    pub units: Option<UnitsConfig>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

/// Parameters of the kicked accelerator. The basis is sized automatically
/// unless both bounds are given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumConfig {
    pub k: f64,
    pub tau: f64,
    pub eta: f64,
    #[serde(default)]
    pub n_min: Option<i64>,
    #[serde(default)]
    pub n_max: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    #[serde(default = "defaults::rotors")]
    pub count: usize,
    #[serde(default = "defaults::beta_center")]
    pub beta_center: f64,
    #[serde(default = "defaults::beta_fwhm")]
    pub beta_fwhm: f64,
    #[serde(default)]
    pub initial_n: i64,
}

/// Spontaneous emission. In `fixed` mode give either `p_per_kick` or
/// `p_per_unit_k` (probability `p_per_unit_k · k`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeConfig {
    #[serde(default = "defaults::se_mode")]
    pub mode: SeMode,
    #[serde(default)]
    pub p_per_kick: Option<f64>,
    #[serde(default)]
    pub p_per_unit_k: Option<f64>,
    /// Detuning in rad/s.
    #[serde(default)]
    pub detuning: Option<f64>,
    /// Excited-state lifetime in s.
    #[serde(default)]
    pub lifetime: Option<f64>,
    #[serde(default)]
    pub recoil: RecoilDistribution,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    #[serde(default = "defaults::window_width")]
    pub width: usize,
    /// Normalisation kick; detected from mode-bulk separation if absent.
    #[serde(default)]
    pub t0: Option<u64>,
    #[serde(default)]
    pub fit_start: Option<u64>,
    #[serde(default)]
    pub fit_end: Option<u64>,
    /// The run stops once the survival falls below this value.
    #[serde(default = "defaults::min_survival")]
    pub min_survival: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaConfig {
    #[serde(default = "defaults::area_grid")]
    pub grid: usize,
    #[serde(default = "defaults::area_kicks")]
    pub kicks: u64,
    #[serde(default = "defaults::area_seeds")]
    pub seeds: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortraitConfig {
    /// Orbits started along the line `θ = θ*`, evenly spaced in `J`.
    #[serde(default = "defaults::portrait_seeds")]
    pub seeds: usize,
    #[serde(default = "defaults::portrait_kicks")]
    pub kicks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub family: Family,
}

/// Parameter families of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Family {
    /// Fixed `τ`, listed `(k, η)` pairs.
    FixedTau { tau: f64, points: Vec<KEta> },
    /// Fixed classical phase space: `k̃ = k|ε|` and the per-kick gravity
    /// drift `2π·eta` are held constant while `ε` varies.
    FixedClassical { k_tilde: f64, eta: f64, eps: Vec<f64> },
    /// Arbitrary points.
    Explicit { points: Vec<KTauEta> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KEta {
    pub k: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KTauEta {
    pub k: f64,
    pub tau: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// Survival CSV (`t,p`) to fit a decay rate to.
    #[serde(default)]
    pub survival: Option<PathBuf>,
    /// Rates CSV to fit the scaling law to.
    #[serde(default)]
    pub rates: Option<PathBuf>,
    #[serde(default)]
    pub t_start: Option<u64>,
    #[serde(default)]
    pub t_end: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitsConfig {
    #[serde(default = "defaults::wavelength")]
    pub wavelength: f64,
    #[serde(default = "defaults::mass")]
    pub mass: f64,
    #[serde(default = "defaults::gravity")]
    pub gravity: f64,
    /// Kick period in s.
    #[serde(default)]
    pub period: Option<f64>,
    /// Dimensionless kick period, converted to a period in s.
    #[serde(default)]
    pub tau: Option<f64>,
}

mod defaults {
    use super::*;

    pub fn kicks() -> u64 {
        60
    }
    pub fn stride() -> u64 {
        1
    }
    pub fn rotors() -> usize {
        512
    }
    pub fn beta_center() -> f64 {
        0.5
    }
    pub fn beta_fwhm() -> f64 {
        0.06
    }
    pub fn se_mode() -> SeMode {
        SeMode::Off
    }
    pub fn window_width() -> usize {
        DEFAULT_WINDOW_WIDTH
    }
    pub fn min_survival() -> f64 {
        1e-12
    }
    pub fn area_grid() -> usize {
        512
    }
    pub fn area_kicks() -> u64 {
        2_000_000
    }
    pub fn area_seeds() -> usize {
        8
    }
    pub fn portrait_seeds() -> usize {
        24
    }
    pub fn portrait_kicks() -> usize {
        400
    }
    pub fn wavelength() -> f64 {
        780e-9
    }
    pub fn mass() -> f64 {
        qam_core::units::RB87_MASS
    }
    pub fn gravity() -> f64 {
        9.8
    }
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            count: defaults::rotors(),
            beta_center: defaults::beta_center(),
            beta_fwhm: defaults::beta_fwhm(),
            initial_n: 0,
        }
    }
}

impl Default for SeConfig {
    fn default() -> Self {
        SeConfig {
            mode: SeMode::Off,
            p_per_kick: None,
            p_per_unit_k: None,
            detuning: None,
            lifetime: None,
            recoil: RecoilDistribution::Uniform,
        }
    }
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            width: defaults::window_width(),
            t0: None,
            fit_start: None,
            fit_end: None,
            min_survival: defaults::min_survival(),
        }
    }
}

impl Default for AreaConfig {
    fn default() -> Self {
        AreaConfig {
            grid: defaults::area_grid(),
            kicks: defaults::area_kicks(),
            seeds: defaults::area_seeds(),
        }
    }
}

impl Default for PortraitConfig {
    fn default() -> Self {
        PortraitConfig {
            seeds: defaults::portrait_seeds(),
            kicks: defaults::portrait_kicks(),
        }
    }
}

fn config_error(msg: impl Into<String>) -> RunError {
    RunError::Config(msg.into())
}

impl RunConfig {
    /// A configuration with every optional section left at its default.
    pub fn new(mode: Mode) -> Self {
        RunConfig {
            mode: Some(mode),
            quantum: None,
            ensemble: EnsembleConfig::default(),
            se: SeConfig::default(),
            kicks: defaults::kicks(),
            stride: defaults::stride(),
            window: WindowConfig::default(),
            area: AreaConfig::default(),
            portrait: PortraitConfig::default(),
            sweep: None,
            fit: None,
            units: None,
            seed: 0,
            out: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, RunError> {
        serde_json::from_str(text).map_err(|e| config_error(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            config_error(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_json(&text)
    }

    /// Switches to 10⁴ rotors and 5×10⁴ kicks.
    pub fn paper_scale(&mut self) {
        log::warn!(
            "paper scale: {PAPER_SCALE_ROTORS} rotors x {PAPER_SCALE_KICKS} kicks per point; expect hours of run time"
        );
        self.ensemble.count = PAPER_SCALE_ROTORS;
        self.kicks = PAPER_SCALE_KICKS;
    }

    pub fn quantum(&self) -> Result<&QuantumConfig, RunError> {
        self.quantum
            .as_ref()
            .ok_or_else(|| config_error("missing `quantum` section"))
    }

    /// Validates everything `mode` needs before any computation starts.
    pub fn validate(&self, mode: Mode) -> Result<(), RunError> {
        if let Some(m) = self.mode {
            if m != mode {
                return Err(config_error(format!(
                    "config is for mode {m:?} but {mode:?} was requested"
                )));
            }
        }
        if self.stride == 0 {
            return Err(config_error("`stride` must be >= 1"));
        }
        match mode {
            Mode::Portrait | Mode::Area => {
                self.quantum()?.map_params()?;
                self.validate_area()?;
            }
            Mode::Evolve => {
                let q = self.quantum()?;
                q.params(self.kicks)?;
                q.map_params()?;
                self.validate_evolution()?;
                self.se.model(q.k)?;
            }
            Mode::Sweep => {
                let plan = self.sweep_points()?;
                self.validate_evolution()?;
                self.validate_area()?;
                for p in &plan {
                    self.se.model(p.k)?;
                }
            }
            Mode::Fit => {
                let fit = self.fit.as_ref().ok_or_else(|| config_error("missing `fit` section"))?;
                if fit.survival.is_none() == fit.rates.is_none() {
                    return Err(config_error("`fit` needs exactly one of `survival` or `rates`"));
                }
            }
            Mode::ConvertUnits => {
                let u = self.units.as_ref().ok_or_else(|| config_error("missing `units` section"))?;
                if u.period.is_some() == u.tau.is_some() {
                    return Err(config_error("`units` needs exactly one of `period` or `tau`"));
                }
                u.context()?;
            }
        }
        Ok(())
    }

    fn validate_evolution(&self) -> Result<(), RunError> {
        self.ensemble_spec().validate()?;
        if self.kicks == 0 {
            return Err(config_error("`kicks` must be >= 1"));
        }
        if self.window.width == 0 {
            return Err(config_error("`window.width` must be >= 1"));
        }
        if !(5..=10).contains(&self.window.width) {
            log::warn!("mode window of {} states is outside 5..=10", self.window.width);
        }
        if !(self.window.min_survival >= 0.0 && self.window.min_survival < 1.0) {
            return Err(config_error("`window.min_survival` must lie in [0, 1)"));
        }
        Ok(())
    }

    fn validate_area(&self) -> Result<(), RunError> {
        if self.area.grid < qam_core::area::MIN_GRID_RESOLUTION {
            return Err(config_error("`area.grid` must be >= 64"));
        }
        if self.area.kicks < qam_core::area::MIN_KICKS {
            return Err(config_error("`area.kicks` must be >= 100000"));
        }
        if self.area.seeds == 0 || self.portrait.seeds == 0 {
            return Err(config_error("seed counts must be >= 1"));
        }
        Ok(())
    }

    pub fn ensemble_spec(&self) -> EnsembleSpec {
        EnsembleSpec {
            count: self.ensemble.count,
            beta_center: self.ensemble.beta_center,
            beta_fwhm: self.ensemble.beta_fwhm,
            initial_n: self.ensemble.initial_n,
            seed: self.seed,
        }
    }

    /// Points of the configured sweep.
    pub fn sweep_points(&self) -> Result<Vec<SweepPoint>, RunError> {
        let sweep = self.sweep.as_ref().ok_or_else(|| config_error("missing `sweep` section"))?;
        let points = sweep.family.points()?;
        if points.is_empty() {
            return Err(config_error("sweep has no points"));
        }
        Ok(points)
    }
}

impl QuantumConfig {
    pub fn params(&self, kicks: u64) -> Result<QuantumParams, RunError> {
        Ok(match (self.n_min, self.n_max) {
            (Some(lo), Some(hi)) => QuantumParams::new(self.k, self.tau, self.eta, lo, hi)?,
            (None, None) => QuantumParams::sized_for_run(self.k, self.tau, self.eta, kicks)?,
            _ => return Err(config_error("give both `n_min` and `n_max` or neither")),
        })
    }

    pub fn map_params(&self) -> Result<MapParams, RunError> {
        Ok(MapParams::from_quantum(self.k, self.tau, self.eta)?)
    }
}

impl SeConfig {
    /// The emission model for kick strength `k`.
    pub fn model(&self, k: f64) -> Result<SeModel, RunError> {
        let model = match self.mode {
            SeMode::Off => SeModel::off(),
            SeMode::Fixed => match (self.p_per_kick, self.p_per_unit_k) {
                (Some(p), None) => SeModel::fixed(p)?,
                (None, Some(c)) => SeModel::fixed(c * k)?,
                _ => {
                    return Err(config_error(
                        "fixed SE mode needs exactly one of `p_per_kick` or `p_per_unit_k`",
                    ))
                }
            },
            SeMode::Formula => match (self.detuning, self.lifetime) {
                (Some(d), Some(l)) => SeModel::from_formula(k, d, l)?,
                _ => return Err(config_error("formula SE mode needs `detuning` and `lifetime`")),
            },
        };
        Ok(model.with_recoil(self.recoil))
    }
}

impl UnitsConfig {
    pub fn context(&self) -> Result<qam_core::units::UnitContext, RunError> {
        let mut u = qam_core::units::UnitContext {
            wavelength: self.wavelength,
            mass: self.mass,
            period: 1.0,
            gravity: self.gravity,
        };
        u.period = match (self.period, self.tau) {
            (Some(t), _) => t,
            (None, Some(tau)) => u.period_for_tau(tau),
            (None, None) => return Err(config_error("`units` needs `period` or `tau`")),
        };
        u.validate()?;
        Ok(u)
    }
}

/// One parameter point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub run_id: usize,
    pub k: f64,
    pub tau: f64,
    pub eta: f64,
    /// Map used for the island area.
    #[serde(skip)]
    pub map: Option<MapParams>,
}

impl SweepPoint {
    pub fn label(&self) -> String {
        format!("p{:03}", self.run_id)
    }

    pub fn map_params(&self) -> Result<MapParams, RunError> {
        match self.map {
            Some(m) => Ok(m),
            None => Ok(MapParams::from_quantum(self.k, self.tau, self.eta)?),
        }
    }
}

impl Family {
    pub fn points(&self) -> Result<Vec<SweepPoint>, RunError> {
        let pts: Vec<SweepPoint> = match self {
            Family::FixedTau { tau, points } => points
                .iter()
                .enumerate()
                .map(|(i, p)| SweepPoint {
                    run_id: i,
                    k: p.k,
                    tau: *tau,
                    eta: p.eta,
                    map: None,
                })
                .collect(),
            Family::Explicit { points } => points
                .iter()
                .enumerate()
                .map(|(i, p)| SweepPoint {
                    run_id: i,
                    k: p.k,
                    tau: p.tau,
                    eta: p.eta,
                    map: None,
                })
                .collect(),
            Family::FixedClassical { k_tilde, eta, eps } => {
                let tau_eta = TWO_PI * eta;
                eps.iter()
                    .enumerate()
                    .map(|(i, &e)| {
                        let sign = EpsilonSign::of(e)
                            .ok_or_else(|| config_error("fixed-classical `eps` must be non-zero"))?;
                        let tau = TWO_PI + e;
                        let point_eta = tau_eta / tau;
                        Ok(SweepPoint {
                            run_id: i,
                            k: k_tilde / e.abs(),
                            tau,
                            eta: point_eta,
                            map: Some(MapParams::new(*k_tilde, sign, tau_eta, tau, point_eta)?),
                        })
                    })
                    .collect::<Result<_, RunError>>()?
            }
        };
        for p in &pts {
            p.map_params()?;
        }
        if let Family::FixedClassical { .. } = self {
            let first = pts.first().and_then(|p| p.map);
            for p in &pts {
                let (a, b) = (first.unwrap(), p.map.unwrap());
                if (a.k_tilde, a.eps_sign, a.tau_eta) != (b.k_tilde, b.eps_sign, b.tau_eta) {
                    return Err(config_error("fixed-classical points must share one map"));
                }
            }
        }
        Ok(pts)
    }
}
