//! Pipelines behind the CLI modes.

use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use qam_core::analysis::{
    fit_decay_rate, fit_scaling, DecayFitResult, ModePrediction, ModeTracker, ScalingFitResult,
    SurvivalSeries,
};
use qam_core::area::{estimate_island_area, estimate_island_area_with_grid, AreaEstimate};
use qam_core::ensemble::{sample_beta_ensemble, Frame};
use qam_core::map::{find_period1_fixed_point, phase_portrait, FixedPoint, MapParams, PhasePoint};
use qam_core::quantum::{FloquetPropagator, QuantumParams, SeModel};
use qam_core::units::convert_units;
use qam_core::TWO_PI;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifacts::{
    create_dir, histogram_table, read_json, read_rates, read_survival, write_histogram, write_json,
    write_occupancy, write_portrait, write_rates, write_survival, RateRow, Table,
};
use crate::backend::transform_ladder;
use crate::config::{Mode, RunConfig, SweepPoint};
use crate::error::RunError;
use crate::parallel::{evolve_parallel, Flow};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    mode: Mode,
    complete: bool,
    seed: u64,
    code_version: &'static str,
    wall_time_s: f64,
    artifacts: &'a [String],
    error: Option<String>,
    config: &'a RunConfig,
}

/// Runs `mode` on a dedicated pool of `workers` threads.
pub fn run_with_workers(cfg: &RunConfig, mode: Mode, out: &Path, workers: usize) -> Result<Vec<String>, RunError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| RunError::Config(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| run(cfg, mode, out))
}

/// Validates `cfg`, executes `mode` writing into `out`, and records a
/// manifest. Returns the artifact file names.
pub fn run(cfg: &RunConfig, mode: Mode, out: &Path) -> Result<Vec<String>, RunError> {
    cfg.validate(mode)?;
    create_dir(out)?;
    let start = Instant::now();
    let manifest = |artifacts: &[String], error: Option<String>, complete: bool| {
        write_json(
            &out.join("manifest.json"),
            &Manifest {
                mode,
                complete,
                seed: cfg.seed,
                code_version: CODE_VERSION,
                wall_time_s: start.elapsed().as_secs_f64(),
                artifacts,
                error,
                config: cfg,
            },
        )
    };
    manifest(&[], None, false)?;
    let result = match mode {
        Mode::Portrait => run_portrait(cfg, out),
        Mode::Area => run_area(cfg, out),
        Mode::Evolve => run_evolve(cfg, out),
        Mode::Sweep => run_sweep(cfg, out),
        Mode::Fit => run_fit(cfg, out),
        Mode::ConvertUnits => run_convert_units(cfg, out),
    };
    match &result {
        Ok(files) => manifest(files, None, true)?,
        Err(e) => manifest(&[], Some(e.to_string()), false)?,
    }
    result
}

/// Island geometry written next to portraits and area runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AreaReport {
    pub map: MapParams,
    pub hbar_eff: f64,
    pub fixed_point: Option<FixedPoint>,
    pub estimate: AreaEstimate,
}

fn area_report(cfg: &RunConfig, m: MapParams) -> Result<(AreaReport, qam_core::area::OccupancyGrid), RunError> {
    let (estimate, grid) = estimate_island_area_with_grid(&m, cfg.area.grid, cfg.area.kicks, cfg.area.seeds)?;
    if !estimate.converged {
        warn!(
            "island area not converged: {} at N={} vs {} at 2N",
            estimate.area, estimate.grid_resolution, estimate.refined_area
        );
    }
    Ok((
        AreaReport {
            map: m,
            hbar_eff: m.hbar_eff(),
            fixed_point: find_period1_fixed_point(&m),
            estimate,
        },
        grid,
    ))
}

fn run_portrait(cfg: &RunConfig, out: &Path) -> Result<Vec<String>, RunError> {
    let m = cfg.quantum()?.map_params()?;
    let theta0 = find_period1_fixed_point(&m).map_or(0.0, |fp| fp.point.theta);
    let n = cfg.portrait.seeds;
    let seeds: Vec<PhasePoint> = (0..n)
        .map(|i| PhasePoint::new(theta0, TWO_PI * (i as f64 + 0.5) / n as f64))
        .collect();
    let mut points = phase_portrait(&m, &seeds, cfg.portrait.kicks);
    for p in &mut points {
        p.momentum_j = p.momentum_j.rem_euclid(TWO_PI);
    }
    write_portrait(&out.join("portrait.csv"), &points)?;
    let (report, _) = area_report(cfg, m)?;
    write_json(&out.join("area.json"), &report)?;
    Ok(vec!["portrait.csv".into(), "area.json".into()])
}

fn run_area(cfg: &RunConfig, out: &Path) -> Result<Vec<String>, RunError> {
    let (report, grid) = area_report(cfg, cfg.quantum()?.map_params()?)?;
    write_occupancy(&out.join("occupancy.csv"), &grid)?;
    write_json(&out.join("area.json"), &report)?;
    Ok(vec!["occupancy.csv".into(), "area.json".into()])
}

/// Run parameters recorded next to every evolution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolveMetadata {
    pub quantum: QuantumParams,
    pub eps: f64,
    pub hbar_eff: f64,
    pub ensemble: qam_core::ensemble::EnsembleSpec,
    pub se: SeModel,
    pub kicks: u64,
    pub kicks_done: u64,
    pub stride: u64,
    pub seed: u64,
    pub frame: Frame,
    /// Momentum of bin `n` in the lab frame is `n + beta_center + eta·t`.
    pub beta_center: f64,
    pub code_version: String,
}

/// `decay.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub t0: u64,
    pub gamma: f64,
    pub gamma_err: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub fit_window: [u64; 2],
    pub points: usize,
    pub dropped: usize,
}

impl From<(u64, DecayFitResult)> for DecayReport {
    fn from((t0, f): (u64, DecayFitResult)) -> Self {
        DecayReport {
            t0,
            gamma: f.gamma,
            gamma_err: f.gamma_err,
            intercept: f.intercept,
            r_squared: f.r_squared,
            fit_window: [f.t_start, f.t_end],
            points: f.points,
            dropped: f.dropped,
        }
    }
}

/// Result of evolving one parameter point.
#[derive(Debug, Clone)]
pub struct Evolution {
    pub metadata: EvolveMetadata,
    pub tracker: Option<ModeTracker>,
    pub survival: Result<SurvivalSeries, qam_core::Error>,
    pub decay: Result<DecayReport, qam_core::Error>,
}

/// Evolves one ensemble, tracks the mode and fits its decay. Histograms are
/// written to `histograms` at the configured stride.
pub fn evolve_point(
    cfg: &RunConfig,
    q: QuantumParams,
    se: SeModel,
    mut histograms: Option<&mut Table>,
) -> Result<Evolution, RunError> {
    let spec = cfg.ensemble_spec();
    let prop = FloquetPropagator::with_transforms(q, transform_ladder(q.grid_len()))?;
    let mut states = sample_beta_ensemble(&spec, &q)?;
    let mut tracker = match ModePrediction::new(&q, spec.beta_center, spec.initial_n) {
        Ok(p) => Some(ModeTracker::new(p, cfg.window.width)?),
        Err(e) => {
            warn!("no mode to track: {e}");
            None
        }
    };
    let kicks = cfg.kicks;
    let stride = cfg.stride.max(1);
    let fixed_t0 = cfg.window.t0;
    let min_survival = cfg.window.min_survival;

    let done = evolve_parallel(&mut states, &prop, kicks, &se, cfg.seed, |h| {
        let t = h.kick_index;
        let mut flow = Flow::Continue;
        if let Some(tr) = tracker.as_mut() {
            let p = tr.observe(h)?;
            let t0 = fixed_t0.or(tr.separation_time());
            if let Some(norm) = t0.and_then(|t0| tr.probability_at(t0)) {
                if norm > 0.0 && p < min_survival * norm {
                    info!("survival below {min_survival:e} at kick {t}; stopping");
                    flow = Flow::Stop;
                }
            }
        }
        if let Some(table) = histograms.as_deref_mut() {
            if t % stride == 0 || t == kicks || flow == Flow::Stop {
                write_histogram(table, h)?;
            }
        }
        Ok::<_, RunError>(flow)
    })?;

    let survival = match &tracker {
        Some(tr) => match fixed_t0.or(tr.separation_time()) {
            Some(t0) => Ok(tr.survival_from(t0)),
            None => Err(qam_core::Error::ModeNotSeparated),
        },
        None => Err(qam_core::Error::NoStableFixedPoint),
    };
    let decay = survival.clone().and_then(|s| {
        let start = cfg.window.fit_start.unwrap_or(s.t0);
        let end = cfg.window.fit_end.unwrap_or(s.last_kick().unwrap_or(s.t0));
        fit_decay_rate(&s, start, end).map(|f| DecayReport::from((s.t0, f)))
    });
    Ok(Evolution {
        metadata: EvolveMetadata {
            quantum: q,
            eps: q.eps(),
            hbar_eff: q.hbar_eff(),
            ensemble: spec,
            se,
            kicks,
            kicks_done: done,
            stride,
            seed: cfg.seed,
            frame: Frame::Falling,
            beta_center: spec.beta_center,
            code_version: CODE_VERSION.into(),
        },
        tracker,
        survival,
        decay,
    })
}

fn write_evolution(out: &Path, ev: &Evolution, files: &mut Vec<String>) -> Result<(), RunError> {
    write_json(&out.join("metadata.json"), &ev.metadata)?;
    files.push("metadata.json".into());
    if let Ok(s) = &ev.survival {
        write_survival(&out.join("survival.csv"), s)?;
        files.push("survival.csv".into());
    }
    if let Ok(d) = &ev.decay {
        write_json(&out.join("decay.json"), d)?;
        files.push("decay.json".into());
    }
    Ok(())
}

fn run_evolve(cfg: &RunConfig, out: &Path) -> Result<Vec<String>, RunError> {
    let qc = cfg.quantum()?;
    let q = qc.params(cfg.kicks)?;
    let se = cfg.se.model(q.k)?;
    let mut table = histogram_table(&out.join("histograms.csv"))?;
    let ev = evolve_point(cfg, q, se, Some(&mut table))?;
    table.finish()?;
    let mut files = vec!["histograms.csv".to_string()];
    write_evolution(out, &ev, &mut files)?;
    ev.decay.map_err(RunError::from)?;
    Ok(files)
}

/// Identity of a sweep point; a stored result is reused only if it matches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointKey {
    pub k: f64,
    pub tau: f64,
    pub eta: f64,
    pub p_se: f64,
    pub kicks: u64,
    pub rotors: usize,
    pub seed: u64,
    pub window: crate::config::WindowConfig,
    pub area: crate::config::AreaConfig,
}

/// `result.json` of a sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub key: PointKey,
    pub status: PointStatus,
    pub row: Option<RateRow>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointStatus {
    Ok,
    Failed,
}

/// `scaling.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingReport {
    #[serde(flatten)]
    pub fit: ScalingFitResult,
    pub run_ids: Vec<String>,
}

fn sweep_point(cfg: &RunConfig, p: &SweepPoint, dir: &Path) -> Result<PointResult, RunError> {
    let q = QuantumParams::sized_for_run(p.k, p.tau, p.eta, cfg.kicks)?;
    let se = cfg.se.model(p.k)?;
    let key = PointKey {
        k: p.k,
        tau: p.tau,
        eta: p.eta,
        p_se: se.probability(),
        kicks: cfg.kicks,
        rotors: cfg.ensemble.count,
        seed: cfg.seed,
        window: cfg.window,
        area: cfg.area,
    };
    let result_path = dir.join("result.json");
    if result_path.exists() {
        if let Ok(prev) = read_json::<PointResult>(&result_path) {
            if prev.key == key && prev.status == PointStatus::Ok {
                info!("{}: reusing stored result", p.label());
                return Ok(prev);
            }
        }
    }
    create_dir(dir)?;
    let attempt = || -> Result<RateRow, RunError> {
        let area = estimate_island_area(&p.map_params()?, cfg.area.grid, cfg.area.kicks, cfg.area.seeds)?;
        if !area.converged {
            warn!("{}: island area not converged", p.label());
        }
        let ev = evolve_point(cfg, q, se, None)?;
        write_evolution(dir, &ev, &mut Vec::new())?;
        let decay = ev.decay?;
        Ok(RateRow {
            run_id: p.label(),
            k: p.k,
            tau: p.tau,
            eta: p.eta,
            p_se: se.probability(),
            area: area.area,
            eps_abs: q.hbar_eff(),
            area_over_hbar: area.area_over_hbar,
            gamma: decay.gamma,
            gamma_err: decay.gamma_err,
        })
    };
    let result = match attempt() {
        Ok(row) => PointResult {
            key,
            status: PointStatus::Ok,
            row: Some(row),
            error: None,
        },
        Err(e) => {
            warn!("{}: {e}", p.label());
            PointResult {
                key,
                status: PointStatus::Failed,
                row: None,
                error: Some(e.to_string()),
            }
        }
    };
    write_json(&result_path, &result)?;
    Ok(result)
}

/// Summary of a finished sweep.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<RateRow>,
    pub failures: Vec<(String, String)>,
    pub scaling: Option<ScalingFitResult>,
}

/// Runs every point (concurrently on the ambient pool), then writes the rates
/// table and the scaling fit from a single writer.
pub fn sweep(cfg: &RunConfig, out: &Path) -> Result<SweepOutcome, RunError> {
    let points = cfg.sweep_points()?;
    let points_dir = out.join("points");
    create_dir(&points_dir)?;
    let results: Vec<PointResult> = points
        .par_iter()
        .map(|p| sweep_point(cfg, p, &points_dir.join(p.label())))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (p, r) in points.iter().zip(results) {
        match (r.status, r.row) {
            (PointStatus::Ok, Some(row)) => rows.push(row),
            _ => failures.push((p.label(), r.error.unwrap_or_default())),
        }
    }
    write_rates(&out.join("rates.csv"), &rows)?;
    let usable: Vec<&RateRow> = rows.iter().filter(|r| r.gamma > 0.0).collect();
    let scaling = if usable.len() >= 3 {
        let fit = fit_scaling(&usable.iter().map(|r| (r.area_over_hbar, r.gamma)).collect::<Vec<_>>())?;
        write_json(
            &out.join("scaling.json"),
            &ScalingReport {
                fit: fit.clone(),
                run_ids: usable.iter().map(|r| r.run_id.clone()).collect(),
            },
        )?;
        Some(fit)
    } else {
        warn!("{} usable points; scaling fit needs at least 3", usable.len());
        None
    };
    Ok(SweepOutcome {
        rows,
        failures,
        scaling,
    })
}

fn run_sweep(cfg: &RunConfig, out: &Path) -> Result<Vec<String>, RunError> {
    let outcome = sweep(cfg, out)?;
    for (id, e) in &outcome.failures {
        warn!("point {id} failed: {e}");
    }
    let mut files = vec!["rates.csv".to_string()];
    if outcome.scaling.is_some() {
        files.push("scaling.json".into());
    }
    Ok(files)
}

fn run_fit(cfg: &RunConfig, out: &Path) -> Result<Vec<String>, RunError> {
    let fit = cfg.fit.as_ref().expect("validated");
    if let Some(path) = &fit.survival {
        let s = read_survival(path)?;
        let start = fit.t_start.unwrap_or(s.t0);
        let end = fit.t_end.unwrap_or(s.last_kick().unwrap_or(s.t0));
        let f = fit_decay_rate(&s, start, end)?;
        write_json(&out.join("decay.json"), &DecayReport::from((s.t0, f)))?;
        return Ok(vec!["decay.json".into()]);
    }
    let rows = read_rates(fit.rates.as_ref().expect("validated"))?;
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.area_over_hbar, r.gamma)).collect();
    let scaling = fit_scaling(&points)?;
    write_json(
        &out.join("scaling.json"),
        &ScalingReport {
            fit: scaling,
            run_ids: rows.iter().map(|r| r.run_id.clone()).collect(),
        },
    )?;
    Ok(vec!["scaling.json".into()])
}

#[derive(Debug, Serialize)]
struct UnitsReport {
    tau: f64,
    eta: f64,
    half_talbot_time: f64,
    period: f64,
    grating_vector: f64,
}

fn run_convert_units(cfg: &RunConfig, out: &Path) -> Result<Vec<String>, RunError> {
    let u = cfg.units.as_ref().expect("validated").context()?;
    let d = convert_units(&u)?;
    write_json(
        &out.join("units.json"),
        &UnitsReport {
            tau: d.tau,
            eta: d.eta,
            half_talbot_time: d.half_talbot_time,
            period: u.period,
            grating_vector: u.grating_vector(),
        },
    )?;
    Ok(vec!["units.json".into()])
}
