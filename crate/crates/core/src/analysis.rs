//! Accelerator-mode tracking, survival probabilities and decay fits.

use alloc::vec::Vec;
use libm::{exp, log, round, sqrt};

use crate::ensemble::MomentumHistogram;
use crate::map::{find_period1_fixed_point, momentum_to_map_coordinate};
use crate::quantum::QuantumParams;
use crate::{Error, Result, TWO_PI};

/// Momentum states in the mode window.
pub const DEFAULT_WINDOW_WIDTH: usize = 7;
/// Bulk standard deviations between window centre and bulk mean at which the
/// mode counts as separated.
pub const SEPARATION_SIGMAS: f64 = 3.0;
/// Minimum number of points in a decay fit.
pub const MIN_FIT_POINTS: usize = 5;
/// Consecutive separated observations needed to fix the normalisation kick.
pub const SEPARATION_PERSISTENCE: usize = 10;

/// Inclusive momentum range `[n_lo, n_hi]` attributed to the mode at a kick.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModeWindow {
    pub kick_index: u64,
    pub n_lo: i64,
    pub n_hi: i64,
}

impl ModeWindow {
    /// `width` states centred on `round(centre)`; even widths extend one
    /// state further below.
    pub fn centred(kick_index: u64, centre: f64, width: usize) -> Self {
        let c = round(centre) as i64;
        let w = width.max(1) as i64;
        let n_lo = c - w / 2;
        ModeWindow {
            kick_index,
            n_lo,
            n_hi: n_lo + w - 1,
        }
    }

    pub fn width(&self) -> usize {
        (self.n_hi - self.n_lo + 1) as usize
    }

    pub fn contains(&self, n: i64) -> bool {
        (self.n_lo..=self.n_hi).contains(&n)
    }

    pub fn centre(&self) -> f64 {
        0.5 * (self.n_lo + self.n_hi) as f64
    }
}

/// Trajectory of the mode centre predicted from the pseudo-classical island.
///
/// The island sits at `J ≡ 0 (mod 2π)`. Inverting the correspondence
/// `J = n|ε| + sgn(ε)(π + τ(β + jη + η/2))` at the ensemble centre `β_c` gives
/// `n_c(j) = n_c(0) - sgn(ε)(τη/|ε|) j`, where `n_c(0)` belongs to the
/// island copy `2πm` nearest to the initial state.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModePrediction {
    pub initial_center: f64,
    pub drift_per_kick: f64,
}

impl ModePrediction {
    pub fn new(q: &QuantumParams, beta_center: f64, initial_n: i64) -> Result<Self> {
        let m = q.map_params()?;
        match find_period1_fixed_point(&m) {
            Some(fp) if fp.stable => {}
            _ => return Err(Error::NoStableFixedPoint),
        }
        let j0 = momentum_to_map_coordinate(initial_n, beta_center, 0, &m);
        let island = TWO_PI * round(j0 / TWO_PI);
        Ok(ModePrediction {
            initial_center: initial_n as f64 + (island - j0) / m.hbar_eff(),
            drift_per_kick: q.mode_drift_per_kick(),
        })
    }

    pub fn center(&self, j: u64) -> f64 {
        self.initial_center + self.drift_per_kick * j as f64
    }

    pub fn window(&self, j: u64, width: usize) -> ModeWindow {
        ModeWindow::centred(j, self.center(j), width)
    }
}

/// Predicted mode centre after `j` kicks for an ensemble centred at
/// `beta_center` that started in `initial_n`.
pub fn predict_mode_center(j: u64, q: &QuantumParams, beta_center: f64, initial_n: i64) -> Result<f64> {
    Ok(ModePrediction::new(q, beta_center, initial_n)?.center(j))
}

/// Probability inside `window`.
pub fn window_probability(h: &MomentumHistogram, window: &ModeWindow) -> Result<f64> {
    if window.n_lo < h.n_min || window.n_hi > h.n_max() {
        return Err(Error::WindowOutOfBasis {
            kick: window.kick_index,
            n_lo: window.n_lo,
            n_hi: window.n_hi,
        });
    }
    Ok((window.n_lo..=window.n_hi).map(|n| h.get(n)).sum())
}

/// Probability-weighted mean momentum inside `window`.
pub fn mode_centroid(h: &MomentumHistogram, window: &ModeWindow) -> Option<f64> {
    let (mut w, mut wn) = (0.0, 0.0);
    for n in window.n_lo..=window.n_hi {
        let p = h.get(n);
        w += p;
        wn += p * n as f64;
    }
    (w > 0.0).then(|| wn / w)
}

/// Mean and standard deviation of the momentum distribution outside
/// `window`; `None` if it carries no probability.
pub fn bulk_statistics(h: &MomentumHistogram, window: &ModeWindow) -> Option<(f64, f64)> {
    let (mut w, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for (n, p) in h.iter().filter(|(n, _)| !window.contains(*n)) {
        let x = n as f64;
        w += p;
        s1 += p * x;
        s2 += p * x * x;
    }
    if w <= 0.0 {
        return None;
    }
    let mean = s1 / w;
    Some((mean, sqrt((s2 / w - mean * mean).max(0.0))))
}

/// Whether the window centre lies at least [`SEPARATION_SIGMAS`] bulk standard
/// deviations away from the bulk mean.
pub fn is_separated(h: &MomentumHistogram, window: &ModeWindow) -> bool {
    match bulk_statistics(h, window) {
        Some((mean, sigma)) => (window.centre() - mean).abs() >= SEPARATION_SIGMAS * sigma,
        None => false,
    }
}

/// Survival probability `p(t)`, normalised to 1 at `t0`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SurvivalSeries {
    pub t: Vec<u64>,
    pub p: Vec<f64>,
    pub t0: u64,
}

impl SurvivalSeries {
    /// Series from unnormalised window probabilities, starting at `t0`.
    pub fn from_raw(t: &[u64], raw: &[f64], t0: u64) -> Self {
        let start = t.iter().position(|&x| x >= t0).unwrap_or(t.len());
        let norm = raw.get(start).copied().unwrap_or(0.0);
        let scale = if norm > 0.0 { 1.0 / norm } else { 0.0 };
        SurvivalSeries {
            t: t[start..].to_vec(),
            p: raw[start..].iter().map(|&x| x * scale).collect(),
            t0,
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn last_kick(&self) -> Option<u64> {
        self.t.last().copied()
    }
}

/// Survival in `windows[i]` for `histograms[i]`, from `t0` on.
pub fn survival_probability(
    histograms: &[MomentumHistogram],
    windows: &[ModeWindow],
    t0: u64,
) -> Result<SurvivalSeries> {
    if histograms.len() != windows.len() {
        return Err(Error::InsufficientData {
            needed: histograms.len(),
            got: windows.len(),
        });
    }
    let mut t = Vec::new();
    let mut raw = Vec::new();
    for (h, w) in histograms.iter().zip(windows) {
        if h.kick_index < t0 {
            continue;
        }
        t.push(h.kick_index);
        raw.push(window_probability(h, w)?);
    }
    Ok(SurvivalSeries::from_raw(&t, &raw, t0))
}

/// Streaming mode tracker: feed it the histogram after every kick.
#[derive(Debug, Clone)]
pub struct ModeTracker {
    prediction: ModePrediction,
    width: usize,
    t: Vec<u64>,
    raw: Vec<f64>,
    centroids: Vec<Option<f64>>,
    /// Index where the current run of separated observations began.
    run_start: Option<usize>,
    /// Index of the separation time, once found.
    t0_index: Option<usize>,
}

impl ModeTracker {
    pub fn new(prediction: ModePrediction, width: usize) -> Result<Self> {
        if width == 0 {
            return Err(Error::invalid("width", 0.0, "window needs at least one state"));
        }
        Ok(ModeTracker {
            prediction,
            width,
            t: Vec::new(),
            raw: Vec::new(),
            centroids: Vec::new(),
            run_start: None,
            t0_index: None,
        })
    }

    pub fn prediction(&self) -> &ModePrediction {
        &self.prediction
    }

    pub fn window(&self, j: u64) -> ModeWindow {
        self.prediction.window(j, self.width)
    }

    /// Records the window probability and checks for separation; returns the
    /// window probability.
    pub fn observe(&mut self, h: &MomentumHistogram) -> Result<f64> {
        let w = self.window(h.kick_index);
        let p = window_probability(h, &w)?;
        let i = self.t.len();
        if p > 0.0 && is_separated(h, &w) {
            let start = *self.run_start.get_or_insert(i);
            if self.t0_index.is_none() && i + 1 - start >= SEPARATION_PERSISTENCE {
                self.t0_index = Some(start);
            }
        } else {
            self.run_start = None;
        }
        self.t.push(h.kick_index);
        self.raw.push(p);
        self.centroids.push(mode_centroid(h, &w));
        Ok(p)
    }

    /// Start of the first run of [`SEPARATION_PERSISTENCE`] consecutive
    /// separated observations.
    ///
    /// At early times nearly all probability sits in the window and the
    /// "bulk" is a pair of thin tails, which can pass the test by accident;
    /// requiring separation to persist skips those kicks. Later lapses (a
    /// trail of escaped or recoiled atoms widens the bulk) do not move it.
    pub fn separation_time(&self) -> Option<u64> {
        self.t0_index.map(|i| self.t[i])
    }

    /// Unnormalised window probability at an observed kick.
    pub fn probability_at(&self, kick: u64) -> Option<f64> {
        self.t.binary_search(&kick).ok().map(|i| self.raw[i])
    }

    pub fn kicks(&self) -> &[u64] {
        &self.t
    }

    /// Unnormalised window probabilities.
    pub fn window_probabilities(&self) -> &[f64] {
        &self.raw
    }

    /// Centroid of the window at each observed kick.
    pub fn centroids(&self) -> &[Option<f64>] {
        &self.centroids
    }

    /// Survival normalised at the separation time.
    pub fn survival(&self) -> Result<SurvivalSeries> {
        let t0 = self.separation_time().ok_or(Error::ModeNotSeparated)?;
        Ok(self.survival_from(t0))
    }

    /// Survival normalised at an explicit `t0`.
    pub fn survival_from(&self, t0: u64) -> SurvivalSeries {
        SurvivalSeries::from_raw(&self.t, &self.raw, t0)
    }
}

/// Weighted straight-line fit `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_err: f64,
    pub intercept_err: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Least squares with weights `w` (unit weights if `None`). Standard errors
/// use the residual variance with `n - 2` degrees of freedom.
pub fn linear_fit(x: &[f64], y: &[f64], w: Option<&[f64]>) -> Result<LinearFit> {
    let n = x.len().min(y.len());
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    let weight = |i: usize| w.map_or(1.0, |w| w[i]);
    let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        sw += weight(i);
        sx += weight(i) * x[i];
        sy += weight(i) * y[i];
    }
    let (xm, ym) = (sx / sw, sy / sw);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (dx, dy) = (x[i] - xm, y[i] - ym);
        sxx += weight(i) * dx * dx;
        sxy += weight(i) * dx * dy;
        syy += weight(i) * dy * dy;
    }
    if !(sxx > 0.0) {
        return Err(Error::invalid("x", xm, "abscissae must not all coincide"));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ss_res: f64 = (0..n)
        .map(|i| {
            let r = y[i] - intercept - slope * x[i];
            weight(i) * r * r
        })
        .sum();
    let s2 = ss_res / (n - 2) as f64;
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(LinearFit {
        slope,
        intercept,
        slope_err: sqrt(s2 / sxx),
        intercept_err: sqrt(s2 * (1.0 / sw + xm * xm / sxx)),
        r_squared,
        points: n,
    })
}

/// Exponential decay fit `p ≈ exp(intercept - γ t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecayFitResult {
    pub gamma: f64,
    pub gamma_err: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub t_start: u64,
    pub t_end: u64,
    pub points: usize,
    /// Points in the window dropped for `p <= 0`.
    pub dropped: usize,
}

impl DecayFitResult {
    pub fn evaluate(&self, t: f64) -> f64 {
        exp(self.intercept - self.gamma * t)
    }
}

/// Fits `ln p` against `t` over `[t_start, t_end]` with weights `p`, the
/// inverse variance of `ln p` for counting noise `∝ √p`.
///
/// Points with `p <= 0` are dropped and counted in
/// [`DecayFitResult::dropped`].
pub fn fit_decay_rate(s: &SurvivalSeries, t_start: u64, t_end: u64) -> Result<DecayFitResult> {
    let in_window: Vec<(f64, f64)> = s
        .t
        .iter()
        .zip(&s.p)
        .filter(|(&t, _)| t >= t_start && t <= t_end)
        .map(|(&t, &p)| (t as f64, p))
        .collect();
    if in_window.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_POINTS,
            got: in_window.len(),
        });
    }
    let kept: Vec<(f64, f64)> = in_window.iter().copied().filter(|&(_, p)| p > 0.0).collect();
    if kept.len() < MIN_FIT_POINTS {
        return Err(Error::NonPositiveSurvival {
            remaining: kept.len(),
            needed: MIN_FIT_POINTS,
        });
    }
    let x: Vec<f64> = kept.iter().map(|k| k.0).collect();
    let y: Vec<f64> = kept.iter().map(|k| log(k.1)).collect();
    let w: Vec<f64> = kept.iter().map(|k| k.1).collect();
    let fit = linear_fit(&x, &y, Some(&w))?;
    Ok(DecayFitResult {
        gamma: -fit.slope,
        gamma_err: fit.slope_err,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        t_start,
        t_end,
        points: kept.len(),
        dropped: in_window.len() - kept.len(),
    })
}

/// `ln Γ = intercept + slope·(A/|ε|)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScalingFitResult {
    pub slope: f64,
    pub intercept: f64,
    pub slope_err: f64,
    pub intercept_err: f64,
    pub r_squared: f64,
    /// `(A/|ε|, Γ)` pairs used.
    pub points: Vec<(f64, f64)>,
}

/// Ordinary least squares of `ln Γ` against `A/|ε|`.
pub fn fit_scaling(points: &[(f64, f64)]) -> Result<ScalingFitResult> {
    if points.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: points.len(),
        });
    }
    if let Some(&(_, g)) = points.iter().find(|(_, g)| !(*g > 0.0)) {
        return Err(Error::invalid("gamma", g, "scaling fit needs gamma > 0"));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0).collect();
    let y: Vec<f64> = points.iter().map(|p| log(p.1)).collect();
    let fit = linear_fit(&x, &y, None)?;
    Ok(ScalingFitResult {
        slope: fit.slope,
        intercept: fit.intercept,
        slope_err: fit.slope_err,
        intercept_err: fit.intercept_err,
        r_squared: fit.r_squared,
        points: points.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn fig1() -> QuantumParams {
        QuantumParams::new(1.4, 5.97, 0.0257, -64, 1023).unwrap()
    }

    fn delta_hist(kick: u64, n_min: i64, len: usize, at: &[(i64, f64)]) -> MomentumHistogram {
        let mut h = MomentumHistogram::zeros(kick, n_min, len);
        for &(n, p) in at {
            h.probabilities[(n - n_min) as usize] = p;
        }
        h
    }

    #[test]
    fn window_geometry() {
        let w = ModeWindow::centred(3, 7.35, 7);
        assert_eq!((w.n_lo, w.n_hi, w.width()), (4, 10, 7));
        assert_eq!(ModeWindow::centred(0, -0.4, 6).width(), 6);
    }

    #[test]
    fn prediction_drifts_at_the_pseudo_classical_rate() {
        let pred = ModePrediction::new(&fig1(), 0.5, 0).unwrap();
        assert_abs_diff_eq!(pred.center(15) - pred.center(0), 7.348476915235085, epsilon = 1e-9);
        assert!(pred.initial_center.abs() < 0.5);
        let j0 = predict_mode_center(0, &fig1(), 0.5, 0).unwrap();
        assert_eq!(j0, pred.initial_center);
    }

    #[test]
    fn prediction_without_gravity_is_static() {
        let q = QuantumParams::new(1.4, 5.97, 0.0, -64, 63).unwrap();
        let pred = ModePrediction::new(&q, 0.5, 0).unwrap();
        assert_eq!(pred.center(0), pred.center(1000));
    }

    #[test]
    fn prediction_needs_an_island() {
        let q = QuantumParams::new(40.0, 5.97, 0.0257, -64, 63).unwrap();
        assert_eq!(ModePrediction::new(&q, 0.5, 0), Err(Error::NoStableFixedPoint));
    }

    #[test]
    fn survival_of_a_static_delta_is_one() {
        let hs: Vec<_> = (0..10).map(|t| delta_hist(t, -8, 16, &[(0, 1.0)])).collect();
        let ws: Vec<_> = (0..10).map(|t| ModeWindow::centred(t, 0.0, 7)).collect();
        let s = survival_probability(&hs, &ws, 2).unwrap();
        assert_eq!(s.t.first(), Some(&2));
        assert!(s.p.iter().all(|&p| p == 1.0));
    }

    #[test]
    fn survival_in_an_empty_region_is_zero() {
        let hs: Vec<_> = (0..5).map(|t| delta_hist(t, -8, 32, &[(0, 1.0)])).collect();
        let ws: Vec<_> = (0..5).map(|t| ModeWindow::centred(t, 15.0, 5)).collect();
        let s = survival_probability(&hs, &ws, 0).unwrap();
        assert!(s.p.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn window_outside_support_errors() {
        let h = delta_hist(4, -8, 16, &[(0, 1.0)]);
        let w = ModeWindow::centred(4, 6.0, 7);
        assert_eq!(
            window_probability(&h, &w),
            Err(Error::WindowOutOfBasis {
                kick: 4,
                n_lo: 3,
                n_hi: 9
            })
        );
    }

    #[test]
    fn separation_test() {
        let close = delta_hist(0, -32, 64, &[(-2, 0.3), (2, 0.3), (3, 0.4)]);
        assert!(!is_separated(&close, &ModeWindow::centred(0, 3.0, 1)));
        let far = delta_hist(0, -32, 64, &[(-1, 0.3), (1, 0.3), (20, 0.4)]);
        assert!(is_separated(&far, &ModeWindow::centred(0, 20.0, 3)));
        let (mean, sigma) = bulk_statistics(&far, &ModeWindow::centred(0, 20.0, 3)).unwrap();
        assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sigma, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn exact_exponential() {
        let t: Vec<u64> = (0..=100).collect();
        let p: Vec<f64> = t.iter().map(|&t| 0.8 * exp(-0.01 * t as f64)).collect();
        let s = SurvivalSeries { t, p, t0: 0 };
        let fit = fit_decay_rate(&s, 0, 100).unwrap();
        assert_abs_diff_eq!(fit.gamma, 0.01, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.evaluate(0.0), 0.8, epsilon = 1e-9);
        assert!(fit.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn constant_series_has_zero_rate() {
        let s = SurvivalSeries {
            t: (0..20).collect(),
            p: vec![1.0; 20],
            t0: 0,
        };
        let fit = fit_decay_rate(&s, 0, 19).unwrap();
        assert!(fit.gamma.abs() <= fit.gamma_err + 1e-15);
    }

    #[test]
    fn non_positive_points_are_dropped() {
        let mut p: Vec<f64> = (0..10).map(|t| exp(-0.1 * t as f64)).collect();
        p[3] = 0.0;
        let s = SurvivalSeries { t: (0..10).collect(), p, t0: 0 };
        let fit = fit_decay_rate(&s, 0, 9).unwrap();
        assert_eq!(fit.dropped, 1);
        assert_abs_diff_eq!(fit.gamma, 0.1, epsilon = 1e-12);

        let s = SurvivalSeries {
            t: (0..6).collect(),
            p: vec![1.0, 0.0, 0.5, 0.0, 0.2, 0.1],
            t0: 0,
        };
        assert!(matches!(
            fit_decay_rate(&s, 0, 5),
            Err(Error::NonPositiveSurvival { remaining: 4, .. })
        ));
        assert!(matches!(
            fit_decay_rate(&s, 0, 3),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn scaling_of_pure_exponential() {
        let pts: Vec<(f64, f64)> = [1.0, 2.5, 3.0, 4.2].iter().map(|&x| (x, exp(-x))).collect();
        let fit = fit_scaling(&pts).unwrap();
        assert_abs_diff_eq!(fit.slope, -1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.intercept, 0.0, epsilon = 1e-9);
        assert!(fit_scaling(&pts[..2]).is_err());
        assert!(fit_scaling(&[(1.0, 0.1), (2.0, 0.0), (3.0, 0.01)]).is_err());
    }
}
