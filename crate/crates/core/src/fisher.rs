//! Fisher information engine: Poisson photon statistics marginalized through
//! the detector channel, per pixel, summed over the camera.
//!
//! Per pixel, the outcome distribution is
//! `p(k) = sum_N p(k | N) Poisson(N; n_bar_j)` and the FI about the shift `g`
//! is `F_j = sum_k (dp(k)/dg)^2 / p(k)`. Pixels are independent, so the camera
//! total is `F = sum_j F_j`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beam::{pixel_mean_photons, pixel_mean_photons_deriv, BeamSpec, MeasurementScheme, PixelGrid};
use crate::detector::{mean_response_unchecked, DetectorConfig};
use crate::error::{Error, Result};
use crate::math::poisson_pmf_range;

/// Smallest mean used in `(N - n_bar) / n_bar` score factors; means below
/// this are clamped to avoid division blowup (the N = 0 term then reduces to
/// the analytic limit `-dn_bar * exp(-n_bar)`).
const MEAN_CLAMP: f64 = 1e-300;

/// Poisson truncation policy for the marginalization over photon number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    /// Maximum discarded Poisson tail mass per pixel.
    pub tail_epsilon: f64,
    /// Outcome probabilities below this are skipped in the FI sum.
    pub prob_floor: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self { tail_epsilon: 1e-12, prob_floor: 1e-15 }
    }
}

impl TruncationPolicy {
    pub fn new(tail_epsilon: f64, prob_floor: f64) -> Result<Self> {
        if !(tail_epsilon > 0.0 && tail_epsilon <= 1e-6) {
            return Err(Error::Config(format!(
                "tail_epsilon must be in (0, 1e-6], got {tail_epsilon}"
            )));
        }
        if !(prob_floor >= 0.0) {
            return Err(Error::Config(format!("prob_floor must be >= 0, got {prob_floor}")));
        }
        Ok(Self { tail_epsilon, prob_floor })
    }
}

/// Contiguous photon-number window `[lo, hi]` around the Poisson mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonWindow {
    pub lo: u64,
    pub hi: u64,
    /// Mass outside the window (upper bound from the accumulated sum).
    pub tail_mass: f64,
}

/// Smallest contiguous window around the mode whose complementary Poisson
/// mass is at most `policy.tail_epsilon`. Grown greedily, larger-mass side
/// first; the anchor term is evaluated in log-space via log-gamma so means up
/// to ~1e8 stay finite.
///
/// Termination uses explicit geometric bounds on the two tails rather than
/// an accumulated in-window mass: the anchor carries ~1e-9 relative error
/// from log-gamma, so a mass sum can plateau just below `1 - tail_epsilon`
/// and never cross it.
pub fn poisson_window(n_bar: f64, policy: &TruncationPolicy) -> PoissonWindow {
    if n_bar <= 0.0 {
        return PoissonWindow { lo: 0, hi: 0, tail_mass: 0.0 };
    }
    let mode = n_bar.floor() as u64;
    let mut lo = mode;
    let mut hi = mode;
    let mut pmf_lo = crate::math::poisson_ln_pmf(mode, n_bar).exp();
    let mut pmf_hi = pmf_lo;
    // Below `lo` terms shrink by factors n/n_bar <= (lo-1)/n_bar; above `hi`
    // they shrink by n_bar/n <= n_bar/(hi+2). When those ratios are below 1
    // the tails are dominated by geometric series.
    let lo_tail = |first: f64, top: u64| {
        if first == 0.0 {
            return 0.0;
        }
        let r = top as f64 / n_bar;
        if r < 1.0 {
            (first / (1.0 - r)).min(first * (top + 1) as f64)
        } else {
            first * (top + 1) as f64
        }
    };
    let hi_tail = |first: f64, bottom: u64| {
        let r = n_bar / (bottom + 1) as f64;
        if r < 1.0 {
            first / (1.0 - r)
        } else {
            1.0
        }
    };
    loop {
        let next_lo = if lo > 0 { pmf_lo * lo as f64 / n_bar } else { 0.0 };
        let next_hi = pmf_hi * n_bar / (hi + 1) as f64;
        let bound = if lo > 0 { lo_tail(next_lo, lo - 1) } else { 0.0 } + hi_tail(next_hi, hi + 1);
        if bound <= policy.tail_epsilon {
            return PoissonWindow { lo, hi, tail_mass: bound };
        }
        if next_lo >= next_hi {
            lo -= 1;
            pmf_lo = next_lo;
        } else {
            hi += 1;
            pmf_hi = next_hi;
        }
    }
}

/// Per-pixel numerical diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelDiagnostics {
    /// Poisson truncation window `[lo, hi]`.
    pub window: (u64, u64),
    /// Discarded Poisson tail mass.
    pub tail_mass: f64,
    /// Outcome terms skipped by the probability floor.
    pub skipped_terms: usize,
    /// Upper bound on the FI contribution of the skipped terms.
    pub skipped_bound: f64,
}

/// Outcome distribution and its `g`-derivative for one pixel.
#[derive(Debug, Clone)]
pub struct OutcomeProbs {
    /// `p(k)` for `k = 0..k_max-1`.
    pub p: Vec<f64>,
    /// `dp(k)/dg`.
    pub dp: Vec<f64>,
    pub diagnostics: PixelDiagnostics,
}

/// Marginalize the channel over the Poisson photon number: returns `p(k)` and
/// `dp(k)/dg` for `k = 0..k_max-1`. Requires a digitized detector.
pub fn outcome_probs(
    n_bar_j: f64,
    dn_bar_j: f64,
    cfg: &DetectorConfig,
    policy: &TruncationPolicy,
) -> Result<OutcomeProbs> {
    if !cfg.digitization {
        return Err(Error::Config(
            "outcome probabilities over digitization levels require digitization".into(),
        ));
    }
    if !(n_bar_j >= 0.0) {
        return Err(Error::Domain(format!(
            "mean photon number must be non-negative, got {n_bar_j}"
        )));
    }
    let win = poisson_window(n_bar_j, policy);
    let pmf = poisson_pmf_range(win.lo, win.hi, n_bar_j);
    let nc = n_bar_j.max(MEAN_CLAMP);
    let mut p = vec![0.0; cfg.k_max];
    let mut dp = vec![0.0; cfg.k_max];
    let inv = if cfg.sigma > 0.0 { 1.0 / (2.0 * cfg.sigma * cfg.sigma) } else { 0.0 };
    let mut weights: Vec<f64> = Vec::new();
    for (i, &pn) in pmf.iter().enumerate() {
        if pn == 0.0 {
            continue;
        }
        let n = win.lo + i as u64;
        // d Poisson(N; n_bar)/dg = pmf * (N - n_bar)/n_bar * dn_bar
        let dpn = pn * ((n as f64 - n_bar_j) / nc) * dn_bar_j;
        let mu = mean_response_unchecked(n as f64, cfg);
        let (klo, khi) = cfg.band(mu);
        if cfg.sigma == 0.0 {
            p[klo] += pn;
            dp[klo] += dpn;
        } else {
            weights.clear();
            let mut z = 0.0;
            for k in klo..=khi {
                let d = k as f64 - mu;
                let w = (-d * d * inv).exp();
                weights.push(w);
                z += w;
            }
            let zi = 1.0 / z;
            for (k, &w) in (klo..=khi).zip(&weights) {
                p[k] += pn * w * zi;
                dp[k] += dpn * w * zi;
            }
        }
    }
    Ok(OutcomeProbs {
        p,
        dp,
        diagnostics: PixelDiagnostics {
            window: (win.lo, win.hi),
            tail_mass: win.tail_mass,
            skipped_terms: 0,
            skipped_bound: 0.0,
        },
    })
}

/// FI of a single pixel.
///
/// With digitization disabled the channel is a strictly increasing relabeling
/// of `N`, so the outcome distribution equals the Poisson distribution itself
/// and the FI reduces to the Poisson FI summed over the window.
pub fn fisher_per_pixel(
    n_bar_j: f64,
    dn_bar_j: f64,
    cfg: &DetectorConfig,
    policy: &TruncationPolicy,
) -> Result<(f64, PixelDiagnostics)> {
    if !(n_bar_j >= 0.0) {
        return Err(Error::Domain(format!(
            "mean photon number must be non-negative, got {n_bar_j}"
        )));
    }
    if !cfg.digitization {
        let win = poisson_window(n_bar_j, policy);
        let pmf = poisson_pmf_range(win.lo, win.hi, n_bar_j);
        let nc = n_bar_j.max(MEAN_CLAMP);
        let mut f = 0.0;
        for (i, &pn) in pmf.iter().enumerate() {
            if pn == 0.0 {
                continue;
            }
            let n = win.lo + i as u64;
            let score = (n as f64 - n_bar_j) / nc;
            f += pn * score * score;
        }
        f *= dn_bar_j * dn_bar_j;
        let diag = PixelDiagnostics {
            window: (win.lo, win.hi),
            tail_mass: win.tail_mass,
            skipped_terms: 0,
            skipped_bound: 0.0,
        };
        return Ok((f, diag));
    }
    let out = outcome_probs(n_bar_j, dn_bar_j, cfg, policy)?;
    let mut f = 0.0;
    let mut skipped_terms = 0usize;
    let mut skipped_mass = 0.0;
    for k in 0..cfg.k_max {
        let pk = out.p[k];
        if pk < policy.prob_floor {
            if pk > 0.0 {
                skipped_terms += 1;
                skipped_mass += pk;
            }
            continue;
        }
        f += out.dp[k] * out.dp[k] / pk;
    }
    // |dp(k)| <= p(k) * max_window |(N - n_bar)/n_bar * dn_bar|, so each
    // skipped term contributes at most p(k) * B^2.
    let (lo, hi) = out.diagnostics.window;
    let nc = n_bar_j.max(MEAN_CLAMP);
    let b = ((lo as f64 - n_bar_j).abs().max((hi as f64 - n_bar_j).abs()) / nc) * dn_bar_j.abs();
    let diag = PixelDiagnostics {
        skipped_terms,
        skipped_bound: skipped_mass * b * b,
        ..out.diagnostics
    };
    Ok((f, diag))
}

/// Full FI result for a camera.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiResult {
    /// `F_j` per pixel (units 1/length^2).
    pub per_pixel: Vec<f64>,
    /// `sum_j F_j`.
    pub total: f64,
    pub diagnostics: Vec<PixelDiagnostics>,
}

impl FiResult {
    /// Verify the truncation diagnostics against the policy budgets.
    pub fn check(&self, policy: &TruncationPolicy) -> Result<()> {
        for (j, d) in self.diagnostics.iter().enumerate() {
            if d.tail_mass > policy.tail_epsilon {
                return Err(Error::TailMass {
                    mean: j as f64,
                    mass: d.tail_mass,
                    budget: policy.tail_epsilon,
                });
            }
        }
        Ok(())
    }
}

/// Total FI available to the camera: per-pixel FI computed independently (in
/// parallel) and summed in fixed pixel order.
pub fn fisher_total(
    beam: &BeamSpec,
    scheme: &MeasurementScheme,
    grid: &PixelGrid,
    cfg: &DetectorConfig,
    policy: &TruncationPolicy,
) -> Result<FiResult> {
    let n_bars = pixel_mean_photons(beam, scheme, grid);
    let dn_bars = pixel_mean_photons_deriv(beam, scheme, grid);
    fisher_total_from_means(&n_bars, &dn_bars, cfg, policy)
}

/// As [`fisher_total`] but from precomputed per-pixel means and derivatives.
pub fn fisher_total_from_means(
    n_bars: &[f64],
    dn_bars: &[f64],
    cfg: &DetectorConfig,
    policy: &TruncationPolicy,
) -> Result<FiResult> {
    if n_bars.len() != dn_bars.len() {
        return Err(Error::Config(format!(
            "pixel count mismatch: {} means vs {} derivatives",
            n_bars.len(),
            dn_bars.len()
        )));
    }
    let results: Vec<_> = n_bars
        .par_iter()
        .zip(dn_bars.par_iter())
        .map(|(&n, &dn)| fisher_per_pixel(n, dn, cfg, policy))
        .collect::<Result<_>>()?;
    let per_pixel: Vec<f64> = results.iter().map(|r| r.0).collect();
    let diagnostics: Vec<_> = results.iter().map(|r| r.1).collect();
    let total = per_pixel.iter().sum();
    Ok(FiResult { per_pixel, total, diagnostics })
}

/// Result of the finite-difference validation of the analytic derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdCheck {
    pub analytic_total: f64,
    pub fd_total: f64,
    /// `|fd - analytic| / analytic`.
    pub rel_deviation: f64,
    /// Set when the deviation exceeds 10%, signalling a step too large to
    /// resolve `g`.
    pub flagged: bool,
}

/// Recompute the total FI with central finite differences of the outcome
/// probabilities at `g +- step` in place of the analytic derivatives.
pub fn fisher_fd_check(
    beam: &BeamSpec,
    scheme: &MeasurementScheme,
    grid: &PixelGrid,
    cfg: &DetectorConfig,
    policy: &TruncationPolicy,
    step: f64,
) -> Result<FdCheck> {
    if !(step > 0.0) {
        return Err(Error::Domain(format!("step must be positive, got {step}")));
    }
    let analytic = fisher_total(beam, scheme, grid, cfg, policy)?;
    let n_c = pixel_mean_photons(beam, scheme, grid);
    let n_p = pixel_mean_photons(&beam.with_shift(beam.g + step), scheme, grid);
    let n_m = pixel_mean_photons(&beam.with_shift(beam.g - step), scheme, grid);
    let per_pixel: Vec<f64> = (0..n_c.len())
        .into_par_iter()
        .map(|j| pixel_fd(n_c[j], n_p[j], n_m[j], cfg, policy, step))
        .collect();
    let fd_total: f64 = per_pixel.iter().sum();
    let rel_deviation = if analytic.total == 0.0 {
        if fd_total == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (fd_total - analytic.total).abs() / analytic.total
    };
    Ok(FdCheck {
        analytic_total: analytic.total,
        fd_total,
        rel_deviation,
        flagged: rel_deviation > 0.1,
    })
}

/// Finite-difference FI for one pixel. The photon-number range is taken from
/// the center window; the shifted means move it by far less than a term.
fn pixel_fd(
    n_c: f64,
    n_p: f64,
    n_m: f64,
    cfg: &DetectorConfig,
    policy: &TruncationPolicy,
    step: f64,
) -> f64 {
    let win = poisson_window(n_c.max(n_p).max(n_m), policy);
    let pmf_c = poisson_pmf_range(win.lo, win.hi, n_c);
    let pmf_p = poisson_pmf_range(win.lo, win.hi, n_p);
    let pmf_m = poisson_pmf_range(win.lo, win.hi, n_m);
    let half = 0.5 / step;
    if !cfg.digitization {
        // Outcome alphabet is N itself.
        let mut f = 0.0;
        for i in 0..pmf_c.len() {
            if pmf_c[i] < policy.prob_floor {
                continue;
            }
            let d = (pmf_p[i] - pmf_m[i]) * half;
            f += d * d / pmf_c[i];
        }
        return f;
    }
    let mut p = vec![0.0; cfg.k_max];
    let mut dp = vec![0.0; cfg.k_max];
    let inv = if cfg.sigma > 0.0 { 1.0 / (2.0 * cfg.sigma * cfg.sigma) } else { 0.0 };
    let mut weights: Vec<f64> = Vec::new();
    for i in 0..pmf_c.len() {
        if pmf_c[i] == 0.0 && pmf_p[i] == 0.0 && pmf_m[i] == 0.0 {
            continue;
        }
        let n = win.lo + i as u64;
        let dpn = (pmf_p[i] - pmf_m[i]) * half;
        let mu = mean_response_unchecked(n as f64, cfg);
        let (klo, khi) = cfg.band(mu);
        if cfg.sigma == 0.0 {
            p[klo] += pmf_c[i];
            dp[klo] += dpn;
        } else {
            weights.clear();
            let mut z = 0.0;
            for k in klo..=khi {
                let d = k as f64 - mu;
                let w = (-d * d * inv).exp();
                weights.push(w);
                z += w;
            }
            let zi = 1.0 / z;
            for (k, &w) in (klo..=khi).zip(&weights) {
                p[k] += pmf_c[i] * w * zi;
                dp[k] += dpn * w * zi;
            }
        }
    }
    let mut f = 0.0;
    for k in 0..cfg.k_max {
        if p[k] < policy.prob_floor {
            continue;
        }
        f += dp[k] * dp[k] / p[k];
    }
    f
}
