//! Per-pixel photoelectron channel `p(k | N)`: saturating mean response,
//! intrinsic Gaussian pixel noise, and digitization onto `k_max` levels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher::TruncationPolicy;

/// How the mean photoelectron response depends on the incident photon number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Saturation {
    /// The saturating model `mu(N) = k_max (1 - exp(-N / n_sat))`.
    Saturating { n_sat: f64 },
    /// Exact linear response `mu(N) = k_max * N / n_ref` (no clipping by
    /// construction; `n_ref` must be chosen so relevant photon numbers map
    /// below `k_max`).
    Linear { n_ref: f64 },
}

/// Detector channel configuration.
///
/// Output levels are `k in {0, ..., k_max - 1}`; `mu` may reach `k_max`,
/// slightly above the top level, which the row normalization (or clamping
/// when `sigma = 0`) absorbs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Number of digitization levels.
    pub k_max: usize,
    pub saturation: Saturation,
    /// Intrinsic pixel noise std-dev in count units; 0 means deterministic.
    pub sigma: f64,
    /// When `false` the output alphabet is the set of distinct exact `mu(N)`
    /// values (no rounding, no noise): a strictly increasing relabeling of
    /// `N`, hence information-preserving.
    pub digitization: bool,
}

impl DetectorConfig {
    pub fn new(k_max: usize, saturation: Saturation, sigma: f64, digitization: bool) -> Result<Self> {
        if k_max < 2 {
            return Err(Error::Config(format!("k_max must be >= 2, got {k_max}")));
        }
        match saturation {
            Saturation::Saturating { n_sat } if !(n_sat > 0.0) => {
                return Err(Error::Config(format!("n_sat must be positive, got {n_sat}")));
            }
            Saturation::Linear { n_ref } if !(n_ref > 0.0) => {
                return Err(Error::Config(format!("n_ref must be positive, got {n_ref}")));
            }
            _ => {}
        }
        if !(sigma >= 0.0) {
            return Err(Error::Config(format!("sigma must be non-negative, got {sigma}")));
        }
        Ok(Self { k_max, saturation, sigma, digitization })
    }

    pub fn saturating(k_max: usize, n_sat: f64, sigma: f64) -> Result<Self> {
        Self::new(k_max, Saturation::Saturating { n_sat }, sigma, true)
    }

    /// Index range of digitization levels carrying non-negligible Gaussian
    /// weight around `mu` (|k - mu| <= 10 sigma), clamped to the alphabet.
    pub(crate) fn band(&self, mu: f64) -> (usize, usize) {
        if self.sigma == 0.0 {
            let k = (mu.round() as i64).clamp(0, self.k_max as i64 - 1) as usize;
            return (k, k);
        }
        let lo = ((mu - 10.0 * self.sigma).floor() as i64).clamp(0, self.k_max as i64 - 1);
        let hi = ((mu + 10.0 * self.sigma).ceil() as i64).clamp(0, self.k_max as i64 - 1);
        (lo as usize, hi as usize)
    }
}

/// Mean photoelectron response `mu(N)`; strictly increasing in `N`.
pub fn mean_response(n: f64, cfg: &DetectorConfig) -> Result<f64> {
    if !(n >= 0.0) {
        return Err(Error::Domain(format!("photon number must be non-negative, got {n}")));
    }
    Ok(mean_response_unchecked(n, cfg))
}

#[inline]
pub(crate) fn mean_response_unchecked(n: f64, cfg: &DetectorConfig) -> f64 {
    match cfg.saturation {
        Saturation::Saturating { n_sat } => cfg.k_max as f64 * (1.0 - (-n / n_sat).exp()),
        Saturation::Linear { n_ref } => cfg.k_max as f64 * n / n_ref,
    }
}

/// One row of the channel: the distribution of recorded counts given that
/// exactly `n` photons hit the pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSlice {
    pub n: u64,
    pub mu: f64,
    /// Length `k_max`; non-negative, sums to 1.
    pub probs: Vec<f64>,
}

/// Discrete-normalized Gaussian channel row; for `sigma = 0`
/// all mass sits on `round(mu)` clamped to the top level.
pub fn channel_row(n: u64, cfg: &DetectorConfig) -> Result<ChannelSlice> {
    if !cfg.digitization {
        return Err(Error::Config(
            "channel rows over digitization levels are undefined when digitization is disabled".into(),
        ));
    }
    let mu = mean_response_unchecked(n as f64, cfg);
    let mut probs = vec![0.0; cfg.k_max];
    let (lo, hi) = cfg.band(mu);
    if cfg.sigma == 0.0 {
        probs[lo] = 1.0;
    } else {
        let inv = 1.0 / (2.0 * cfg.sigma * cfg.sigma);
        let mut z = 0.0;
        for k in lo..=hi {
            let d = k as f64 - mu;
            let w = (-d * d * inv).exp();
            probs[k] = w;
            z += w;
        }
        for p in &mut probs[lo..=hi] {
            *p /= z;
        }
    }
    Ok(ChannelSlice { n, mu, probs })
}

/// Mean of `k` under the recorded count given `n` photons (band-truncated).
#[inline]
pub(crate) fn row_mean(n: f64, cfg: &DetectorConfig) -> f64 {
    let mu = mean_response_unchecked(n, cfg);
    if !cfg.digitization {
        // Information-preserving relabeling: output is mu itself.
        return mu;
    }
    if cfg.sigma == 0.0 {
        return (mu.round()).clamp(0.0, cfg.k_max as f64 - 1.0);
    }
    let (lo, hi) = cfg.band(mu);
    let inv = 1.0 / (2.0 * cfg.sigma * cfg.sigma);
    let (mut z, mut m) = (0.0, 0.0);
    for k in lo..=hi {
        let d = k as f64 - mu;
        let w = (-d * d * inv).exp();
        z += w;
        m += k as f64 * w;
    }
    m / z
}

/// Marginal mean recorded count for a pixel with Poisson mean `n_bar_j`:
/// `E[k] = sum_N Poisson(N; n_bar_j) * E[k | N]` over the truncation window.
pub fn expected_counts(n_bar_j: f64, cfg: &DetectorConfig, policy: &TruncationPolicy) -> Result<f64> {
    if !(n_bar_j >= 0.0) {
        return Err(Error::Domain(format!(
            "mean photon number must be non-negative, got {n_bar_j}"
        )));
    }
    let win = crate::fisher::poisson_window(n_bar_j, policy);
    let pmf = crate::math::poisson_pmf_range(win.lo, win.hi, n_bar_j);
    let mut e = 0.0;
    for (i, &p) in pmf.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        e += p * row_mean((win.lo + i as u64) as f64, cfg);
    }
    Ok(e)
}
