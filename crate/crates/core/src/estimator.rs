//! Monte-Carlo frame simulation and estimator benchmarking: maximum
//! likelihood and center-of-mass estimates of the beam shift, compared
//! against the Cramér–Rao bound `1/F`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beam::{pixel_mean_photons, BeamSpec, MeasurementScheme, PixelGrid};
use crate::detector::{mean_response_unchecked, DetectorConfig};
use crate::error::{Error, Result};
use crate::fisher::{fisher_total, poisson_window, TruncationPolicy};
use crate::math::{golden_section_max, linspace, poisson_pmf_range};

/// Everything needed to simulate and analyze one measurement setup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub beam: BeamSpec,
    pub scheme: MeasurementScheme,
    pub grid: PixelGrid,
    pub detector: DetectorConfig,
    pub policy: TruncationPolicy,
}

/// Identifies the RNG stream that produced a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedTag {
    pub seed: u64,
    pub frame: u64,
}

/// One simulated camera exposure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    /// Recorded count per pixel, each in `[0, k_max - 1]`.
    pub counts: Vec<u32>,
    pub seed_tag: SeedTag,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Counter-based per-(frame, pixel) stream: the same (seed, frame, pixel)
/// triple always yields the same draws, independent of thread count.
fn stream_rng(seed: u64, frame: u64, pixel: u64) -> ChaCha8Rng {
    let mixed = splitmix64(splitmix64(seed ^ splitmix64(frame)) ^ splitmix64(pixel ^ 0xa5a5_a5a5_5a5a_5a5a));
    ChaCha8Rng::seed_from_u64(mixed)
}

/// Draw the recorded count for one pixel: `N ~ Poisson(n_bar_j)`, then `k`
/// by inverse CDF from the exact channel row `p(. | N)`.
pub fn sample_pixel(n_bar_j: f64, cfg: &DetectorConfig, seed: u64, frame: u64, pixel: u64) -> Result<u32> {
    if !cfg.digitization {
        return Err(Error::Config("frame sampling requires a digitized detector".into()));
    }
    let mut rng = stream_rng(seed, frame, pixel);
    let n: f64 = if n_bar_j > 0.0 {
        rand_distr::Poisson::new(n_bar_j)
            .map_err(|e| Error::Domain(format!("invalid Poisson mean {n_bar_j}: {e}")))?
            .sample(&mut rng)
    } else {
        0.0
    };
    let mu = mean_response_unchecked(n, cfg);
    if cfg.sigma == 0.0 {
        return Ok(mu.round().clamp(0.0, cfg.k_max as f64 - 1.0) as u32);
    }
    let (lo, hi) = cfg.band(mu);
    let inv = 1.0 / (2.0 * cfg.sigma * cfg.sigma);
    let mut z = 0.0;
    for k in lo..=hi {
        let d = k as f64 - mu;
        z += (-d * d * inv).exp();
    }
    let u: f64 = rng.gen::<f64>() * z;
    let mut acc = 0.0;
    for k in lo..=hi {
        let d = k as f64 - mu;
        acc += (-d * d * inv).exp();
        if acc >= u {
            return Ok(k as u32);
        }
    }
    Ok(hi as u32)
}

/// Simulate one exposure: every pixel sampled independently from its own
/// counter-based stream.
pub fn sample_frame(scenario: &Scenario, seed: u64, frame: u64) -> Result<Frame> {
    let n_bars = pixel_mean_photons(&scenario.beam, &scenario.scheme, &scenario.grid);
    let counts = n_bars
        .iter()
        .enumerate()
        .map(|(j, &n)| sample_pixel(n, &scenario.detector, seed, frame, j as u64))
        .collect::<Result<Vec<u32>>>()?;
    Ok(Frame { counts, seed_tag: SeedTag { seed, frame } })
}

/// Result of a maximum-likelihood fit on one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleEstimate {
    pub g_hat: f64,
    /// Set when the coarse scan peaked on the interval boundary.
    pub bracket_failure: bool,
}

const COARSE_POINTS: usize = 64;

/// Maximize the frame log-likelihood `l(g) = sum_j ln p(k_j | g)` over the
/// search interval: 64-point coarse scan (guards multimodality), then
/// golden-section refinement to absolute tolerance `1e-6 * w`.
pub fn mle_estimate(frame: &Frame, scenario: &Scenario, interval: (f64, f64)) -> Result<MleEstimate> {
    let (a, b) = (interval.0.min(interval.1), interval.0.max(interval.1));
    if !(b > a) {
        return Err(Error::Config(format!("empty MLE search interval [{a}, {b}]")));
    }
    if frame.counts.len() != scenario.grid.len() {
        return Err(Error::Config("frame length does not match grid".into()));
    }
    let cfg = &scenario.detector;
    if !cfg.digitization {
        return Err(Error::Config("MLE over recorded counts requires a digitized detector".into()));
    }

    // Per-pixel photon range covering the whole g interval, and the
    // g-independent channel likelihood c_j[N] = p(k_j | N) over that range.
    let m = scenario.grid.len();
    let probe_means: Vec<Vec<f64>> = linspace(a, b, 5)
        .into_iter()
        .map(|g| pixel_mean_photons(&scenario.beam.with_shift(g), &scenario.scheme, &scenario.grid))
        .collect();
    let inv = if cfg.sigma > 0.0 { 1.0 / (2.0 * cfg.sigma * cfg.sigma) } else { 0.0 };
    let mut ranges = Vec::with_capacity(m);
    let mut chan = Vec::with_capacity(m);
    for j in 0..m {
        let n_min = probe_means.iter().map(|v| v[j]).fold(f64::INFINITY, f64::min);
        let n_max = probe_means.iter().map(|v| v[j]).fold(0.0f64, f64::max);
        let lo = poisson_window(n_min, &scenario.policy).lo;
        let hi = poisson_window(n_max, &scenario.policy).hi;
        let k = frame.counts[j] as f64;
        let c: Vec<f64> = (lo..=hi)
            .map(|n| {
                let mu = mean_response_unchecked(n as f64, cfg);
                if cfg.sigma == 0.0 {
                    let kstar = mu.round().clamp(0.0, cfg.k_max as f64 - 1.0);
                    if kstar == k {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    let (blo, bhi) = cfg.band(mu);
                    if frame.counts[j] < blo as u32 || frame.counts[j] > bhi as u32 {
                        return 0.0;
                    }
                    let mut z = 0.0;
                    for kk in blo..=bhi {
                        let d = kk as f64 - mu;
                        z += (-d * d * inv).exp();
                    }
                    let d = k - mu;
                    (-d * d * inv).exp() / z
                }
            })
            .collect();
        ranges.push((lo, hi));
        chan.push(c);
    }

    let mut loglik = |g: f64| -> f64 {
        let n_bars = pixel_mean_photons(&scenario.beam.with_shift(g), &scenario.scheme, &scenario.grid);
        let mut l = 0.0;
        for j in 0..m {
            let (lo, hi) = ranges[j];
            let pmf = poisson_pmf_range(lo, hi, n_bars[j]);
            let pk: f64 = pmf.iter().zip(&chan[j]).map(|(p, c)| p * c).sum();
            l += if pk > 0.0 { pk.ln() } else { -1e300 };
        }
        l
    };

    let gs = linspace(a, b, COARSE_POINTS);
    let mut best = 0usize;
    let mut best_l = f64::NEG_INFINITY;
    for (i, &g) in gs.iter().enumerate() {
        let l = loglik(g);
        if l > best_l {
            best_l = l;
            best = i;
        }
    }
    let bracket_failure = best == 0 || best == COARSE_POINTS - 1;
    let lo = gs[best.saturating_sub(1)];
    let hi = gs[(best + 1).min(COARSE_POINTS - 1)];
    let tol = 1e-6 * scenario.beam.w;
    let g_hat = if hi > lo { golden_section_max(&mut loglik, lo, hi, tol) } else { gs[best] };
    Ok(MleEstimate { g_hat, bracket_failure })
}

/// Linear calibration of the raw centroid against the true shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComCalibration {
    pub offset: f64,
    pub scale: f64,
}

impl ComCalibration {
    /// Raw centroid passthrough (offset 0, scale 1).
    pub fn identity() -> Self {
        Self { offset: 0.0, scale: 1.0 }
    }
}

/// Count-weighted mean pixel position of a frame (uncalibrated).
pub fn raw_centroid(frame: &Frame, grid: &PixelGrid) -> Option<f64> {
    let total: f64 = frame.counts.iter().map(|&k| k as f64).sum();
    if total <= 0.0 {
        return None;
    }
    let num: f64 = frame
        .counts
        .iter()
        .enumerate()
        .map(|(j, &k)| grid.center(j) * k as f64)
        .sum();
    Some(num / total)
}

/// Center-of-mass estimate `(centroid - offset) / scale`; `None` for an
/// all-zero frame.
pub fn com_estimate(frame: &Frame, grid: &PixelGrid, cal: &ComCalibration) -> Option<f64> {
    raw_centroid(frame, grid).map(|c| (c - cal.offset) / cal.scale)
}

/// Calibrate the centroid estimator by regressing the noise-free expected
/// centroid against the true shift over 11 values spanning `+-5 / sqrt(F)`.
pub fn calibrate_com(scenario: &Scenario) -> Result<ComCalibration> {
    let fi = fisher_total(
        &scenario.beam,
        &scenario.scheme,
        &scenario.grid,
        &scenario.detector,
        &scenario.policy,
    )?;
    if fi.total <= 0.0 {
        return Err(Error::Config("cannot calibrate centroid: zero Fisher information".into()));
    }
    let half = 5.0 / fi.total.sqrt();
    let gs = linspace(scenario.beam.g - half, scenario.beam.g + half, 11);
    let mut xs = Vec::with_capacity(11);
    let mut ys = Vec::with_capacity(11);
    for &g in &gs {
        let n_bars =
            pixel_mean_photons(&scenario.beam.with_shift(g), &scenario.scheme, &scenario.grid);
        let (mut num, mut den) = (0.0, 0.0);
        for (j, &n) in n_bars.iter().enumerate() {
            let e = crate::detector::expected_counts(n, &scenario.detector, &scenario.policy)?;
            num += scenario.grid.center(j) * e;
            den += e;
        }
        if den <= 0.0 {
            return Err(Error::Config("cannot calibrate centroid: dark camera".into()));
        }
        xs.push(g);
        ys.push(num / den);
    }
    // Least-squares line y = offset + scale * x.
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let scale = sxy / sxx;
    if !(scale.abs() > 1e-12) {
        return Err(Error::Config("centroid calibration degenerate: zero slope".into()));
    }
    Ok(ComCalibration { offset: my - scale * mx, scale })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Mle,
    CenterOfMass,
}

/// Summary of an estimator benchmark against the Cramér–Rao bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub estimator: EstimatorKind,
    pub n_frames: usize,
    pub mean_estimate: f64,
    pub variance: f64,
    /// Cramér–Rao reference `1 / F`.
    pub crb: f64,
    /// `variance * F`; 1 for an efficient unbiased estimator.
    pub efficiency: f64,
    pub bracket_failures: usize,
    /// Frames with no usable estimate (all-zero frames for the centroid).
    pub missing: usize,
    /// False when more than 1% of frames had bracket failures.
    pub reliable: bool,
}

/// Run sampler + estimator over `n_frames` frames; fully reproducible from
/// the seed and independent of thread count.
pub fn benchmark(
    estimator: EstimatorKind,
    scenario: &Scenario,
    n_frames: usize,
    seed: u64,
) -> Result<EstimatorReport> {
    if n_frames < 100 {
        return Err(Error::Config(format!("benchmark needs at least 100 frames, got {n_frames}")));
    }
    let fi = fisher_total(
        &scenario.beam,
        &scenario.scheme,
        &scenario.grid,
        &scenario.detector,
        &scenario.policy,
    )?;
    let crb = if fi.total > 0.0 { 1.0 / fi.total } else { f64::INFINITY };

    let cal = match estimator {
        EstimatorKind::CenterOfMass => Some(calibrate_com(scenario)?),
        EstimatorKind::Mle => None,
    };
    // Default search interval: +-20 g around 0, widened to several CRB
    // standard deviations so low-information setups keep the truth bracketed.
    let half = (20.0 * scenario.beam.g.abs()).max(8.0 * crb.sqrt());
    let interval = (scenario.beam.g - half, scenario.beam.g + half);

    let per_frame: Vec<(Option<f64>, bool)> = (0..n_frames as u64)
        .into_par_iter()
        .map(|i| -> Result<(Option<f64>, bool)> {
            let frame = sample_frame(scenario, seed, i)?;
            match estimator {
                EstimatorKind::Mle => {
                    let est = mle_estimate(&frame, scenario, interval)?;
                    Ok((Some(est.g_hat), est.bracket_failure))
                }
                EstimatorKind::CenterOfMass => {
                    Ok((com_estimate(&frame, &scenario.grid, cal.as_ref().unwrap()), false))
                }
            }
        })
        .collect::<Result<_>>()?;

    let estimates: Vec<f64> = per_frame.iter().filter_map(|(e, _)| *e).collect();
    let missing = n_frames - estimates.len();
    let bracket_failures = per_frame.iter().filter(|(_, b)| *b).count();
    if estimates.is_empty() {
        return Err(Error::Config("no usable estimates produced".into()));
    }
    let n = estimates.len() as f64;
    let mean: f64 = estimates.iter().sum::<f64>() / n;
    let variance: f64 = estimates.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1.0);
    Ok(EstimatorReport {
        estimator,
        n_frames,
        mean_estimate: mean,
        variance,
        crb,
        efficiency: variance * fi.total,
        bracket_failures,
        missing,
        reliable: (bracket_failures as f64) <= 0.01 * n_frames as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::Saturation;
    use approx::assert_relative_eq;

    fn scenario(n_bar: f64, g: f64, scheme: MeasurementScheme, cfg: DetectorConfig) -> Scenario {
        Scenario {
            beam: BeamSpec::new(1.0, n_bar, g).unwrap(),
            scheme,
            grid: PixelGrid::symmetric(100, 5.0).unwrap(),
            detector: cfg,
            policy: TruncationPolicy::default(),
        }
    }

    #[test]
    fn dark_noiseless_frame_is_all_zero() {
        let cfg = DetectorConfig::saturating(256, 500.0, 0.0).unwrap();
        let sc = scenario(0.0, 0.0, MeasurementScheme::cm(), cfg);
        let f = sample_frame(&sc, 1, 0).unwrap();
        assert!(f.counts.iter().all(|&k| k == 0));
    }

    #[test]
    fn frames_are_reproducible_and_distinct() {
        let cfg = DetectorConfig::saturating(256, 500.0, 12.8).unwrap();
        let sc = scenario(2000.0, 0.01, MeasurementScheme::cm(), cfg);
        let a = sample_frame(&sc, 42, 7).unwrap();
        let b = sample_frame(&sc, 42, 7).unwrap();
        assert_eq!(a, b);
        let c = sample_frame(&sc, 42, 8).unwrap();
        assert_ne!(a.counts, c.counts);
    }

    #[test]
    fn empirical_mean_counts_track_expected_counts() {
        let cfg = DetectorConfig::saturating(256, 500.0, 12.8).unwrap();
        let sc = scenario(2000.0, 0.01, MeasurementScheme::cm(), cfg);
        let n_bars = pixel_mean_photons(&sc.beam, &sc.scheme, &sc.grid);
        let frames = 10_000u64;
        // Three informative pixels with E[k] > 5.
        for &j in &[40usize, 50, 60] {
            let mut acc = 0.0;
            for i in 0..frames {
                acc += sample_pixel(n_bars[j], &sc.detector, 9, i, j as u64).unwrap() as f64;
            }
            let emp = acc / frames as f64;
            let want = crate::detector::expected_counts(n_bars[j], &sc.detector, &sc.policy).unwrap();
            assert!(want > 5.0);
            assert_relative_eq!(emp, want, max_relative = 0.02);
        }
    }

    #[test]
    fn symmetric_frame_has_zero_centroid() {
        let grid = PixelGrid::symmetric(8, 4.0).unwrap();
        let frame = Frame {
            counts: vec![1, 2, 5, 9, 9, 5, 2, 1],
            seed_tag: SeedTag { seed: 0, frame: 0 },
        };
        let c = raw_centroid(&frame, &grid).unwrap();
        assert!(c.abs() < 1e-12);
        assert!(com_estimate(&frame, &grid, &ComCalibration::identity()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn all_zero_frame_has_no_centroid() {
        let grid = PixelGrid::symmetric(4, 2.0).unwrap();
        let frame = Frame { counts: vec![0; 4], seed_tag: SeedTag { seed: 0, frame: 0 } };
        assert!(raw_centroid(&frame, &grid).is_none());
    }

    #[test]
    fn com_calibration_near_identity_in_linear_regime() {
        // No saturation, generous headroom, noiseless: centroid responds to g
        // with scale ~ a_w and offset ~ 0.
        let cfg = DetectorConfig::new(4096, Saturation::Linear { n_ref: 400.0 }, 0.0, true).unwrap();
        let scheme = MeasurementScheme::wva(2.4).unwrap();
        let sc = scenario(2000.0, 0.01, scheme, cfg);
        let cal = calibrate_com(&sc).unwrap();
        assert_relative_eq!(cal.scale, scheme.a_w, max_relative = 0.05);
        assert!(cal.offset.abs() < 0.01);
    }

    #[test]
    fn mle_concentrates_near_truth_on_bright_frame() {
        // Linear response sized so the peak pixel maps near the top level.
        let cfg = DetectorConfig::new(256, Saturation::Linear { n_ref: 4500.0 }, 2.56, true).unwrap();
        let sc = scenario(1e5, 0.01, MeasurementScheme::cm(), cfg);
        let fi = fisher_total(&sc.beam, &sc.scheme, &sc.grid, &sc.detector, &sc.policy).unwrap();
        let sd = (1.0 / fi.total).sqrt();
        let frame = sample_frame(&sc, 5, 0).unwrap();
        let est = mle_estimate(&frame, &sc, (0.01 - 30.0 * sd, 0.01 + 30.0 * sd)).unwrap();
        assert!(!est.bracket_failure);
        assert!((est.g_hat - 0.01).abs() < 3.0 * sd, "g_hat {} vs sd {}", est.g_hat, sd);
    }

    #[test]
    fn mle_average_consistent_fig1b_config() {
        let cfg = DetectorConfig::saturating(256, 500.0, 12.8).unwrap();
        let sc = scenario(2000.0, 0.01, MeasurementScheme::wva(2.4).unwrap(), cfg);
        let fi = fisher_total(&sc.beam, &sc.scheme, &sc.grid, &sc.detector, &sc.policy).unwrap();
        let sd = (1.0 / fi.total).sqrt();
        let n = 1000u64;
        let sum: f64 = (0..n)
            .into_par_iter()
            .map(|i| {
                let frame = sample_frame(&sc, 77, i).unwrap();
                mle_estimate(&frame, &sc, (0.01 - 8.0 * sd, 0.01 + 8.0 * sd)).unwrap().g_hat
            })
            .sum();
        let mean = sum / n as f64;
        let se = sd / (n as f64).sqrt();
        assert!(
            (mean - 0.01).abs() < 5.0 * se,
            "mean {mean} vs truth 0.01, se {se}"
        );
    }

    #[test]
    fn benchmark_is_bit_reproducible() {
        let cfg = DetectorConfig::saturating(256, 500.0, 12.8).unwrap();
        let sc = scenario(2000.0, 0.01, MeasurementScheme::cm(), cfg);
        let a = benchmark(EstimatorKind::CenterOfMass, &sc, 200, 123).unwrap();
        let b = benchmark(EstimatorKind::CenterOfMass, &sc, 200, 123).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn benchmark_rejects_tiny_sample() {
        let cfg = DetectorConfig::saturating(256, 500.0, 12.8).unwrap();
        let sc = scenario(2000.0, 0.01, MeasurementScheme::cm(), cfg);
        assert!(benchmark(EstimatorKind::CenterOfMass, &sc, 10, 1).is_err());
    }

    #[test]
    fn estimates_at_origin_are_unbiased() {
        let cfg = DetectorConfig::saturating(256, 500.0, 12.8).unwrap();
        let sc = scenario(2000.0, 0.0, MeasurementScheme::cm(), cfg);
        let rep = benchmark(EstimatorKind::CenterOfMass, &sc, 2000, 31).unwrap();
        let se = (rep.variance / rep.n_frames as f64).sqrt();
        assert!(rep.mean_estimate.abs() < 3.0 * se, "mean {} se {se}", rep.mean_estimate);
    }

    #[test]
    fn saturated_centroid_is_consistent_but_suboptimal() {
        // n_bar >> N_sat clips the profile core; the calibrated centroid
        // stays consistent but cannot reach the CRB, which is carried by the
        // unsaturated flanks.
        let cfg = DetectorConfig::saturating(256, 500.0, 2.56).unwrap();
        let sc = scenario(2e6, 0.01, MeasurementScheme::cm(), cfg);
        let rep = benchmark(EstimatorKind::CenterOfMass, &sc, 500, 17).unwrap();
        let se = (rep.variance / rep.n_frames as f64).sqrt();
        assert!((rep.mean_estimate - 0.01).abs() < 4.0 * se, "mean {}", rep.mean_estimate);
        assert!(rep.efficiency > 1.3, "efficiency {}", rep.efficiency);
    }
}
