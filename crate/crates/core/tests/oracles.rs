//! Independent numerical oracles: everything here recomputes model
//! quantities from scratch (quadrature, direct summation, explicit
//! recurrences) without touching the library's own evaluation paths.

use approx::assert_relative_eq;
use satcam_core::*;

const SQRT_TAU: f64 = 2.5066282746310002; // sqrt(2*pi)

fn density(x: f64, w: f64) -> f64 {
    (-x * x / (2.0 * w * w)).exp() / (w * SQRT_TAU)
}

/// Composite Simpson integration of the beam density over `[a, b]`.
fn simpson_mass(a: f64, b: f64, shift: f64, w: f64) -> f64 {
    let n = 400; // even
    let h = (b - a) / n as f64;
    let mut acc = density(a - shift, w) + density(b - shift, w);
    for i in 1..n {
        let x = a + i as f64 * h;
        acc += density(x - shift, w) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

#[test]
fn pixel_means_match_simpson_quadrature() {
    let beam = BeamSpec::new(1.0, 2000.0, 0.01).unwrap();
    let grid = PixelGrid::symmetric(50, 5.0).unwrap();
    for scheme in [MeasurementScheme::cm(), MeasurementScheme::wva(2.4).unwrap()] {
        let means = pixel_mean_photons(&beam, &scheme, &grid);
        let shift = scheme.a_w * beam.g;
        let amp = beam.n_bar * scheme.p_ps;
        for j in 0..grid.len() {
            let want = amp * simpson_mass(grid.edge(j), grid.edge(j + 1), shift, beam.w);
            // Bin masses are guaranteed to 1e-12 absolute; deep-tail bins
            // cannot do better relatively (1 + erf cancellation).
            let tol = 1e-12 * amp + 1e-10 * want;
            assert!((means[j] - want).abs() <= tol, "pixel {j}: {} vs {want}", means[j]);
        }
    }
}

/// Plain-f64 Poisson PMF over `0..=hi` built from the `exp(-lambda)` anchor
/// by the forward recurrence; exact enough for tiny means.
fn poisson_pmf_direct(hi: u64, lambda: f64) -> Vec<f64> {
    let mut v = vec![0.0; (hi + 1) as usize];
    v[0] = (-lambda).exp();
    for n in 1..=hi as usize {
        v[n] = v[n - 1] * lambda / n as f64;
    }
    v
}

/// Exhaustive per-pixel outcome distribution and FI for the saturating noisy
/// channel: triple sum over photon number, level and the normalization.
fn brute_force_fi(n_bar: f64, dn_bar: f64, k_max: usize, n_sat: f64, sigma: f64) -> f64 {
    let hi = 120u64;
    let pmf = poisson_pmf_direct(hi, n_bar);
    let mut p = vec![0.0; k_max];
    let mut dp = vec![0.0; k_max];
    for n in 0..=hi {
        let pn = pmf[n as usize];
        let dpn = if n_bar > 0.0 { pn * (n as f64 / n_bar - 1.0) * dn_bar } else { 0.0 };
        let mu = k_max as f64 * (1.0 - (-(n as f64) / n_sat).exp());
        let weights: Vec<f64> =
            (0..k_max).map(|k| (-(k as f64 - mu).powi(2) / (2.0 * sigma * sigma)).exp()).collect();
        let z: f64 = weights.iter().sum();
        for k in 0..k_max {
            p[k] += pn * weights[k] / z;
            dp[k] += dpn * weights[k] / z;
        }
    }
    (0..k_max).map(|k| dp[k] * dp[k] / p[k]).sum()
}

#[test]
fn tiny_camera_matches_exhaustive_enumeration() {
    // 3 pixels, 4 levels, sigma = 1, n_sat = 2, n_bar = 3: everything in this
    // instance can be enumerated exactly.
    let (w, g, n_bar) = (1.0, 0.01, 3.0);
    let beam = BeamSpec::new(w, n_bar, g).unwrap();
    let grid = PixelGrid::symmetric(3, 1.5).unwrap();
    let cfg = DetectorConfig::saturating(4, 2.0, 1.0).unwrap();
    let policy = TruncationPolicy::default();

    for scheme in [MeasurementScheme::cm(), MeasurementScheme::wva(2.4).unwrap()] {
        let shift = scheme.a_w * g;
        let amp = n_bar * scheme.p_ps;
        let fi = fisher_total(&beam, &scheme, &grid, &cfg, &policy).unwrap();
        let mut want_total = 0.0;
        for j in 0..grid.len() {
            let (e0, e1) = (grid.edge(j), grid.edge(j + 1));
            let mean_j = amp * simpson_mass(e0, e1, shift, w);
            // Derivative of the bin mass in g: boundary density difference.
            let dmean_j = amp * scheme.a_w * (density(e0 - shift, w) - density(e1 - shift, w));
            let want = brute_force_fi(mean_j, dmean_j, 4, 2.0, 1.0);
            assert_relative_eq!(fi.per_pixel[j], want, max_relative = 1e-9);
            want_total += want;
        }
        assert_relative_eq!(fi.total, want_total, max_relative = 1e-9);
    }
}

#[test]
fn relabeling_fi_matches_direct_poisson_sum() {
    // Digitization disabled: the analytic Poisson FI dn^2/n, and a direct
    // windowless sum, must both agree with the engine.
    let cfg = DetectorConfig::new(64, Saturation::Saturating { n_sat: 7.0 }, 0.0, false).unwrap();
    let policy = TruncationPolicy::default();
    let (n_bar, dn_bar) = (9.0, 1.3);
    let pmf = poisson_pmf_direct(120, n_bar);
    let direct: f64 = pmf
        .iter()
        .enumerate()
        .map(|(n, &pn)| {
            let score = (n as f64 - n_bar) / n_bar;
            pn * score * score * dn_bar * dn_bar
        })
        .sum();
    let (f, _) = fisher_per_pixel(n_bar, dn_bar, &cfg, &policy).unwrap();
    assert_relative_eq!(f, direct, max_relative = 1e-10);
    assert_relative_eq!(f, dn_bar * dn_bar / n_bar, max_relative = 1e-10);
}

#[test]
fn expected_counts_match_direct_marginal() {
    let cfg = DetectorConfig::saturating(16, 5.0, 1.5).unwrap();
    let policy = TruncationPolicy::default();
    let n_bar = 4.0;
    let pmf = poisson_pmf_direct(80, n_bar);
    let mut want = 0.0;
    for n in 0..=80u64 {
        let mu = 16.0 * (1.0 - (-(n as f64) / 5.0).exp());
        let weights: Vec<f64> =
            (0..16).map(|k| (-(k as f64 - mu).powi(2) / (2.0 * 1.5 * 1.5)).exp()).collect();
        let z: f64 = weights.iter().sum();
        let row_mean: f64 = (0..16).map(|k| k as f64 * weights[k] / z).sum();
        want += pmf[n as usize] * row_mean;
    }
    let got = expected_counts(n_bar, &cfg, &policy).unwrap();
    assert_relative_eq!(got, want, max_relative = 1e-9);
}
