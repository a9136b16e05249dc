//! Shared numerical helpers: Gaussian CDF, log-space Poisson PMF evaluation,
//! golden-section search and grid generation.

use libm::erf;
use statrs::function::gamma::ln_gamma;

pub const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Standard normal CDF scaled to mean `mu`, std-dev `s`.
pub fn gauss_cdf(x: f64, mu: f64, s: f64) -> f64 {
    0.5 * (1.0 + erf((x - mu) / (s * SQRT_2)))
}

/// Mass of a Gaussian with mean `mu`, std-dev `s` on the interval `[a, b]`.
pub fn gauss_mass(a: f64, b: f64, mu: f64, s: f64) -> f64 {
    gauss_cdf(b, mu, s) - gauss_cdf(a, mu, s)
}

/// log PoissonPMF(n; lambda), stable for lambda up to ~1e8.
pub fn poisson_ln_pmf(n: u64, lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    (n as f64) * lambda.ln() - lambda - ln_gamma(n as f64 + 1.0)
}

/// Poisson PMF values on the contiguous range `[lo, hi]`, evaluated in
/// log-space at the in-range mode and extended by the term recurrence.
pub fn poisson_pmf_range(lo: u64, hi: u64, lambda: f64) -> Vec<f64> {
    assert!(hi >= lo);
    let len = (hi - lo + 1) as usize;
    if lambda <= 0.0 {
        let mut v = vec![0.0; len];
        if lo == 0 {
            v[0] = 1.0;
        }
        return v;
    }
    let anchor = (lambda.floor() as u64).clamp(lo, hi);
    let mut v = vec![0.0; len];
    let ai = (anchor - lo) as usize;
    v[ai] = poisson_ln_pmf(anchor, lambda).exp();
    // pmf(n+1) = pmf(n) * lambda / (n+1)
    for i in ai + 1..len {
        let n = lo + i as u64;
        v[i] = v[i - 1] * lambda / n as f64;
    }
    for i in (0..ai).rev() {
        let n = lo + i as u64 + 1;
        v[i] = v[i + 1] * n as f64 / lambda;
    }
    v
}

/// Maximize a unimodal function on `[a, b]` by golden-section search.
/// Returns the abscissa of the maximum to absolute tolerance `tol`.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (a.min(b), a.max(b));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// `points` values spaced linearly on `[min, max]`, endpoints included.
pub fn linspace(min: f64, max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![min],
        _ => (0..points)
            .map(|i| min + (max - min) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// `points` values spaced logarithmically on `[min, max]`, endpoints included.
pub fn logspace(min: f64, max: f64, points: usize) -> Vec<f64> {
    linspace(min.ln(), max.ln(), points)
        .into_iter()
        .map(f64::exp)
        .collect()
}
