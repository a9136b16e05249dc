//! Optical beam model: Gaussian transverse profile, measurement scheme
//! (conventional vs weak-value-amplified), and the per-pixel mean photon
//! numbers seen by a finite camera.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{gauss_mass, SQRT_2};

const SQRT_TWO_PI: f64 = 2.506_628_274_631_000_7;

/// Gaussian beam with total mean photon number `n_bar` and true shift `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamSpec {
    /// Beam width (length units).
    pub w: f64,
    /// Total mean photon number of the incident beam.
    pub n_bar: f64,
    /// True transverse shift to be estimated.
    pub g: f64,
    /// Nominal beam center.
    pub center: f64,
}

impl BeamSpec {
    pub fn new(w: f64, n_bar: f64, g: f64) -> Result<Self> {
        Self::with_center(w, n_bar, g, 0.0)
    }

    pub fn with_center(w: f64, n_bar: f64, g: f64, center: f64) -> Result<Self> {
        if !(w > 0.0) {
            return Err(Error::Domain(format!("beam width must be positive, got {w}")));
        }
        if !(n_bar >= 0.0) {
            return Err(Error::Domain(format!("n_bar must be non-negative, got {n_bar}")));
        }
        Ok(Self { w, n_bar, g, center })
    }

    /// Same beam with a different shift; used by finite-difference checks.
    pub fn with_shift(&self, g: f64) -> Self {
        Self { g, ..*self }
    }

    /// Same beam with a different brightness; used by sweeps.
    pub fn with_n_bar(&self, n_bar: f64) -> Self {
        Self { n_bar, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Cm,
    Wva,
}

/// Measurement scheme: conventional (direct) or weak-value amplified.
///
/// WVA trades brightness for shift amplification: the beam arriving at the
/// camera is shifted by `a_w * g` but dimmed by the post-selection
/// probability `p_ps = 1 / (1 + a_w^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementScheme {
    pub kind: SchemeKind,
    /// Real weak value; 1 for CM.
    pub a_w: f64,
    /// Post-selection probability in (0, 1]; 1 for CM.
    pub p_ps: f64,
}

impl MeasurementScheme {
    /// Conventional measurement: no post-selection.
    pub fn cm() -> Self {
        Self { kind: SchemeKind::Cm, a_w: 1.0, p_ps: 1.0 }
    }

    /// WVA scheme from a real weak value with `|a_w| >= 1`.
    ///
    /// The post-selection probability is forced by the pre-selected state
    /// family: `p_ps = 1 / (1 + a_w^2)`.
    pub fn wva(a_w: f64) -> Result<Self> {
        if !(a_w.abs() >= 1.0) {
            return Err(Error::Domain(format!(
                "weak value must satisfy |a_w| >= 1, got {a_w}"
            )));
        }
        Ok(Self { kind: SchemeKind::Wva, a_w, p_ps: 1.0 / (1.0 + a_w * a_w) })
    }

    /// Stable label used in CSV output ("cm" or e.g. "wva_2.4").
    pub fn label(&self) -> String {
        match self.kind {
            SchemeKind::Cm => "cm".to_string(),
            SchemeKind::Wva => format!("wva_{}", self.a_w),
        }
    }

    /// Shift of the beam arriving at the camera for true shift `g`.
    pub fn effective_shift(&self, g: f64) -> f64 {
        self.a_w * g
    }
}

/// Camera geometry: `m` uniform pixel bins spanning `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelGrid {
    m: usize,
    x_min: f64,
    x_max: f64,
}

impl PixelGrid {
    pub fn new(m: usize, x_min: f64, x_max: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Config("pixel count must be positive".into()));
        }
        if !(x_max > x_min) {
            return Err(Error::Config(format!(
                "camera span must be non-empty, got [{x_min}, {x_max}]"
            )));
        }
        Ok(Self { m, x_min, x_max })
    }

    /// Symmetric grid spanning `[-half_span, +half_span]`.
    pub fn symmetric(m: usize, half_span: f64) -> Result<Self> {
        Self::new(m, -half_span, half_span)
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn bin_width(&self) -> f64 {
        (self.x_max - self.x_min) / self.m as f64
    }

    /// Lower edge of bin `j` (edge `m` is `x_max`).
    pub fn edge(&self, j: usize) -> f64 {
        debug_assert!(j <= self.m);
        if j == self.m {
            self.x_max
        } else {
            self.x_min + (self.x_max - self.x_min) * j as f64 / self.m as f64
        }
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.m).map(|j| self.edge(j)).collect()
    }

    pub fn center(&self, j: usize) -> f64 {
        0.5 * (self.edge(j) + self.edge(j + 1))
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.m).map(|j| self.center(j)).collect()
    }
}

/// Normalized Gaussian spatial density `exp(-x^2 / 2w^2) / (w sqrt(2 pi))`.
pub fn gaussian_density(x: f64, w: f64) -> Result<f64> {
    if !(w > 0.0) {
        return Err(Error::Domain(format!("width must be positive, got {w}")));
    }
    Ok(density_unchecked(x, w))
}

#[inline]
pub(crate) fn density_unchecked(x: f64, w: f64) -> f64 {
    let z = x / w;
    (-0.5 * z * z).exp() / (w * SQRT_TWO_PI)
}

/// Mean photon number reaching each pixel: `n_bar * p_ps` times the Gaussian
/// mass of the (shifted) beam in the bin, via error-function differences.
pub fn pixel_mean_photons(
    beam: &BeamSpec,
    scheme: &MeasurementScheme,
    grid: &PixelGrid,
) -> Vec<f64> {
    let s = scheme.effective_shift(beam.g) + beam.center;
    let amp = beam.n_bar * scheme.p_ps;
    // Evaluate each edge CDF once so adjacent bins share boundary values.
    let cdf: Vec<f64> = (0..=grid.len())
        .map(|j| 0.5 * (1.0 + libm::erf((grid.edge(j) - s) / (beam.w * SQRT_2))))
        .collect();
    (0..grid.len())
        .map(|j| (amp * (cdf[j + 1] - cdf[j])).max(0.0))
        .collect()
}

/// Analytic derivative of `pixel_mean_photons` with respect to `g`.
///
/// `d n_bar_j / d g = n_bar * p_ps * a_w * [rho(edge_j - s) - rho(edge_{j+1} - s)]`.
pub fn pixel_mean_photons_deriv(
    beam: &BeamSpec,
    scheme: &MeasurementScheme,
    grid: &PixelGrid,
) -> Vec<f64> {
    let s = scheme.effective_shift(beam.g) + beam.center;
    let amp = beam.n_bar * scheme.p_ps * scheme.a_w;
    let rho: Vec<f64> = (0..=grid.len())
        .map(|j| density_unchecked(grid.edge(j) - s, beam.w))
        .collect();
    (0..grid.len()).map(|j| amp * (rho[j] - rho[j + 1])).collect()
}

/// Gaussian mass of the (shifted, dimmed) beam over an arbitrary interval.
/// Convenience for diagnostics and oracles.
pub fn beam_mass(beam: &BeamSpec, scheme: &MeasurementScheme, a: f64, b: f64) -> f64 {
    beam.n_bar * scheme.p_ps * gauss_mass(a, b, scheme.effective_shift(beam.g) + beam.center, beam.w)
}
