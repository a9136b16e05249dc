//! Fisher information available to a realistic camera — pixelated,
//! saturable, digitized and noisy — measuring a small transverse beam shift,
//! comparing conventional measurement against weak value amplification.
//!
//! The model composes three layers per pixel:
//! 1. a Gaussian beam delivering Poisson photon counts ([`beam`]),
//! 2. a photoelectron channel with saturating mean response, intrinsic
//!    Gaussian noise and digitization ([`detector`]),
//! 3. marginalization and the Fisher information sum ([`fisher`]).
//!
//! [`estimator`] adds Monte-Carlo frame simulation with maximum-likelihood
//! and center-of-mass estimators benchmarked against the Cramér–Rao bound,
//! and [`experiment`] provides configuration, presets, sweeps and the
//! imperfection advantage matrix.

pub mod beam;
pub mod detector;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod fisher;
pub mod math;

pub use beam::{gaussian_density, pixel_mean_photons, pixel_mean_photons_deriv, BeamSpec, MeasurementScheme, PixelGrid, SchemeKind};
pub use detector::{channel_row, expected_counts, mean_response, ChannelSlice, DetectorConfig, Saturation};
pub use error::{Error, Result};
pub use estimator::{
    benchmark, calibrate_com, com_estimate, mle_estimate, sample_frame, ComCalibration,
    EstimatorKind, EstimatorReport, Frame, Scenario, SeedTag,
};
pub use experiment::{
    find_optimal_aw, preset, render_profiles, run_aw_scan, run_effect_matrix, run_estimate,
    run_fi_sweep, Effect, EffectMatrix, ExperimentConfig, OptimalAw, SweepResult, SweepRow,
    PRESET_NAMES,
};
pub use fisher::{
    fisher_fd_check, fisher_per_pixel, fisher_total, outcome_probs, poisson_window, FdCheck,
    FiResult, OutcomeProbs, PixelDiagnostics, PoissonWindow, TruncationPolicy,
};
