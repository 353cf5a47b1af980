//! Estimation of the jump activity index of a discretely observed
//! semimartingale from counts of large increments, together with the
//! simulation, calibration, bias-correction, Monte Carlo, and tick-data
//! machinery needed to exercise the estimators end to end.
//!
//! The core quantity is the exceedance count `U(varpi, alpha)`: the number
//! of increments larger in magnitude than `alpha * delta^varpi`. Comparing
//! the count at two cutoffs (or two sampling frequencies) identifies the
//! activity index of the jump component without requiring a parametric
//! model.

pub mod bias;
pub mod error;
pub mod estimators;
pub mod levy;
pub mod math;
pub mod mc;
pub mod sim;
pub mod ticks;

pub use bias::{
    closed_form_correction, fit_bias_regression, regression_correction, CorrectionOutcome,
    RegressionFit,
};
pub use error::{Error, Result};
pub use estimators::{
    asymptotic_variance, avg_estimator, beta_bar_oracle, beta_hat_two_cutoffs,
    beta_hat_two_scales, beta_hat_two_scales_with_phase, count_exceedances, select_cutoffs,
    truncated_variance, EstimandContext, EstimateResult, EstimatorConfig, Method,
};
pub use levy::{
    compound_poisson_series, levy_tail, stable_jump_series, stable_levy_scale, stable_tail,
    tail_coefficients, CompoundPoissonSpec, JumpSeries, SizeLaw, StableLaw, TailCoefficients,
};
pub use mc::{
    histogram_data, replication_rng, run_cell, run_comparison, CellSpec, ComparisonRow,
    Histogram, McCellResult, McConfig,
};
pub use sim::{
    calibrate_lambda, calibrate_theta, simulate_sv_path, JumpMode, PathGrid, PriceJumpSpec,
    SVModelSpec, SECONDS_PER_DAY,
};
pub use ticks::{
    clean_ticks, descriptive_stats, group_days, parse_ticks, rolling_estimates, sample_calendar,
    DescriptiveStats, RollingEstimate, SessionSpec, TickRecord, TickStatus, AVG_RATIOS,
    AVG_SD_MULTIPLES, REGRESSION_SD_MULTIPLES,
};
