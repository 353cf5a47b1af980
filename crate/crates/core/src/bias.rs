//! Finite-sample bias corrections for the two-cutoff estimator.
//!
//! Two routes: a closed-form correction that plugs a volatility and a jump
//! activity scale into the higher-order expansion of the exceedance counts,
//! and a regression route that fits the expansion across a cutoff grid and
//! corrects with the fitted coefficient ratios.

use crate::error::{Error, Result};
use crate::estimators::{count_exceedances, EstimatorConfig};
use crate::levy::tail_coefficients;

/// Coefficients of the exceedance-count expansion fitted across cutoffs:
/// `a0 * alpha^-beta + a1 * alpha^-(2+beta) + a2 * alpha^-2beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionFit {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub rss: f64,
    pub n_points: usize,
}

impl RegressionFit {
    pub fn csv_header() -> &'static str {
        "a0,a1,a2,rss,n_points"
    }

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{}", self.a0, self.a1, self.a2, self.rss, self.n_points)
    }
}

/// Result of a correction step: the corrected estimate, and whether the
/// correction could actually be applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionOutcome {
    pub beta: f64,
    pub applied: bool,
}

/// Closed-form bias correction. Subtracts from `beta_hat` the leading
/// finite-delta terms of the count-ratio expansion: a diffusion term scaling
/// with `sigma2` and `delta^(1 - 2 varpi)`, and a second-order jump-tail term
/// scaling with `theta^beta` and `delta^(1 - varpi beta)`.
///
/// The correction is only defined for estimates strictly inside (0, 2);
/// anything else is a domain error — callers decide whether to fall back to
/// the raw estimate.
pub fn closed_form_correction(
    beta_hat: f64,
    config: &EstimatorConfig,
    sigma2: f64,
    theta: f64,
) -> Result<CorrectionOutcome> {
    config.validate()?;
    if !(sigma2 >= 0.0) || !(theta >= 0.0) {
        return Err(Error::invalid("sigma2 and theta must be non-negative"));
    }
    if !(beta_hat > 0.0 && beta_hat < 2.0) {
        return Err(Error::BetaOutOfRange(beta_hat));
    }
    let b = beta_hat;
    let coef = tail_coefficients(b)?;
    let log_ratio = (config.alpha_prime / config.alpha).ln();
    let alpha = config.alpha;
    let alpha_p = config.alpha_prime;
    let delta = config.delta;

    let diffusion = 0.5 * b * (b + 1.0) * sigma2
        * (alpha.powi(-2) - alpha_p.powi(-2))
        * delta.powf(1.0 - 2.0 * config.varpi);
    let jump_tail = coef.d * theta.powf(b) / (2.0 * coef.c)
        * (alpha.powf(-b) - alpha_p.powf(-b))
        * delta.powf(1.0 - config.varpi * b);

    Ok(CorrectionOutcome { beta: b - (diffusion + jump_tail) / log_ratio, applied: true })
}

/// Fit the three-term count expansion over a grid of cutoff coefficients by
/// least squares. The response is `delta^(varpi * beta_hat) * U(alpha)`; the
/// regressors are `alpha^-beta_hat`, `alpha^-(2 + beta_hat)`, and
/// `alpha^-2 beta_hat`, all evaluated at the preliminary estimate.
///
/// Fails with `DegenerateDesign` when the regressors are (numerically)
/// collinear — in particular at `beta_hat = 2`, where the first two columns
/// of the design coincide with the third.
pub fn fit_bias_regression(
    returns: &[f64],
    alphas: &[f64],
    beta_hat: f64,
    varpi: f64,
    delta: f64,
) -> Result<RegressionFit> {
    if alphas.len() < 3 {
        return Err(Error::invalid(format!(
            "bias regression needs at least 3 cutoffs, got {}",
            alphas.len()
        )));
    }
    if alphas.iter().any(|a| !(*a > 0.0)) {
        return Err(Error::invalid("cutoff coefficients must be positive"));
    }
    if !(beta_hat > 0.0) {
        return Err(Error::invalid(format!(
            "bias regression needs a positive preliminary estimate, got {beta_hat}"
        )));
    }
    if !(varpi > 0.0 && varpi < 0.5) || !(delta > 0.0) {
        return Err(Error::invalid("varpi must be in (0, 1/2) and delta positive"));
    }

    let n = alphas.len();
    let scale = delta.powf(varpi * beta_hat);
    let mut design = vec![[0.0f64; 3]; n];
    let mut y = vec![0.0f64; n];
    for (i, &a) in alphas.iter().enumerate() {
        design[i] = [a.powf(-beta_hat), a.powf(-(2.0 + beta_hat)), a.powf(-2.0 * beta_hat)];
        let cutoff = a * delta.powf(varpi);
        y[i] = scale * count_exceedances(returns, cutoff) as f64;
    }
    let coefs = least_squares_3(&design, &y)?;
    let rss: f64 = (0..n)
        .map(|i| {
            let fit = coefs[0] * design[i][0] + coefs[1] * design[i][1] + coefs[2] * design[i][2];
            let r = y[i] - fit;
            r * r
        })
        .sum();
    Ok(RegressionFit { a0: coefs[0], a1: coefs[1], a2: coefs[2], rss, n_points: n })
}

/// Regression-based bias correction at a working cutoff `alpha`. Uses the
/// fitted coefficient ratios `a1/a0` and `a2/a0` in place of the model-known
/// quantities of the closed-form route.
///
/// Skipped (`applied: false`) when `a0` is not positive, which makes the
/// ratios meaningless.
pub fn regression_correction(
    beta_hat: f64,
    fit: &RegressionFit,
    config: &EstimatorConfig,
) -> Result<CorrectionOutcome> {
    config.validate()?;
    if !(beta_hat > 0.0 && beta_hat < 2.0) || !(fit.a0 > 0.0) {
        return Ok(CorrectionOutcome { beta: beta_hat, applied: false });
    }
    let b = beta_hat;
    let log_ratio = (config.alpha_prime / config.alpha).ln();
    let alpha = config.alpha;
    let alpha_p = config.alpha_prime;

    let diffusion = fit.a1 / fit.a0 * (alpha.powi(-2) - alpha_p.powi(-2));
    let jump_tail = fit.a2 / fit.a0 * (alpha.powf(-b) - alpha_p.powf(-b));
    Ok(CorrectionOutcome { beta: b - (diffusion + jump_tail) / log_ratio, applied: true })
}

/// Least squares for an n x 3 design via modified Gram-Schmidt QR.
/// Errors with `DegenerateDesign` when a column is numerically dependent on
/// the previous ones.
fn least_squares_3(design: &[[f64; 3]], y: &[f64]) -> Result<[f64; 3]> {
    let n = design.len();
    let mut q = vec![[0.0f64; 3]; n];
    for (row, d) in q.iter_mut().zip(design) {
        *row = *d;
    }
    let mut r = [[0.0f64; 3]; 3];
    let col_norm = |q: &[[f64; 3]], j: usize| -> f64 {
        q.iter().map(|row| row[j] * row[j]).sum::<f64>().sqrt()
    };
    // scale reference for the rank test: norms of the original columns
    let base: [f64; 3] = [col_norm(&q, 0), col_norm(&q, 1), col_norm(&q, 2)];

    for j in 0..3 {
        let norm = col_norm(&q, j);
        if norm <= 1e-10 * base[j].max(1.0) {
            return Err(Error::DegenerateDesign(format!(
                "regressor column {j} is numerically collinear with earlier columns"
            )));
        }
        r[j][j] = norm;
        for row in q.iter_mut() {
            row[j] /= norm;
        }
        for k in (j + 1)..3 {
            let dot: f64 = q.iter().map(|row| row[j] * row[k]).sum();
            r[j][k] = dot;
            for row in q.iter_mut() {
                row[k] -= dot * row[j];
            }
        }
    }
    // back-substitute R x = Q^T y
    let mut qty = [0.0f64; 3];
    for j in 0..3 {
        qty[j] = q.iter().zip(y).map(|(row, yi)| row[j] * yi).sum();
    }
    let mut x = [0.0f64; 3];
    for j in (0..3).rev() {
        let mut s = qty[j];
        for k in (j + 1)..3 {
            s -= r[j][k] * x[k];
        }
        x[j] = s / r[j][j];
    }
    Ok(x)
}
