//! Jump-activity-index estimators built on counts of large increments.
//!
//! Both estimators compare exceedance counts of the truncation level
//! `alpha * delta^varpi`: across two cutoff coefficients on one time scale,
//! or across the two time scales `delta` and `2 delta` at one cutoff.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::levy::JumpSeries;
use crate::math::{mean, sample_stdev};

/// Truncation knobs of the counting estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub varpi: f64,
    pub alpha: f64,
    pub alpha_prime: f64,
    pub delta: f64,
}

/// Which estimator produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    TwoCutoffs,
    TwoScales,
    Oracle,
    /// Grid average of two-cutoff estimates.
    Average,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::TwoCutoffs => "two_cutoffs",
            Method::TwoScales => "two_scales",
            Method::Oracle => "oracle",
            Method::Average => "avg",
        }
    }
}

/// Point estimate with its feasible standard error, the two underlying
/// counts, and reliability flags.
///
/// `std_error` is `None` when the limit theory gives no usable value
/// (a zero count, or a non-monotone two-scale count pair).
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub method: Method,
    pub varpi: f64,
    pub alpha: f64,
    pub alpha_prime: Option<f64>,
    pub delta: f64,
    pub u_low: usize,
    pub u_high: usize,
    pub beta_hat: f64,
    pub std_error: Option<f64>,
    pub flag_zero_count: bool,
    pub flag_ge_two: bool,
}

/// Activity scale of the estimand over the observation window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimandContext {
    /// Integrated activity scale over the window.
    pub a_bar_t: f64,
    /// True index, when known (simulation studies).
    pub beta_true: f64,
}

impl EstimatorConfig {
    pub fn new(varpi: f64, alpha: f64, alpha_prime: f64, delta: f64) -> Result<Self> {
        let cfg = EstimatorConfig { varpi, alpha, alpha_prime, delta };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.varpi > 0.0 && self.varpi < 0.5) {
            return Err(Error::invalid(format!("varpi must be in (0, 1/2), got {}", self.varpi)));
        }
        if !(self.alpha > 0.0 && self.alpha < self.alpha_prime) {
            return Err(Error::invalid(format!(
                "cutoff coefficients must satisfy 0 < alpha < alpha_prime, got {} and {}",
                self.alpha, self.alpha_prime
            )));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::invalid(format!("delta must be positive, got {}", self.delta)));
        }
        Ok(())
    }

    pub fn cutoff_low(&self) -> f64 {
        self.alpha * self.delta.powf(self.varpi)
    }

    pub fn cutoff_high(&self) -> f64 {
        self.alpha_prime * self.delta.powf(self.varpi)
    }
}

impl EstimateResult {
    pub fn is_flagged(&self) -> bool {
        self.flag_zero_count || self.flag_ge_two
    }

    pub fn csv_header() -> &'static str {
        "method,varpi,alpha,alpha_prime,delta,u_low,u_high,beta_hat,std_error,flags"
    }

    pub fn csv_row(&self) -> String {
        let mut row = String::new();
        let _ = write!(
            row,
            "{},{},{},{},{},{},{},{}",
            self.method.as_str(),
            self.varpi,
            self.alpha,
            self.alpha_prime.map(|a| a.to_string()).unwrap_or_default(),
            self.delta,
            self.u_low,
            self.u_high,
            self.beta_hat,
        );
        match self.std_error {
            Some(se) => {
                let _ = write!(row, ",{se}");
            }
            None => row.push(','),
        }
        let mut flags = Vec::new();
        if self.flag_zero_count {
            flags.push("zero_count");
        }
        if self.flag_ge_two {
            flags.push("ge_two");
        }
        let _ = write!(row, ",{}", if flags.is_empty() { "-".to_string() } else { flags.join(";") });
        row
    }
}

/// Number of increments with magnitude strictly greater than `cutoff`.
pub fn count_exceedances(returns: &[f64], cutoff: f64) -> usize {
    returns.iter().filter(|r| r.abs() > cutoff).count()
}

/// Two-cutoff estimator: the log count ratio at `alpha` and `alpha_prime`,
/// scaled by `log(alpha_prime / alpha)`, with its feasible standard error.
pub fn beta_hat_two_cutoffs(returns: &[f64], config: &EstimatorConfig) -> Result<EstimateResult> {
    config.validate()?;
    let u_low = count_exceedances(returns, config.cutoff_low());
    let u_high = count_exceedances(returns, config.cutoff_high());
    let log_ratio = (config.alpha_prime / config.alpha).ln();

    let mut result = EstimateResult {
        method: Method::TwoCutoffs,
        varpi: config.varpi,
        alpha: config.alpha,
        alpha_prime: Some(config.alpha_prime),
        delta: config.delta,
        u_low,
        u_high,
        beta_hat: 0.0,
        std_error: None,
        flag_zero_count: false,
        flag_ge_two: false,
    };
    if u_low == 0 || u_high == 0 {
        result.flag_zero_count = true;
        return Ok(result);
    }
    result.beta_hat = (u_low as f64 / u_high as f64).ln() / log_ratio;
    // u_high <= u_low by count monotonicity, so the radicand is >= 0
    result.std_error = Some((1.0 / u_high as f64 - 1.0 / u_low as f64).sqrt() / log_ratio);
    result.flag_ge_two = result.beta_hat >= 2.0;
    Ok(result)
}

/// Two-scale estimator: counts at spacing `delta` versus `2 delta`, each with
/// its own cutoff `alpha * spacing^varpi`, normalized by `varpi * log 2`.
///
/// The coarse series sums adjacent increment pairs starting at `phase`
/// (0 unless stated otherwise).
pub fn beta_hat_two_scales(
    returns: &[f64],
    varpi: f64,
    alpha: f64,
    delta: f64,
) -> Result<EstimateResult> {
    beta_hat_two_scales_with_phase(returns, varpi, alpha, delta, 0)
}

pub fn beta_hat_two_scales_with_phase(
    returns: &[f64],
    varpi: f64,
    alpha: f64,
    delta: f64,
    phase: usize,
) -> Result<EstimateResult> {
    if !(varpi > 0.0 && varpi < 0.5) {
        return Err(Error::invalid(format!("varpi must be in (0, 1/2), got {varpi}")));
    }
    if !(alpha > 0.0) {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    if !(delta > 0.0) {
        return Err(Error::invalid(format!("delta must be positive, got {delta}")));
    }
    if phase > 1 {
        return Err(Error::invalid(format!("phase must be 0 or 1, got {phase}")));
    }
    if returns.len() < 2 {
        return Err(Error::invalid("two-scale estimator needs at least 2 increments"));
    }

    let fine_cutoff = alpha * delta.powf(varpi);
    let coarse_cutoff = alpha * (2.0 * delta).powf(varpi);
    let u_fine = count_exceedances(returns, fine_cutoff);
    let u_coarse = returns[phase..]
        .chunks_exact(2)
        .filter(|pair| (pair[0] + pair[1]).abs() > coarse_cutoff)
        .count();
    let norm = varpi * 2f64.ln();

    let mut result = EstimateResult {
        method: Method::TwoScales,
        varpi,
        alpha,
        alpha_prime: None,
        delta,
        u_low: u_fine,
        u_high: u_coarse,
        beta_hat: 0.0,
        std_error: None,
        flag_zero_count: false,
        flag_ge_two: false,
    };
    if u_fine == 0 || u_coarse == 0 {
        result.flag_zero_count = true;
        return Ok(result);
    }
    // the coarse count can exceed the fine one in pathological samples; the
    // estimate is clamped at 0 and the variance expression is then undefined
    result.beta_hat = ((u_fine as f64 / u_coarse as f64).ln() / norm).max(0.0);
    let radicand = 1.0 / u_coarse as f64 - 1.0 / u_fine as f64;
    if radicand >= 0.0 {
        result.std_error = Some(radicand.sqrt() / norm);
    }
    result.flag_ge_two = result.beta_hat >= 2.0;
    Ok(result)
}

/// Truncated realized variance: the sum of squared increments no larger than
/// `alpha * delta^varpi`. Consistent for the integrated diffusion variance.
pub fn truncated_variance(returns: &[f64], delta: f64, varpi: f64, alpha: f64) -> Result<f64> {
    if !(varpi > 0.0 && varpi < 0.5) {
        return Err(Error::invalid(format!("varpi must be in (0, 1/2), got {varpi}")));
    }
    if !(alpha > 0.0 && delta > 0.0) {
        return Err(Error::invalid("alpha and delta must be positive"));
    }
    let cutoff = alpha * delta.powf(varpi);
    Ok(returns
        .iter()
        .filter(|r| r.abs() <= cutoff)
        .map(|r| r * r)
        .sum())
}

/// Data-driven cutoff grid: the lower cutoff is set at a number of estimated
/// per-increment standard deviations of the continuous part, the upper as a
/// multiple of the lower.
///
/// The volatility is estimated by one truncated-variance pass started from a
/// 3-standard-deviation heuristic cutoff. Returns an empty grid when the
/// series is degenerate (zero estimated volatility).
pub fn select_cutoffs(
    returns: &[f64],
    delta: f64,
    varpi: f64,
    sd_multiples: &[f64],
    ratios: &[f64],
) -> Result<Vec<EstimatorConfig>> {
    if sd_multiples.iter().any(|m| *m <= 0.0) {
        return Err(Error::invalid("sd multiples must be positive"));
    }
    if ratios.iter().any(|r| *r <= 1.0) {
        return Err(Error::invalid("cutoff ratios must exceed 1"));
    }
    if returns.is_empty() {
        return Ok(Vec::new());
    }
    let horizon = delta * returns.len() as f64;
    let raw_var = returns.iter().map(|r| r * r).sum::<f64>() / horizon;
    if raw_var == 0.0 {
        return Ok(Vec::new());
    }
    // one refinement pass at 3 estimated sds
    let alpha0 = 3.0 * raw_var.sqrt() * delta.powf(0.5 - varpi);
    let sigma2 = truncated_variance(returns, delta, varpi, alpha0)? / horizon;
    if sigma2 == 0.0 {
        return Ok(Vec::new());
    }
    let sigma = sigma2.sqrt();

    let mut grid = Vec::with_capacity(sd_multiples.len() * ratios.len());
    for &m in sd_multiples {
        let alpha = m * sigma * delta.powf(0.5 - varpi);
        for &r in ratios {
            grid.push(EstimatorConfig::new(varpi, alpha, r * alpha, delta)?);
        }
    }
    Ok(grid)
}

/// Arithmetic mean of a grid of estimates. Entries flagged for zero counts
/// are excluded; the reported `std_error` is the cross-grid standard
/// deviation of the estimates (a dispersion diagnostic, not an asymptotic
/// standard error).
pub fn avg_estimator(results: &[EstimateResult]) -> Result<EstimateResult> {
    let first = results
        .first()
        .ok_or_else(|| Error::invalid("cannot average an empty estimate grid"))?;
    let kept: Vec<&EstimateResult> = results.iter().filter(|r| !r.flag_zero_count).collect();

    let mut avg = EstimateResult {
        method: Method::Average,
        varpi: first.varpi,
        alpha: first.alpha,
        alpha_prime: None,
        delta: first.delta,
        u_low: 0,
        u_high: 0,
        beta_hat: 0.0,
        std_error: None,
        flag_zero_count: false,
        flag_ge_two: false,
    };
    if kept.is_empty() {
        avg.flag_zero_count = true;
        return Ok(avg);
    }
    let betas: Vec<f64> = kept.iter().map(|r| r.beta_hat).collect();
    avg.beta_hat = mean(&betas);
    if betas.len() >= 2 {
        avg.std_error = Some(sample_stdev(&betas));
    }
    avg.flag_ge_two = avg.beta_hat >= 2.0;
    Ok(avg)
}

/// Oracle estimator computed on exact jumps rather than increments: the same
/// log count ratio, counting jumps above the two cutoffs.
pub fn beta_bar_oracle(
    jumps: &JumpSeries,
    delta: f64,
    varpi: f64,
    alpha: f64,
    alpha_prime: f64,
) -> Result<EstimateResult> {
    let config = EstimatorConfig::new(varpi, alpha, alpha_prime, delta)?;
    if config.cutoff_low() <= jumps.truncation_floor {
        return Err(Error::invalid(format!(
            "cutoff {} does not clear the simulation floor {}; counts would be biased",
            config.cutoff_low(),
            jumps.truncation_floor
        )));
    }
    let u_low = jumps.count_exceeding(config.cutoff_low());
    let u_high = jumps.count_exceeding(config.cutoff_high());
    let log_ratio = (alpha_prime / alpha).ln();

    let mut result = EstimateResult {
        method: Method::Oracle,
        varpi,
        alpha,
        alpha_prime: Some(alpha_prime),
        delta,
        u_low,
        u_high,
        beta_hat: 0.0,
        std_error: None,
        flag_zero_count: false,
        flag_ge_two: false,
    };
    if u_low == 0 || u_high == 0 {
        result.flag_zero_count = true;
        return Ok(result);
    }
    result.beta_hat = (u_low as f64 / u_high as f64).ln() / log_ratio;
    result.std_error = Some((1.0 / u_high as f64 - 1.0 / u_low as f64).sqrt() / log_ratio);
    result.flag_ge_two = result.beta_hat >= 2.0;
    Ok(result)
}

/// Asymptotic variance of the normalized two-cutoff estimation error:
/// `(alpha'^beta - alpha^beta) / (A_bar (log(alpha'/alpha))^2)`.
pub fn asymptotic_variance(
    beta: f64,
    alpha: f64,
    alpha_prime: f64,
    context: &EstimandContext,
) -> Result<f64> {
    if !(context.a_bar_t > 0.0) {
        return Err(Error::invalid(format!(
            "integrated activity scale must be positive, got {}",
            context.a_bar_t
        )));
    }
    if !(alpha > 0.0 && alpha < alpha_prime) {
        return Err(Error::invalid("need 0 < alpha < alpha_prime"));
    }
    let log_ratio = (alpha_prime / alpha).ln();
    Ok((alpha_prime.powf(beta) - alpha.powf(beta)) / (context.a_bar_t * log_ratio * log_ratio))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(varpi: f64, alpha: f64, alpha_prime: f64, delta: f64) -> EstimatorConfig {
        EstimatorConfig::new(varpi, alpha, alpha_prime, delta).unwrap()
    }

    #[test]
    fn counting_is_strict() {
        let returns = [0.005, -0.02, 0.03, 0.001];
        assert_eq!(count_exceedances(&returns, 0.01), 2);
        assert_eq!(count_exceedances(&returns, 0.03), 0 + 0); // strict at the tie
        assert_eq!(count_exceedances(&returns, 1.0), 0);
    }

    #[test]
    fn two_cutoff_unit_case() {
        // U = 400, U' = 100, ratio 4: beta = 1 exactly
        let delta = 1.0;
        let mut returns = vec![0.0; 1000];
        for r in returns.iter_mut().take(400) {
            *r = 3.0; // above both? no: alpha' cutoff is 4
        }
        for r in returns.iter_mut().take(100) {
            *r = 5.0; // above both cutoffs
        }
        let cfg = config(0.2, 1.0, 4.0, delta);
        let est = beta_hat_two_cutoffs(&returns, &cfg).unwrap();
        assert_eq!(est.u_low, 400);
        assert_eq!(est.u_high, 100);
        assert_eq!(est.beta_hat, 1.0);
        let se = est.std_error.unwrap();
        let want = (1.0 / 100.0f64 - 1.0 / 400.0).sqrt() / 4.0f64.ln();
        assert!((se - want).abs() < 1e-15);
        assert!((se - 0.0625).abs() < 2e-4);
        assert!(!est.is_flagged());
    }

    #[test]
    fn equal_counts_give_zero() {
        let returns = vec![10.0; 50];
        let est = beta_hat_two_cutoffs(&returns, &config(0.2, 1.0, 2.0, 1.0)).unwrap();
        assert_eq!(est.beta_hat, 0.0);
        assert_eq!(est.std_error, Some(0.0));
        assert!(!est.flag_zero_count);
    }

    #[test]
    fn zero_count_convention() {
        let returns = vec![0.001; 50];
        let est = beta_hat_two_cutoffs(&returns, &config(0.2, 1.0, 2.0, 1.0)).unwrap();
        assert_eq!(est.beta_hat, 0.0);
        assert!(est.std_error.is_none());
        assert!(est.flag_zero_count);
    }

    #[test]
    fn two_scale_value() {
        // U_fine = 200, U_coarse = 174, varpi = 0.2:
        // beta' = ln(200/174)/(0.2 ln 2)
        // construct directly from counts via a synthetic series is fiddly;
        // check the formula through a handmade case instead
        let b = (200.0f64 / 174.0).ln() / (0.2 * 2f64.ln());
        assert!((b - 1.0049).abs() < 1e-3);
    }

    #[test]
    fn two_scale_on_series() {
        // alternating spikes: every fine spike pairs with a zero, so each
        // coarse sum keeps the spike and both counts agree -> beta' = 0
        let delta = 0.01;
        let mut returns = vec![0.0; 100];
        for i in (0..100).step_by(2) {
            returns[i] = 1.0;
        }
        let est = beta_hat_two_scales(&returns, 0.2, 0.5, delta).unwrap();
        assert_eq!(est.u_low, 50);
        assert_eq!(est.u_high, 50);
        assert_eq!(est.beta_hat, 0.0);

        // phase 1 drops the first increment and pairs spikes across
        let est1 = beta_hat_two_scales_with_phase(&returns, 0.2, 0.5, delta, 1).unwrap();
        assert!(est1.u_high <= 49);
    }

    #[test]
    fn two_scale_coarse_count_bound() {
        let returns = vec![5.0; 11];
        let est = beta_hat_two_scales(&returns, 0.2, 0.1, 0.5).unwrap();
        assert!(est.u_high <= returns.len() / 2);
    }

    #[test]
    fn truncated_variance_cases() {
        let returns = [0.1, -0.2, 3.0];
        let tv = truncated_variance(&returns, 1.0, 0.2, 0.5).unwrap();
        assert!((tv - (0.01 + 0.04)).abs() < 1e-15);
        let all_above = truncated_variance(&returns, 1.0, 0.2, 0.05).unwrap();
        assert_eq!(all_above, 0.0);
    }

    #[test]
    fn cutoff_selection_scales_with_volatility() {
        let delta = 1.0 / 23_400.0;
        let returns: Vec<f64> = (0..23_400)
            .map(|i| if i % 2 == 0 { 0.0016 } else { -0.0016 })
            .collect();
        let grid = select_cutoffs(&returns, delta, 0.2, &[7.0], &[2.0]).unwrap();
        assert_eq!(grid.len(), 1);
        let doubled: Vec<f64> = returns.iter().map(|r| 2.0 * r).collect();
        let grid2 = select_cutoffs(&doubled, delta, 0.2, &[7.0], &[2.0]).unwrap();
        assert!((grid2[0].alpha / grid[0].alpha - 2.0).abs() < 1e-12);
        assert!((grid2[0].alpha_prime / grid2[0].alpha - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cutoff_selection_degenerate() {
        let returns = vec![0.0; 100];
        let grid = select_cutoffs(&returns, 0.01, 0.2, &[7.0, 8.0], &[2.0]).unwrap();
        assert!(grid.is_empty());
    }

    #[test]
    fn average_of_single_entry_is_identity() {
        let est = beta_hat_two_cutoffs(&vec![10.0; 4], &config(0.2, 1.0, 2.0, 1.0)).unwrap();
        let avg = avg_estimator(&[est.clone()]).unwrap();
        assert_eq!(avg.beta_hat, est.beta_hat);
        assert!(avg.std_error.is_none());
    }

    #[test]
    fn average_propagates_zero_count_flag() {
        let zero = beta_hat_two_cutoffs(&[0.0], &config(0.2, 1.0, 2.0, 1.0)).unwrap();
        let avg = avg_estimator(&[zero.clone(), zero]).unwrap();
        assert_eq!(avg.beta_hat, 0.0);
        assert!(avg.flag_zero_count);
        assert!(avg_estimator(&[]).is_err());
    }

    #[test]
    fn oracle_on_large_jumps_only() {
        let jumps = JumpSeries {
            horizon: 1.0,
            times: vec![0.1, 0.5, 0.9],
            sizes: vec![1.0, -2.0, 3.0],
            truncation_floor: 0.0,
        };
        let est = beta_bar_oracle(&jumps, 1.0, 0.2, 0.01, 0.02).unwrap();
        assert_eq!(est.beta_hat, 0.0); // all jumps clear both cutoffs
        let empty = JumpSeries::empty(1.0);
        let est = beta_bar_oracle(&empty, 1.0, 0.2, 0.01, 0.02).unwrap();
        assert!(est.flag_zero_count);
        assert_eq!(est.beta_hat, 0.0);
    }

    #[test]
    fn oracle_rejects_cutoff_below_floor() {
        let mut jumps = JumpSeries::empty(1.0);
        jumps.truncation_floor = 0.05;
        assert!(beta_bar_oracle(&jumps, 1.0, 0.2, 0.01, 0.02).is_err());
    }

    #[test]
    fn asymptotic_variance_values() {
        let ctx = EstimandContext { a_bar_t: 100.0, beta_true: 1.0 };
        let v = asymptotic_variance(1.0, 1.0, 2.0, &ctx).unwrap();
        let ln2 = 2f64.ln();
        assert!((v - 1.0 / (100.0 * ln2 * ln2)).abs() < 1e-15);
        assert!((v - 0.020_81).abs() < 1e-4);
        // halving A_bar doubles the variance
        let half = EstimandContext { a_bar_t: 50.0, beta_true: 1.0 };
        assert!((asymptotic_variance(1.0, 1.0, 2.0, &half).unwrap() / v - 2.0).abs() < 1e-12);
        // degenerate design blows up
        let close = asymptotic_variance(1.0, 1.0, 1.0 + 1e-9, &ctx).unwrap();
        assert!(close > 1e6);
        assert!(asymptotic_variance(1.0, 1.0, 2.0, &EstimandContext { a_bar_t: 0.0, beta_true: 1.0 }).is_err());
    }

    #[test]
    fn csv_row_shape() {
        let est = beta_hat_two_cutoffs(&vec![0.001; 3], &config(0.2, 1.0, 2.0, 1.0)).unwrap();
        let row = est.csv_row();
        assert_eq!(row, "two_cutoffs,0.2,1,2,1,0,0,0,,zero_count");
        assert_eq!(
            EstimateResult::csv_header(),
            "method,varpi,alpha,alpha_prime,delta,u_low,u_high,beta_hat,std_error,flags"
        );
    }
}
