//! Trade-data pipeline: CSV ingestion, cleaning, previous-tick calendar
//! sampling, descriptive statistics, and windowed activity estimation.

use std::io::BufRead;

use crate::bias::{fit_bias_regression, regression_correction};
use crate::error::{Error, Result};
use crate::estimators::{
    avg_estimator, beta_hat_two_cutoffs, select_cutoffs, EstimateResult, EstimatorConfig,
};
use crate::sim::{PathGrid, SECONDS_PER_DAY};

/// Cutoff grid for the averaged estimator: multiples of the estimated
/// per-increment standard deviation of the continuous part, and ratios
/// alpha' / alpha.
pub const AVG_SD_MULTIPLES: [f64; 3] = [7.0, 8.0, 9.0];
pub const AVG_RATIOS: [f64; 6] = [1.5, 2.0, 2.5, 3.0, 3.5, 4.0];
/// Wider single-cutoff grid feeding the bias regression.
pub const REGRESSION_SD_MULTIPLES: [f64; 6] = [5.0, 6.0, 7.0, 8.0, 9.0, 10.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TickStatus {
    Valid,
    Corrected,
    Cancelled,
}

/// One trade record. `timestamp` is in seconds: either seconds of the day or
/// absolute epoch seconds — the pipeline treats both uniformly after
/// day-grouping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickRecord {
    pub timestamp: f64,
    pub price: f64,
    pub status: TickStatus,
}

/// Trading session clock (seconds of day) and calendar sampling step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionSpec {
    pub open: f64,
    pub close: f64,
    pub step: f64,
}

impl Default for SessionSpec {
    /// 09:30:00–16:00:00, 5-second sampling.
    fn default() -> Self {
        SessionSpec { open: 34_200.0, close: 57_600.0, step: 5.0 }
    }
}

impl SessionSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.open < self.close) {
            return Err(Error::invalid("session open must precede close"));
        }
        if !(self.step > 0.0) {
            return Err(Error::invalid("sampling step must be positive"));
        }
        let len = self.close - self.open;
        let steps = len / self.step;
        if (steps - steps.round()).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "step {} does not divide the session length {}",
                self.step, len
            )));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        ((self.close - self.open) / self.step).round() as usize
    }
}

/// Sample moments of a log-return series. Skewness and kurtosis are
/// population-standardized moments (kurtosis raw, not excess); both are
/// `None` for constant input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescriptiveStats {
    pub n: usize,
    pub mean: f64,
    pub stdev: f64,
    pub skewness: Option<f64>,
    pub kurtosis: Option<f64>,
    pub min: f64,
    pub max: f64,
}

impl DescriptiveStats {
    pub fn csv_header() -> &'static str {
        "n,mean,stdev,skewness,kurtosis,min,max"
    }

    pub fn csv_row(&self) -> String {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{}",
            self.n,
            self.mean,
            self.stdev,
            opt(self.skewness),
            opt(self.kurtosis),
            self.min,
            self.max
        )
    }
}

/// Parse `timestamp,price[,status]` CSV. Timestamps are epoch/session
/// seconds or ISO-8601 date-times; status is one of valid / corrected /
/// cancelled (absent means valid). A leading header row is skipped.
pub fn parse_ticks<R: BufRead>(reader: R) -> Result<Vec<TickRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if i == 0 && trimmed.to_ascii_lowercase().starts_with("timestamp") {
            continue;
        }
        let mut parts = trimmed.split(',');
        let ts_field = parts.next().unwrap().trim();
        let price_field = parts
            .next()
            .ok_or_else(|| parse_err(lineno, "missing price field"))?
            .trim();
        let status_field = parts.next().map(str::trim);
        if parts.next().is_some() {
            return Err(parse_err(lineno, "too many fields"));
        }

        let timestamp = parse_timestamp(ts_field)
            .ok_or_else(|| parse_err(lineno, format!("bad timestamp '{ts_field}'")))?;
        let price: f64 = price_field
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad price '{price_field}'")))?;
        let status = match status_field {
            None | Some("") => TickStatus::Valid,
            Some(s) => match s.to_ascii_lowercase().as_str() {
                "valid" => TickStatus::Valid,
                "corrected" => TickStatus::Corrected,
                "cancelled" | "canceled" => TickStatus::Cancelled,
                other => return Err(parse_err(lineno, format!("unknown status '{other}'"))),
            },
        };
        out.push(TickRecord { timestamp, price, status });
    }
    Ok(out)
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Plain seconds, or a restricted ISO-8601 date-time
/// `YYYY-MM-DDTHH:MM:SS[.fff][Z]` converted to epoch seconds (UTC).
fn parse_timestamp(s: &str) -> Option<f64> {
    if let Ok(v) = s.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    let s = s.strip_suffix('Z').unwrap_or(s);
    let (date, time) = s.split_once(['T', ' '])?;
    let mut d = date.split('-');
    let year: i64 = d.next()?.parse().ok()?;
    let month: u32 = d.next()?.parse().ok()?;
    let day: u32 = d.next()?.parse().ok()?;
    if d.next().is_some() || !(1..=12).contains(&month) || !(1..=31).contains(&day) {
        return None;
    }
    let mut t = time.split(':');
    let hour: u32 = t.next()?.parse().ok()?;
    let minute: u32 = t.next()?.parse().ok()?;
    let second: f64 = t.next()?.parse().ok()?;
    if t.next().is_some() || hour > 23 || minute > 59 || !(0.0..60.0).contains(&second) {
        return None;
    }
    let days = days_from_civil(year, month, day);
    Some(days as f64 * 86_400.0 + hour as f64 * 3600.0 + minute as f64 * 60.0 + second)
}

/// Days since 1970-01-01 (proleptic Gregorian).
fn days_from_civil(y: i64, m: u32, d: u32) -> i64 {
    let y = y - i64::from(m <= 2);
    let era = y.div_euclid(400);
    let yoe = (y - era * 400) as i64;
    let mp = ((m + 9) % 12) as i64;
    let doy = (153 * mp + 2) / 5 + d as i64 - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

/// Keep only valid records with positive prices, preserving order.
pub fn clean_ticks(records: &[TickRecord]) -> Vec<TickRecord> {
    records
        .iter()
        .filter(|r| r.status == TickStatus::Valid && r.price > 0.0)
        .copied()
        .collect()
}

/// Split records into trading days (86400-second buckets) and rebase each
/// day's timestamps to seconds of that day. Input must be time-sorted.
pub fn group_days(records: &[TickRecord]) -> Vec<Vec<TickRecord>> {
    let mut days: Vec<Vec<TickRecord>> = Vec::new();
    let mut current_day: Option<i64> = None;
    for r in records {
        let day = (r.timestamp / 86_400.0).floor() as i64;
        if current_day != Some(day) {
            current_day = Some(day);
            days.push(Vec::new());
        }
        let mut rebased = *r;
        rebased.timestamp -= day as f64 * 86_400.0;
        days.last_mut().unwrap().push(rebased);
    }
    days
}

/// Previous-tick sampling on the session grid: at each grid time, the log of
/// the last trade price at or before it; grid times before the first trade
/// carry the first trade's price. Records must be cleaned and time-sorted;
/// timestamps are seconds of day.
///
/// The output grid spacing is expressed in trading days (`step / 23400`), so
/// it feeds the estimators directly.
pub fn sample_calendar(records: &[TickRecord], session: &SessionSpec) -> Result<PathGrid> {
    session.validate()?;
    if records.is_empty() {
        return Err(Error::invalid("cannot sample an empty record set"));
    }
    if records.windows(2).any(|w| w[0].timestamp > w[1].timestamp) {
        return Err(Error::invalid("records must be time-sorted"));
    }
    let n = session.n_steps();
    let mut values = Vec::with_capacity(n + 1);
    let mut idx = 0usize;
    let mut last_price = records[0].price;
    for k in 0..=n {
        let t = session.open + k as f64 * session.step;
        while idx < records.len() && records[idx].timestamp <= t {
            last_price = records[idx].price;
            idx += 1;
        }
        values.push(last_price.ln());
    }
    Ok(PathGrid {
        delta: session.step / SECONDS_PER_DAY,
        values,
        spot_variance: None,
        jumps: None,
    })
}

/// Sample moments of a return series.
pub fn descriptive_stats(returns: &[f64]) -> Result<DescriptiveStats> {
    if returns.is_empty() {
        return Err(Error::invalid("no returns to describe"));
    }
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for r in returns {
        let d = r - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let stdev = m2.sqrt();
    let (skewness, kurtosis) = if stdev > 0.0 {
        (Some(m3 / m2.powf(1.5)), Some(m4 / (m2 * m2)))
    } else {
        (None, None)
    };
    let min = returns.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = returns.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(DescriptiveStats { n: returns.len(), mean, stdev, skewness, kurtosis, min, max })
}

/// One window of the rolling estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct RollingEstimate {
    /// Index of the first day in the window.
    pub start_day: usize,
    pub n_days: usize,
    /// Grid-averaged estimate over the window.
    pub avg: EstimateResult,
    /// Regression-bias-corrected estimate at the base (7 sd, ratio 2)
    /// configuration; `None` when the correction is unavailable.
    pub corrected: Option<f64>,
}

/// Windowed estimation over a sequence of sampled trading days: the days are
/// chopped into non-overlapping windows of `window_days` days, overnight
/// increments are never formed, and each window gets cutoff selection on its
/// own data, an averaged estimate over the standard grid, and a
/// regression-based bias correction.
///
/// Days with fewer than two grid points contribute no returns; windows with
/// no returns at all are skipped.
pub fn rolling_estimates(
    days: &[PathGrid],
    window_days: usize,
    varpi: f64,
) -> Result<Vec<RollingEstimate>> {
    if window_days == 0 {
        return Err(Error::invalid("window length must be at least 1 day"));
    }
    if days.is_empty() {
        return Err(Error::invalid("no days to estimate on"));
    }
    let delta = days[0].delta;
    if days.iter().any(|d| (d.delta - delta).abs() > 1e-12) {
        return Err(Error::invalid("all days must share the same sampling step"));
    }

    let mut out = Vec::new();
    let mut start = 0usize;
    while start < days.len() {
        let end = (start + window_days).min(days.len());
        let mut returns = Vec::new();
        for day in &days[start..end] {
            returns.extend(day.returns());
        }
        if returns.is_empty() {
            start = end;
            continue;
        }
        let grid = select_cutoffs(&returns, delta, varpi, &AVG_SD_MULTIPLES, &AVG_RATIOS)?;
        if grid.is_empty() {
            start = end;
            continue;
        }
        let estimates: Vec<EstimateResult> = grid
            .iter()
            .map(|cfg| beta_hat_two_cutoffs(&returns, cfg))
            .collect::<Result<_>>()?;
        let avg = avg_estimator(&estimates)?;

        let corrected = if avg.beta_hat > 0.0 && avg.beta_hat < 2.0 {
            // regression over the single-cutoff ladder, correction applied at
            // the base configuration (7 sd, ratio 2)
            let base_sigma_alpha = grid[0].alpha / AVG_SD_MULTIPLES[0];
            let alphas: Vec<f64> =
                REGRESSION_SD_MULTIPLES.iter().map(|m| m * base_sigma_alpha).collect();
            let fit = fit_bias_regression(&returns, &alphas, avg.beta_hat, varpi, delta)?;
            let base = EstimatorConfig::new(varpi, grid[0].alpha, 2.0 * grid[0].alpha, delta)?;
            let outcome = regression_correction(avg.beta_hat, &fit, &base)?;
            outcome.applied.then_some(outcome.beta)
        } else {
            None
        };

        out.push(RollingEstimate { start_day: start, n_days: end - start, avg, corrected });
        start = end;
    }
    Ok(out)
}
