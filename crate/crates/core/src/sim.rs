//! Stochastic-volatility log-price simulator with stable or compound Poisson
//! price jumps, plus tail-probability calibration of the jump scale.
//!
//! Time is measured in trading days: a 1-second grid over a 6.5-hour session
//! has spacing `1/23400` and horizon 1.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::{
    compound_poisson_series, stable_jump_series, stable_levy_scale, tail_coefficients,
    CompoundPoissonSpec, JumpSeries, StableLaw,
};

/// Seconds in one 6.5-hour trading session; 1-second sampling means
/// `delta = 1 / SECONDS_PER_DAY` in model units.
pub const SECONDS_PER_DAY: f64 = 23_400.0;

/// Price-jump component of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceJumpSpec {
    None,
    /// theta times a standardized beta-stable process.
    Stable { beta: f64, theta: f64 },
    CompoundPoisson(CompoundPoissonSpec),
}

/// Stochastic volatility model
/// `dX = sigma dW + jumps`, `dv = kappa (eta - v) dt + gamma_v sqrt(v) dB + dJ`
/// with `corr(dW, dB) = rho` and `sigma = sqrt(max(v, 0))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SVModelSpec {
    pub kappa: f64,
    pub eta: f64,
    pub gamma_v: f64,
    pub rho: f64,
    pub v0: f64,
    pub var_jumps: Option<CompoundPoissonSpec>,
    pub price_jumps: PriceJumpSpec,
    pub x0: f64,
}

/// Equally spaced observations of the log-price, with the simulated spot
/// variance and, when requested, the exact price-jump series attached.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGrid {
    pub delta: f64,
    pub values: Vec<f64>,
    pub spot_variance: Option<Vec<f64>>,
    pub jumps: Option<JumpSeries>,
}

/// How price jumps enter the Euler scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JumpMode {
    /// One scaled stable draw per step; fast, no jump export.
    PerIncrement,
    /// Explicit jump series above `floor`, binned into steps and attached to
    /// the output. Required by the jump-oracle estimator.
    Exact { floor: f64 },
}

impl SVModelSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.kappa, self.eta, self.gamma_v, self.rho, self.v0, self.x0]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::invalid("non-finite model parameter"));
        }
        if self.kappa < 0.0 || self.gamma_v < 0.0 {
            return Err(Error::invalid("kappa and gamma_v must be >= 0"));
        }
        if !(self.eta >= 0.0 && self.v0 >= 0.0) {
            return Err(Error::invalid("eta and v0 must be non-negative"));
        }
        if self.rho.abs() > 1.0 {
            return Err(Error::invalid("rho must lie in [-1, 1]"));
        }
        if let PriceJumpSpec::Stable { beta, theta } = self.price_jumps {
            if !(beta > 0.0 && beta < 2.0) {
                return Err(Error::BetaOutOfRange(beta));
            }
            if !(theta > 0.0 && theta.is_finite()) {
                return Err(Error::invalid(format!("theta must be positive, got {theta}")));
            }
        }
        Ok(())
    }
}

impl PathGrid {
    pub fn n_steps(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn horizon(&self) -> f64 {
        self.delta * self.n_steps() as f64
    }

    pub fn returns(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Time-average of the (truncated-at-zero) spot variance over the grid.
    pub fn mean_spot_variance(&self) -> Option<f64> {
        let v = self.spot_variance.as_ref()?;
        if v.is_empty() {
            return None;
        }
        Some(v.iter().map(|x| x.max(0.0)).sum::<f64>() / v.len() as f64)
    }

    /// CSV with header `t,x` or `t,x,v`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        match &self.spot_variance {
            Some(v) => {
                writeln!(w, "t,x,v")?;
                for (i, (x, vv)) in self.values.iter().zip(v).enumerate() {
                    writeln!(w, "{},{x},{vv}", i as f64 * self.delta)?;
                }
            }
            None => {
                writeln!(w, "t,x")?;
                for (i, x) in self.values.iter().enumerate() {
                    writeln!(w, "{},{x}", i as f64 * self.delta)?;
                }
            }
        }
        Ok(())
    }
}

/// Full-truncation Euler scheme on `[0, horizon]` with spacing `delta`.
///
/// Jump randomness is drawn from a stream forked off `rng` before the Euler
/// loop, so two runs from the same seed that differ only in the jump
/// component share the same Brownian path.
pub fn simulate_sv_path<R: Rng + ?Sized>(
    spec: &SVModelSpec,
    horizon: f64,
    delta: f64,
    mode: JumpMode,
    rng: &mut R,
) -> Result<PathGrid> {
    spec.validate()?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid(format!("delta must be positive, got {delta}")));
    }
    if !(horizon >= delta) {
        return Err(Error::invalid(format!(
            "horizon {horizon} must be at least one step {delta}"
        )));
    }
    let n = (horizon / delta).round() as usize;

    // Fork sub-streams so the Brownian draws below do not depend on how many
    // variates the jump samplers consume.
    let mut jump_rng = ChaCha8Rng::seed_from_u64(rng.random::<u64>());
    let mut var_jump_rng = ChaCha8Rng::seed_from_u64(rng.random::<u64>());

    let (price_step_jumps, exported) = sample_price_jumps(spec, horizon, delta, n, mode, &mut jump_rng)?;
    let var_step_jumps = match &spec.var_jumps {
        Some(cp) => {
            let series = compound_poisson_series(cp, horizon, &mut var_jump_rng)?;
            Some(series.increment_sums(delta, n))
        }
        None => None,
    };

    let mut values = Vec::with_capacity(n + 1);
    let mut variance = Vec::with_capacity(n + 1);
    let mut x = spec.x0;
    let mut v = spec.v0;
    values.push(x);
    variance.push(v);
    let sqrt_delta = delta.sqrt();
    let rho_c = (1.0 - spec.rho * spec.rho).sqrt();
    for i in 0..n {
        let vp = v.max(0.0);
        let z_b: f64 = rng.sample(StandardNormal);
        let z: f64 = rng.sample(StandardNormal);
        let z_w = spec.rho * z_b + rho_c * z;
        let sigma = vp.sqrt();
        x += sigma * sqrt_delta * z_w;
        if let Some(j) = &price_step_jumps {
            x += j[i];
        }
        v += spec.kappa * (spec.eta - vp) * delta + spec.gamma_v * sigma * sqrt_delta * z_b;
        if let Some(j) = &var_step_jumps {
            v += j[i];
        }
        values.push(x);
        variance.push(v);
    }

    Ok(PathGrid {
        delta,
        values,
        spot_variance: Some(variance),
        jumps: exported,
    })
}

fn sample_price_jumps<R: Rng + ?Sized>(
    spec: &SVModelSpec,
    horizon: f64,
    delta: f64,
    n: usize,
    mode: JumpMode,
    rng: &mut R,
) -> Result<(Option<Vec<f64>>, Option<JumpSeries>)> {
    match spec.price_jumps {
        PriceJumpSpec::None => Ok((None, None)),
        PriceJumpSpec::Stable { beta, theta } => match mode {
            JumpMode::PerIncrement => {
                let law = StableLaw::new(beta)?;
                let scale = theta * delta.powf(1.0 / beta);
                let steps: Vec<f64> = (0..n).map(|_| scale * law.sample(rng)).collect();
                Ok((Some(steps), None))
            }
            JumpMode::Exact { floor } => {
                let a = stable_levy_scale(theta, beta)?;
                let series = stable_jump_series(a, beta, horizon, floor, rng)?;
                let steps = series.increment_sums(delta, n);
                Ok((Some(steps), Some(series)))
            }
        },
        PriceJumpSpec::CompoundPoisson(cp) => {
            let series = compound_poisson_series(&cp, horizon, rng)?;
            let steps = series.increment_sums(delta, n);
            Ok((Some(steps), Some(series)))
        }
    }
}

/// Solve for the stable scale `theta` such that one increment of the jump
/// component exceeds the cutoff `alpha delta^varpi` with probability `p`,
/// using the two-term tail expansion.
pub fn calibrate_theta(beta: f64, alpha: f64, varpi: f64, delta: f64, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("tail probability must be in (0,1), got {p}")));
    }
    if !(varpi > 0.0 && varpi < 0.5) {
        return Err(Error::invalid(format!("varpi must be in (0, 1/2), got {varpi}")));
    }
    if !(alpha > 0.0 && delta > 0.0) {
        return Err(Error::invalid("alpha and delta must be positive"));
    }
    let coef = tail_coefficients(beta)?;
    let tail = |x: f64| 2.0 * coef.c / (beta * x.powf(beta)) + coef.d / (beta * x.powf(2.0 * beta));

    // The expansion is only trusted for arguments >= 1 model unit.
    if tail(1.0) <= p {
        return Err(Error::NoSolution(format!(
            "tail probability {p} exceeds the expansion's validity at beta={beta}"
        )));
    }
    // Bracket around the leading-term inverse, then bisect; the two-term tail
    // is strictly decreasing on [1, inf) for all beta in (0, 2).
    let x_leading = (2.0 * coef.c / (beta * p)).powf(1.0 / beta);
    let mut lo = (x_leading / 8.0).max(1.0);
    let mut hi = x_leading * 8.0;
    while tail(hi) > p {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    Ok(alpha * delta.powf(varpi - 1.0 / beta) / x)
}

/// Arrival rate such that at least one jump falls in an interval of width
/// `delta` with probability exactly `p`.
pub fn calibrate_lambda(p: f64, delta: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("tail probability must be in (0,1), got {p}")));
    }
    if !(delta > 0.0) {
        return Err(Error::invalid(format!("delta must be positive, got {delta}")));
    }
    Ok(-(1.0 - p).ln() / delta)
}
