//! Stable-law mathematics and random generation of jump components.
//!
//! The symmetric stable law here follows the normalization
//! `E(exp(i u Y_t)) = exp(-t |u|^beta / 2)`, so the beta = 1 case is Cauchy
//! with scale 1/2 and the beta -> 2 limit is standard normal. The Levy-measure
//! parametrization `F([-x, x]^c) = A / x^beta` is bridged to this convention
//! by `A = 2 theta^beta c_beta / beta`.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::gamma;

/// Symmetric stable law with index `beta` in (0, 2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableLaw {
    beta: f64,
}

/// Leading and second-order coefficients of the tail expansion of the
/// standardized stable density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailCoefficients {
    pub c: f64,
    pub d: f64,
}

/// Explicit jump times and sizes of a simulated pure-jump component over
/// `[0, horizon]`. Only jumps with magnitude above `truncation_floor` are
/// represented.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpSeries {
    pub horizon: f64,
    pub times: Vec<f64>,
    pub sizes: Vec<f64>,
    pub truncation_floor: f64,
}

/// Jump-size law of a compound Poisson component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeLaw {
    /// Fixed magnitude with a symmetric random sign.
    Fixed(f64),
    /// Uniform on (a, b).
    Uniform(f64, f64),
}

/// Compound Poisson component: arrival rate per unit time and size law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompoundPoissonSpec {
    pub lambda: f64,
    pub size_law: SizeLaw,
}

impl StableLaw {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 2.0) {
            return Err(Error::BetaOutOfRange(beta));
        }
        Ok(StableLaw { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// One exact draw of `Y_1` (Chambers-Mallows-Stuck transformation,
    /// symmetric case, rescaled to the `exp(-|u|^beta / 2)` normalization).
    ///
    /// The draw for an increment over time `s` is `s^{1/beta}` times this.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let b = self.beta;
        let v = (clamp_open01(rng.random::<f64>()) - 0.5) * PI;
        let w = -clamp_open01(rng.random::<f64>()).ln();
        let unit = (b * v).sin() / v.cos().powf(1.0 / b)
            * (((1.0 - b) * v).cos() / w).powf((1.0 - b) / b);
        unit * 0.5f64.powf(1.0 / b)
    }
}

#[inline]
fn clamp_open01(u: f64) -> f64 {
    u.clamp(1e-16, 1.0 - 1e-16)
}

/// Coefficients of the two-term tail expansion of the standardized stable
/// density: `c = Gamma(beta+1) sin(pi beta / 2) / (2 pi)` and
/// `d = -Gamma(2 beta + 1) sin(pi beta) / (8 pi)`.
///
/// `d` vanishes at beta = 1 and changes sign there: negative on (0, 1),
/// positive on (1, 2).
pub fn tail_coefficients(beta: f64) -> Result<TailCoefficients> {
    if !(beta > 0.0 && beta < 2.0) {
        return Err(Error::BetaOutOfRange(beta));
    }
    let c = gamma(beta + 1.0) * (PI * beta / 2.0).sin() / (2.0 * PI);
    let d = -gamma(2.0 * beta + 1.0) * (PI * beta).sin() / (8.0 * PI);
    Ok(TailCoefficients { c, d })
}

/// Two-term tail approximation `P(|Y_1| > x)` of the standardized stable law,
/// clamped to [0, 1]. Valid as an asymptotic expansion for x >= 1 model unit.
pub fn stable_tail(beta: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::invalid(format!("tail argument must be positive, got {x}")));
    }
    let TailCoefficients { c, d } = tail_coefficients(beta)?;
    let g = 2.0 * c / (beta * x.powf(beta)) + d / (beta * x.powf(2.0 * beta));
    Ok(g.clamp(0.0, 1.0))
}

/// Levy tail `F([-x, x]^c) = A / x^beta`: expected number of jumps per unit
/// time with magnitude above `x`.
pub fn levy_tail(a: f64, beta: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::invalid(format!("scale A must be positive, got {a}")));
    }
    if !(beta > 0.0 && beta < 2.0) {
        return Err(Error::BetaOutOfRange(beta));
    }
    if !(x > 0.0) {
        return Err(Error::invalid(format!("magnitude must be positive, got {x}")));
    }
    Ok(a / x.powf(beta))
}

/// Stable-scale bridge `A = 2 theta^beta c_beta / beta` between the process
/// scale `theta` and the Levy-measure scale `A`.
pub fn stable_levy_scale(theta: f64, beta: f64) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(Error::invalid(format!("theta must be positive, got {theta}")));
    }
    let coef = tail_coefficients(beta)?;
    Ok(2.0 * theta.powf(beta) * coef.c / beta)
}

impl JumpSeries {
    pub fn empty(horizon: f64) -> Self {
        JumpSeries {
            horizon,
            times: Vec::new(),
            sizes: Vec::new(),
            truncation_floor: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Number of jumps with magnitude strictly greater than `cutoff`.
    pub fn count_exceeding(&self, cutoff: f64) -> usize {
        self.sizes.iter().filter(|s| s.abs() > cutoff).count()
    }

    /// Sum of jump sizes falling in each of `n_steps` consecutive intervals
    /// of width `delta`. A jump at time t belongs to step `ceil(t/delta)`,
    /// matching the increment that contains it.
    pub fn increment_sums(&self, delta: f64, n_steps: usize) -> Vec<f64> {
        let mut sums = vec![0.0; n_steps];
        for (&t, &s) in self.times.iter().zip(&self.sizes) {
            let mut idx = (t / delta).ceil() as usize;
            if idx > 0 {
                idx -= 1;
            }
            if idx < n_steps {
                sums[idx] += s;
            }
        }
        sums
    }

    /// CSV with header `time,size`, full double precision.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "time,size")?;
        for (t, s) in self.times.iter().zip(&self.sizes) {
            writeln!(w, "{t},{s}")?;
        }
        Ok(())
    }
}

impl CompoundPoissonSpec {
    pub fn new(lambda: f64, size_law: SizeLaw) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::invalid(format!("arrival rate must be >= 0, got {lambda}")));
        }
        if let SizeLaw::Uniform(a, b) = size_law {
            if !(a < b) {
                return Err(Error::invalid(format!("uniform size law needs a < b, got [{a}, {b}]")));
            }
        }
        Ok(CompoundPoissonSpec { lambda, size_law })
    }
}

/// Marked-Poisson simulation of the jumps of a stable Levy component with
/// tail `F([-x, x]^c) = A / x^beta`, restricted to magnitudes above `floor`.
///
/// The count above `floor` is Poisson with mean `T A / floor^beta`, sizes are
/// symmetric Pareto above the floor and times are uniform on (0, T].
pub fn stable_jump_series<R: Rng + ?Sized>(
    a: f64,
    beta: f64,
    horizon: f64,
    floor: f64,
    rng: &mut R,
) -> Result<JumpSeries> {
    if !(a > 0.0) {
        return Err(Error::invalid(format!("scale A must be positive, got {a}")));
    }
    if !(beta > 0.0 && beta < 2.0) {
        return Err(Error::BetaOutOfRange(beta));
    }
    if !(floor > 0.0) {
        return Err(Error::invalid(
            "truncation floor must be positive: the full stable jump series is infinite".to_string(),
        ));
    }
    if !(horizon >= 0.0) {
        return Err(Error::invalid(format!("horizon must be >= 0, got {horizon}")));
    }
    if horizon == 0.0 {
        let mut s = JumpSeries::empty(0.0);
        s.truncation_floor = floor;
        return Ok(s);
    }

    let mean = horizon * a / floor.powf(beta);
    let count = sample_poisson(mean, rng);
    let mut times: Vec<f64> = (0..count)
        .map(|_| horizon * (1.0 - clamp_open01(rng.random::<f64>())))
        .collect();
    times.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let sizes: Vec<f64> = (0..count)
        .map(|_| {
            let u = clamp_open01(rng.random::<f64>());
            let magnitude = floor * u.powf(-1.0 / beta);
            if rng.random::<bool>() {
                magnitude
            } else {
                -magnitude
            }
        })
        .collect();
    Ok(JumpSeries {
        horizon,
        times,
        sizes,
        truncation_floor: floor,
    })
}

/// Compound Poisson jump series over `[0, horizon]`.
pub fn compound_poisson_series<R: Rng + ?Sized>(
    spec: &CompoundPoissonSpec,
    horizon: f64,
    rng: &mut R,
) -> Result<JumpSeries> {
    if !(horizon >= 0.0) {
        return Err(Error::invalid(format!("horizon must be >= 0, got {horizon}")));
    }
    let mean = spec.lambda * horizon;
    let count = sample_poisson(mean, rng);
    let mut times: Vec<f64> = (0..count)
        .map(|_| horizon * (1.0 - clamp_open01(rng.random::<f64>())))
        .collect();
    times.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let sizes: Vec<f64> = (0..count)
        .map(|_| match spec.size_law {
            SizeLaw::Fixed(s) => {
                let magnitude = s.abs();
                if rng.random::<bool>() {
                    magnitude
                } else {
                    -magnitude
                }
            }
            SizeLaw::Uniform(a, b) => loop {
                let x = a + (b - a) * rng.random::<f64>();
                if x != 0.0 {
                    break x;
                }
            },
        })
        .collect();
    Ok(JumpSeries {
        horizon,
        times,
        sizes,
        truncation_floor: 0.0,
    })
}

fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng) as u64
}
