//! Nonnegative scalar distributions used for the components of a step.
//!
//! CDFs are right-continuous: [`ScalarDistribution::cdf`] is `P(X <= t)`.
//! [`ScalarDistribution::cdf_left`] gives the left limit `P(X < t)`, which
//! is the convention the random-sum equations are written in. The two only
//! differ at atoms (deterministic values and the first node of a table).

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance};

/// Survival mass below which an unbounded support is cut off.
const TAIL_CUTOFF: f64 = 1e-18;

/// A distribution on `[0, inf)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "RawDistribution")]
pub enum ScalarDistribution {
    Exponential { rate: f64 },
    Deterministic { value: f64 },
    Uniform { lo: f64, hi: f64 },
    Erlang { shape: u32, rate: f64 },
    /// Piecewise-linear CDF through `(grid[i], cdf[i])`. Mass `cdf[0]` sits
    /// as an atom on `grid[0]`; the last CDF value must be 1.
    Tabulated { grid: Vec<f64>, cdf: Vec<f64> },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawDistribution {
    Exponential { rate: f64 },
    Deterministic { value: f64 },
    Uniform { lo: f64, hi: f64 },
    Erlang { shape: u32, rate: f64 },
    Tabulated { grid: Vec<f64>, cdf: Vec<f64> },
}

impl TryFrom<RawDistribution> for ScalarDistribution {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        let d = match raw {
            RawDistribution::Exponential { rate } => Self::Exponential { rate },
            RawDistribution::Deterministic { value } => Self::Deterministic { value },
            RawDistribution::Uniform { lo, hi } => Self::Uniform { lo, hi },
            RawDistribution::Erlang { shape, rate } => Self::Erlang { shape, rate },
            RawDistribution::Tabulated { grid, cdf } => Self::Tabulated { grid, cdf },
        };
        d.validate()?;
        Ok(d)
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidDistribution(msg.into())
}

impl ScalarDistribution {
    pub fn exponential(rate: f64) -> Result<Self> {
        let d = Self::Exponential { rate };
        d.validate()?;
        Ok(d)
    }

    pub fn deterministic(value: f64) -> Result<Self> {
        let d = Self::Deterministic { value };
        d.validate()?;
        Ok(d)
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let d = Self::Uniform { lo, hi };
        d.validate()?;
        Ok(d)
    }

    pub fn erlang(shape: u32, rate: f64) -> Result<Self> {
        let d = Self::Erlang { shape, rate };
        d.validate()?;
        Ok(d)
    }

    pub fn tabulated(grid: Vec<f64>, cdf: Vec<f64>) -> Result<Self> {
        let d = Self::Tabulated { grid, cdf };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Exponential { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return Err(invalid(format!("exponential rate must be positive, got {rate}")));
                }
            }
            Self::Deterministic { value } => {
                if !(value.is_finite() && *value >= 0.0) {
                    return Err(invalid(format!("deterministic value must be >= 0, got {value}")));
                }
            }
            Self::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && *lo >= 0.0 && lo < hi) {
                    return Err(invalid(format!("uniform needs 0 <= lo < hi, got [{lo}, {hi}]")));
                }
            }
            Self::Erlang { shape, rate } => {
                if *shape == 0 {
                    return Err(invalid("erlang shape must be >= 1"));
                }
                if !(rate.is_finite() && *rate > 0.0) {
                    return Err(invalid(format!("erlang rate must be positive, got {rate}")));
                }
            }
            Self::Tabulated { grid, cdf } => {
                if grid.len() < 2 || grid.len() != cdf.len() {
                    return Err(invalid("tabulated needs >= 2 nodes and equal-length grid/cdf"));
                }
                if !grid.iter().all(|x| x.is_finite()) || grid[0] < 0.0 {
                    return Err(invalid("tabulated grid must be finite and start at >= 0"));
                }
                if grid.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(invalid("tabulated grid must be strictly increasing"));
                }
                if cdf.iter().any(|c| !(0.0..=1.0).contains(c)) {
                    return Err(invalid("tabulated cdf values must lie in [0, 1]"));
                }
                if cdf.windows(2).any(|w| w[1] < w[0]) {
                    return Err(invalid("tabulated cdf must be nondecreasing"));
                }
                let last = cdf[cdf.len() - 1];
                if (last - 1.0).abs() > 1e-12 {
                    return Err(Error::NonfiniteMoment(format!(
                        "tabulated cdf ends at {last}; the remaining mass would sit at infinity"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `P(X <= t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match self {
            Self::Exponential { rate } => -(-rate * t).exp_m1(),
            Self::Deterministic { value } => {
                if t >= *value {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Uniform { lo, hi } => ((t - lo) / (hi - lo)).clamp(0.0, 1.0),
            Self::Erlang { shape, rate } => {
                if t == 0.0 {
                    0.0
                } else {
                    gamma_lr(*shape as f64, rate * t)
                }
            }
            Self::Tabulated { grid, cdf } => tabulated_cdf(grid, cdf, t),
        }
    }

    /// `P(X < t)`.
    pub fn cdf_left(&self, t: f64) -> f64 {
        match self {
            Self::Deterministic { value } => {
                if t > *value {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Tabulated { grid, .. } if t <= grid[0] => 0.0,
            _ => self.cdf(t),
        }
    }

    /// `P(X > t)`.
    pub fn sf(&self, t: f64) -> f64 {
        match self {
            Self::Exponential { rate } => {
                if t <= 0.0 {
                    1.0
                } else {
                    (-rate * t).exp()
                }
            }
            Self::Erlang { shape, rate } => {
                if t <= 0.0 {
                    1.0
                } else {
                    gamma_ur(*shape as f64, rate * t)
                }
            }
            _ => 1.0 - self.cdf(t),
        }
    }

    /// `P(X >= t)`.
    pub fn sf_left(&self, t: f64) -> f64 {
        match self {
            Self::Deterministic { .. } | Self::Tabulated { .. } => 1.0 - self.cdf_left(t),
            _ => self.sf(t),
        }
    }

    /// Point masses as `(location, mass)`.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match self {
            Self::Deterministic { value } => vec![(*value, 1.0)],
            Self::Tabulated { grid, cdf } if cdf[0] > 0.0 => vec![(grid[0], cdf[0])],
            _ => Vec::new(),
        }
    }

    /// Density of the absolutely continuous part.
    pub fn density(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match self {
            Self::Exponential { rate } => rate * (-rate * t).exp(),
            Self::Deterministic { .. } => 0.0,
            Self::Uniform { lo, hi } => {
                if t >= *lo && t <= *hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            Self::Erlang { shape, rate } => {
                if t == 0.0 {
                    return if *shape == 1 { *rate } else { 0.0 };
                }
                let n = *shape as f64;
                (n * rate.ln() + (n - 1.0) * t.ln() - rate * t - ln_gamma(n)).exp()
            }
            Self::Tabulated { grid, cdf } => {
                if t < grid[0] || t > grid[grid.len() - 1] {
                    return 0.0;
                }
                let i = grid.partition_point(|&g| g <= t).clamp(1, grid.len() - 1);
                (cdf[i] - cdf[i - 1]) / (grid[i] - grid[i - 1])
            }
        }
    }

    /// Interval carrying the absolutely continuous part, if any. Unbounded
    /// supports are cut where the survival function drops below 1e-18.
    pub fn continuous_support(&self) -> Option<(f64, f64)> {
        match self {
            Self::Exponential { rate } => Some((0.0, -TAIL_CUTOFF.ln() / rate)),
            Self::Deterministic { .. } => None,
            Self::Uniform { lo, hi } => Some((*lo, *hi)),
            Self::Erlang { shape, rate } => {
                let n = *shape as f64;
                let mut x = (n + 10.0 * n.sqrt() + 40.0) / rate;
                while gamma_ur(n, rate * x) > TAIL_CUTOFF {
                    x *= 1.5;
                }
                Some((0.0, x))
            }
            Self::Tabulated { grid, cdf } => {
                if cdf[0] >= 1.0 {
                    None
                } else {
                    Some((grid[0], grid[grid.len() - 1]))
                }
            }
        }
    }

    /// Points where the CDF or its derivative is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Exponential { .. } | Self::Erlang { .. } => Vec::new(),
            Self::Deterministic { value } => vec![*value],
            Self::Uniform { lo, hi } => vec![*lo, *hi],
            Self::Tabulated { grid, .. } => grid.clone(),
        }
    }

    /// Rough time scale of the distribution, used to size grids.
    pub fn scale(&self) -> f64 {
        match self {
            Self::Exponential { rate } => 1.0 / rate,
            Self::Erlang { shape, rate } => (*shape as f64 + (*shape as f64).sqrt()) / rate,
            Self::Deterministic { value } => *value,
            Self::Uniform { hi, .. } => *hi,
            Self::Tabulated { grid, .. } => grid[grid.len() - 1],
        }
    }

    /// `E[g(X) I(X < upper)]`, splitting the continuous part at this
    /// distribution's breakpoints and at `extra_breaks`.
    pub fn expect<F: Fn(f64) -> f64>(&self, g: F, upper: f64, extra_breaks: &[f64]) -> f64 {
        let mut total: f64 = self
            .atoms()
            .into_iter()
            .filter(|&(x, _)| x < upper)
            .map(|(x, w)| w * g(x))
            .sum();
        if let Some((lo, hi)) = self.continuous_support() {
            let hi = hi.min(upper);
            if hi > lo {
                let mut breaks = self.breakpoints();
                breaks.extend_from_slice(extra_breaks);
                total += quadrature::integrate_pieces(
                    |x| g(x) * self.density(x),
                    lo,
                    hi,
                    &breaks,
                    Tolerance::default(),
                );
            }
        }
        total
    }

    /// `E[X^k exp(-s X) I(X < upper)]` for `k` in `0..=2` and `s >= 0`.
    /// Closed form for the exponential family and point masses.
    pub fn laplace_moment(&self, k: u32, s: f64, upper: f64) -> f64 {
        match self {
            Self::Exponential { rate } => gamma_family_moment(1, *rate, k, s, upper),
            Self::Erlang { shape, rate } => gamma_family_moment(*shape, *rate, k, s, upper),
            Self::Deterministic { value } => {
                if *value < upper {
                    value.powi(k as i32) * (-s * value).exp()
                } else {
                    0.0
                }
            }
            _ => self.expect(|x| x.powi(k as i32) * (-s * x).exp(), upper, &[]),
        }
    }

    /// Laplace–Stieltjes transform `E exp(-z X)`.
    pub fn laplace(&self, z: f64) -> f64 {
        match self {
            Self::Exponential { rate } => rate / (rate + z),
            Self::Erlang { shape, rate } => (rate / (rate + z)).powi(*shape as i32),
            Self::Deterministic { value } => (-z * value).exp(),
            _ => self.laplace_moment(0, z, f64::INFINITY),
        }
    }

    /// `1 - E exp(-z X)` without cancellation for small `z`.
    pub fn laplace_complement(&self, z: f64) -> f64 {
        match self {
            Self::Exponential { rate } => z / (rate + z),
            Self::Erlang { shape, rate } => -(-(*shape as f64) * (z / rate).ln_1p()).exp_m1(),
            Self::Deterministic { value } => -(-z * value).exp_m1(),
            _ => self.expect(|x| -(-z * x).exp_m1(), f64::INFINITY, &[]),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Exponential { rate } => 1.0 / rate,
            Self::Erlang { shape, rate } => *shape as f64 / rate,
            Self::Deterministic { value } => *value,
            Self::Uniform { lo, hi } => 0.5 * (lo + hi),
            Self::Tabulated { .. } => self.expect(|x| x, f64::INFINITY, &[]),
        }
    }

    pub fn second_moment(&self) -> f64 {
        match self {
            Self::Exponential { rate } => 2.0 / (rate * rate),
            Self::Erlang { shape, rate } => {
                let n = *shape as f64;
                n * (n + 1.0) / (rate * rate)
            }
            Self::Deterministic { value } => value * value,
            Self::Uniform { lo, hi } => (lo * lo + lo * hi + hi * hi) / 3.0,
            Self::Tabulated { .. } => self.expect(|x| x * x, f64::INFINITY, &[]),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Self::Exponential { rate } => 1.0 / (rate * rate),
            Self::Erlang { shape, rate } => *shape as f64 / (rate * rate),
            Self::Deterministic { .. } => 0.0,
            Self::Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
            Self::Tabulated { .. } => {
                let m = self.mean();
                self.expect(|x| (x - m) * (x - m), f64::INFINITY, &[])
            }
        }
    }

    pub fn is_exponential(&self) -> Option<f64> {
        match self {
            Self::Exponential { rate } => Some(*rate),
            _ => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Exponential { rate } => Exp::new(*rate).expect("validated rate").sample(rng),
            Self::Deterministic { value } => *value,
            Self::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Self::Erlang { shape, rate } => {
                if *shape <= 8 {
                    let exp = Exp::new(*rate).expect("validated rate");
                    (0..*shape).map(|_| exp.sample(rng)).sum()
                } else {
                    Gamma::new(*shape as f64, 1.0 / rate)
                        .expect("validated shape")
                        .sample(rng)
                }
            }
            Self::Tabulated { grid, cdf } => {
                let u: f64 = rng.random();
                if u < cdf[0] {
                    return grid[0];
                }
                let i = cdf.partition_point(|&c| c < u).clamp(1, cdf.len() - 1);
                let (c0, c1) = (cdf[i - 1], cdf[i]);
                grid[i - 1] + (grid[i] - grid[i - 1]) * (u - c0) / (c1 - c0)
            }
        }
    }
}

fn tabulated_cdf(grid: &[f64], cdf: &[f64], t: f64) -> f64 {
    if t < grid[0] {
        return 0.0;
    }
    if t >= grid[grid.len() - 1] {
        return 1.0;
    }
    let i = grid.partition_point(|&g| g <= t);
    let (g0, g1) = (grid[i - 1], grid[i]);
    cdf[i - 1] + (cdf[i] - cdf[i - 1]) * (t - g0) / (g1 - g0)
}

/// `E[X^k e^{-sX} I(X < upper)]` for `X ~ Erlang(shape, rate)`:
/// `rate^n / Γ(n) * Γ(m+1) / c^{m+1} * P(m+1, c * upper)` with
/// `c = s + rate` and `m = k + n - 1`.
fn gamma_family_moment(shape: u32, rate: f64, k: u32, s: f64, upper: f64) -> f64 {
    if upper <= 0.0 {
        return 0.0;
    }
    let n = shape as f64;
    let c = s + rate;
    let m1 = (k + shape) as f64;
    let log_scale = n * rate.ln() - ln_gamma(n) + ln_gamma(m1) - m1 * c.ln();
    let frac = if upper.is_infinite() {
        1.0
    } else if shape == 1 && k == 0 {
        -(-c * upper).exp_m1()
    } else {
        gamma_lr(m1, c * upper)
    };
    log_scale.exp() * frac
}
