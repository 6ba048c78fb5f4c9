//! Survival curves of `S`: the renewal-type integral equation
//! `P(t) = 1 - F(t) + int_[0,t) P(t - x) dF0(x)` solved by marching, and
//! Gaver-Stehfest inversion of the transform as a second route.

mod stehfest;

pub use stehfest::{invert_laplace, stehfest_weights, StehfestInverter};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::steplaw::JointStepLaw;

/// Monotonicity slack tolerated before the solver gives up on the grid.
pub const MONOTONE_SLACK: f64 = 1e-6;

/// `t -> P(S >= t)` tabulated at `t_n = n h`, linear in between.
///
/// Node 0 holds the right limit at 0, which is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub h: f64,
    pub values: Vec<f64>,
}

impl SurvivalCurve {
    pub fn new(h: f64, values: Vec<f64>) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidArgument(format!("grid step must be positive, got {h}")));
        }
        if values.len() < 2 {
            return Err(Error::InvalidArgument("a survival curve needs at least two nodes".into()));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument("survival values must lie in [0, 1]".into()));
        }
        Ok(Self { h, values })
    }

    /// Tabulates `f` on `[0, t_max]`.
    pub fn from_fn<F: Fn(f64) -> f64>(t_max: f64, h: f64, f: F) -> Result<Self> {
        let n = node_count(t_max, h)?;
        Self::new(h, (0..=n).map(|i| f(i as f64 * h).clamp(0.0, 1.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn t(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn t_max(&self) -> f64 {
        self.t(self.values.len() - 1)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|i| self.t(i))
    }

    /// Linear interpolation; 1 before the grid, the last value after it.
    pub fn at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.values[0];
        }
        let x = t / self.h;
        let i = x.floor() as usize;
        if i + 1 >= self.values.len() {
            return self.values[self.values.len() - 1];
        }
        let w = x - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    /// Trapezoidal integral over the whole grid.
    pub fn integral(&self) -> f64 {
        let v = &self.values;
        self.h * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[v.len() - 1]))
    }

    /// Trapezoidal integral stopped at the first node where the curve falls
    /// below `floor`.
    pub fn integral_until(&self, floor: f64) -> f64 {
        let end = self.values.iter().position(|&v| v < floor).unwrap_or(self.values.len() - 1);
        self.values[..=end]
            .windows(2)
            .map(|w| 0.5 * self.h * (w[0] + w[1]))
            .sum()
    }

    /// `sup |self - other|` over nodes of two curves on the same grid.
    pub fn sup_distance(&self, other: &SurvivalCurve) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    /// Same as [`Self::sup_distance`] restricted to `t` in `[lo, hi]`.
    pub fn sup_distance_on(&self, other: &SurvivalCurve, lo: f64, hi: f64) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self
            .times()
            .zip(self.values.iter().zip(&other.values))
            .filter(|(t, _)| *t >= lo - 1e-12 && *t <= hi + 1e-12)
            .map(|(_, (a, b))| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn sup_error<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.times()
            .zip(&self.values)
            .map(|(t, v)| (v - f(t)).abs())
            .fold(0.0, f64::max)
    }

    fn same_grid(&self, other: &SurvivalCurve) -> Result<()> {
        if self.values.len() != other.values.len() || (self.h - other.h).abs() > 1e-12 * self.h {
            return Err(Error::ShapeMismatch(format!(
                "grids differ: {} nodes at h = {} vs {} nodes at h = {}",
                self.values.len(),
                self.h,
                other.values.len(),
                other.h
            )));
        }
        Ok(())
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0])
    }

    /// CSV with header `t,survival`, 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,survival\n");
        for (t, v) in self.times().zip(&self.values) {
            out.push_str(&format_g(t));
            out.push(',');
            out.push_str(&format_g(*v));
            out.push('\n');
        }
        out
    }
}

/// Formats like C's `%.12g`.
pub fn format_g(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -4 || exp >= DIGITS {
        let m = trim_zeros(mantissa);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn node_count(t_max: f64, h: f64) -> Result<usize> {
    if !(h > 0.0 && h.is_finite() && t_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("bad grid: t_max = {t_max}, h = {h}")));
    }
    if t_max < 10.0 * h * (1.0 - 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "grid needs t_max >= 10 h (t_max = {t_max}, h = {h})"
        )));
    }
    Ok((t_max / h - 1e-9).ceil() as usize)
}

/// Atom of the failure kernel moved to its nearest node.
#[derive(Debug, Clone, Copy)]
struct SnappedAtom {
    node: usize,
    at: f64,
    mass: f64,
}

/// Kernel data sampled on the grid.
struct Kernel {
    /// `1 - F(t_n)`
    forcing: Vec<f64>,
    /// increments of the continuous part of `F0` over each cell
    increments: Vec<f64>,
    atoms: Vec<SnappedAtom>,
}

fn fail_atoms(law: &JointStepLaw) -> Vec<(f64, f64)> {
    law.atoms().into_iter().filter(|a| a.mass0 > 0.0).map(|a| (a.at, a.mass0)).collect()
}

/// Continuous part of `F0` at each point (left limits, atoms removed).
fn continuous_fail_cdf(law: &JointStepLaw, atoms: &[(f64, f64)], ts: &[f64]) -> Vec<f64> {
    ts.par_iter()
        .map(|&t| {
            let below: f64 = atoms.iter().filter(|(x, _)| *x < t).map(|(_, w)| w).sum();
            law.sub_cdfs(t).f0 - below
        })
        .collect()
}

fn build_kernel(law: &JointStepLaw, n: usize, h: f64) -> Kernel {
    let ts: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
    let raw_atoms = fail_atoms(law);
    let forcing: Vec<f64> = ts.par_iter().map(|&t| 1.0 - law.sub_cdfs(t).f).collect();
    let f0c = continuous_fail_cdf(law, &raw_atoms, &ts);
    let increments = f0c.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect();
    let atoms = raw_atoms
        .iter()
        .map(|&(at, mass)| SnappedAtom { node: (at / h).round() as usize, at, mass })
        .collect();
    Kernel { forcing, increments, atoms }
}

/// Marches the discretized equation on `[0, t_max]` with step `h`.
///
/// Each cell carries the continuous increment of `F0`, paired with the
/// average of the unknown at the cell's two ends. Atoms of `F0` are moved
/// to the nearest node with their full mass.
pub fn solve_survival(law: &JointStepLaw, t_max: f64, h: f64) -> Result<SurvivalCurve> {
    let n_max = node_count(t_max, h)?;
    let k = build_kernel(law, n_max, h);
    let w0: f64 = k.atoms.iter().filter(|a| a.node == 0).map(|a| a.mass).sum();
    if w0 >= 1.0 - 1e-12 {
        return Err(Error::AtomAtZero { mass: w0 });
    }
    let m = &k.increments;
    let mut p = vec![0.0; n_max + 1];
    p[0] = 1.0;
    for n in 1..=n_max {
        let t_n = n as f64 * h;
        let mut rhs = k.forcing[n] + 0.5 * m[0] * p[n - 1];
        for j in 1..n {
            rhs += 0.5 * m[j] * (p[n - j - 1] + p[n - j]);
        }
        for a in &k.atoms {
            if a.node == 0 || a.node > n {
                continue;
            }
            if a.node < n || a.at < t_n {
                rhs += a.mass * p[n - a.node];
            }
        }
        p[n] = rhs / (1.0 - 0.5 * m[0] - w0);
    }
    let mut running = 1.0f64;
    for (n, v) in p.iter_mut().enumerate() {
        if *v > running + MONOTONE_SLACK {
            return Err(Error::GridTooCoarse { t: n as f64 * h, excess: *v - running });
        }
        *v = v.clamp(0.0, running);
        running = *v;
    }
    SurvivalCurve::new(h, p)
}

/// `max_n |P(t_n) - RHS(t_n)|` with the right side evaluated by a Stieltjes
/// sum on `subcells` subdivisions per cell, the curve interpolated
/// linearly, and atoms of `F0` taken at their exact locations.
pub fn residual(law: &JointStepLaw, curve: &SurvivalCurve, subcells: usize) -> Result<f64> {
    let subcells = subcells.max(1);
    let n_max = curve.len() - 1;
    let h = curve.h;
    let hs = h / subcells as f64;
    let raw_atoms = fail_atoms(law);
    let fine: Vec<f64> = (0..=n_max * subcells).map(|i| i as f64 * hs).collect();
    let f0c = continuous_fail_cdf(law, &raw_atoms, &fine);
    let dm: Vec<f64> = f0c.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect();
    let forcing: Vec<f64> = (0..=n_max).map(|n| 1.0 - law.sub_cdfs(n as f64 * h).f).collect();
    let worst = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let t_n = n as f64 * h;
            let mut rhs = forcing[n];
            for (i, d) in dm.iter().take(n * subcells).enumerate() {
                rhs += d * curve.at(t_n - (i as f64 + 0.5) * hs);
            }
            for &(x, w) in &raw_atoms {
                if x < t_n {
                    rhs += w * curve.at(t_n - x);
                }
            }
            (curve.values[n] - rhs).abs()
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}
