//! Gaver-Stehfest inversion on the real axis.

use rayon::prelude::*;

use super::SurvivalCurve;
use crate::analytic::LaplaceTransforms;
use crate::error::{Error, Result};

/// Stehfest weights `V_1..V_n` for even `n`.
pub fn stehfest_weights(n: usize) -> Vec<f64> {
    assert!(n >= 2 && n % 2 == 0, "Stehfest order must be even and >= 2");
    let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
    let half = n / 2;
    (1..=n)
        .map(|k| {
            let mut sum = 0.0;
            for j in (k + 1) / 2..=k.min(half) {
                sum += (j as f64).powi(half as i32) * fact(2 * j)
                    / (fact(half - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k));
            }
            if (k + half) % 2 == 0 {
                sum
            } else {
                -sum
            }
        })
        .collect()
}

/// Inverts `(1 - phi(s)) / s`, whose original is `P(S >= t)`, and checks
/// the result against a higher order.
#[derive(Debug, Clone)]
pub struct StehfestInverter {
    pub order: usize,
    pub check_order: usize,
    pub tolerance: f64,
    weights: Vec<f64>,
    check_weights: Vec<f64>,
}

impl Default for StehfestInverter {
    fn default() -> Self {
        Self::new(12, 16, 1e-3).expect("default orders are valid")
    }
}

impl StehfestInverter {
    pub fn new(order: usize, check_order: usize, tolerance: f64) -> Result<Self> {
        for n in [order, check_order] {
            if n < 2 || n % 2 != 0 || n > 30 {
                return Err(Error::InvalidArgument(format!(
                    "Stehfest order must be even and in 2..=30, got {n}"
                )));
            }
        }
        Ok(Self {
            order,
            check_order,
            tolerance,
            weights: stehfest_weights(order),
            check_weights: stehfest_weights(check_order),
        })
    }

    fn apply<F: Fn(f64) -> f64>(weights: &[f64], f: &F, t: f64) -> f64 {
        let c = std::f64::consts::LN_2 / t;
        c * weights
            .iter()
            .enumerate()
            .map(|(k, v)| v * f((k + 1) as f64 * c))
            .sum::<f64>()
    }

    /// Original of the transform `f` at `t > 0` at the configured order.
    pub fn invert<F: Fn(f64) -> f64>(&self, f: &F, t: f64) -> f64 {
        Self::apply(&self.weights, f, t)
    }

    /// `P(S >= t)` from `1 - phi`, clamped to `[0, 1]`.
    pub fn survival_at<F: Fn(f64) -> f64>(&self, one_minus_phi: &F, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(1.0);
        }
        let g = |s: f64| one_minus_phi(s) / s;
        let low = Self::apply(&self.weights, &g, t);
        let high = Self::apply(&self.check_weights, &g, t);
        let diff = (low - high).abs();
        if !(diff <= self.tolerance) {
            return Err(Error::InversionUnstable { t, low: self.order, high: self.check_order, diff });
        }
        Ok(low.clamp(0.0, 1.0))
    }

    pub fn survival_curve<F: Fn(f64) -> f64 + Sync>(
        &self,
        one_minus_phi: F,
        t_max: f64,
        h: f64,
    ) -> Result<SurvivalCurve> {
        let shape = SurvivalCurve::from_fn(t_max, h, |_| 1.0)?;
        let values = (0..shape.len())
            .into_par_iter()
            .map(|i| self.survival_at(&one_minus_phi, i as f64 * h))
            .collect::<Result<Vec<f64>>>()?;
        SurvivalCurve::new(h, values)
    }
}

/// Survival curve of `S` on `[0, t_max]` from its transform, default orders.
pub fn invert_laplace(lt: &LaplaceTransforms, t_max: f64, h: f64) -> Result<SurvivalCurve> {
    StehfestInverter::default().survival_curve(|s| lt.one_minus_phi(s), t_max, h)
}
