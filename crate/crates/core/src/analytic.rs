//! Closed-form characteristics of the stopped sum `S = zeta_1 + ... + zeta_nu`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::steplaw::{JointStepLaw, StepMoments};
use crate::volterra::SurvivalCurve;

/// `E S` and `D S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomSumMoments {
    pub mean: f64,
    pub variance: f64,
}

/// `E S = a / q`.
pub fn mean_random_sum(m: &StepMoments) -> f64 {
    m.a / m.q
}

/// `D S = sigma2 / q + (a^2 (q - 1) + 2 a a0) / q^2`.
///
/// Valid for dependent `(zeta, eps)`; a negative result means the moments
/// cannot come from one joint law.
pub fn variance_random_sum(m: &StepMoments) -> Result<f64> {
    let StepMoments { a, sigma2, a0, q } = *m;
    let v = sigma2 / q + (a * a * (q - 1.0) + 2.0 * a * a0) / (q * q);
    if !v.is_finite() {
        return Err(Error::NonfiniteMoment(format!("variance of the sum from {m:?}")));
    }
    if v < 0.0 {
        return Err(Error::NegativeVariance(v));
    }
    Ok(v)
}

/// `D zeta E nu + (E zeta)^2 D nu`: the variance when `zeta` and `eps` are
/// independent. Wrong for dependent steps; kept for comparison.
pub fn independent_case_variance(m: &StepMoments) -> f64 {
    let StepMoments { a, sigma2, q, .. } = *m;
    sigma2 / q + a * a * (1.0 - q) / (q * q)
}

pub fn random_sum_moments(m: &StepMoments) -> Result<RandomSumMoments> {
    Ok(RandomSumMoments {
        mean: mean_random_sum(m),
        variance: variance_random_sum(m)?,
    })
}

/// Laplace-Stieltjes transforms of one step and of the stopped sum, on
/// real `z >= 0`.
#[derive(Debug, Clone)]
pub struct LaplaceTransforms {
    law: JointStepLaw,
}

pub fn laplace_transforms(law: &JointStepLaw) -> LaplaceTransforms {
    LaplaceTransforms { law: law.clone() }
}

impl LaplaceTransforms {
    pub fn law(&self) -> &JointStepLaw {
        &self.law
    }

    /// `E exp(-z zeta)`
    pub fn psi(&self, z: f64) -> f64 {
        let (p0, p1) = self.law.laplace_parts(z);
        p0 + p1
    }

    /// `E exp(-z zeta) I(eps = 0)`
    pub fn psi0(&self, z: f64) -> f64 {
        self.law.laplace_parts(z).0
    }

    /// `E exp(-z zeta) I(eps = 1)`
    pub fn psi1(&self, z: f64) -> f64 {
        self.law.laplace_parts(z).1
    }

    pub fn one_minus_psi(&self, z: f64) -> f64 {
        self.law.one_minus_psi(z)
    }

    /// `E exp(-z S) = psi1 / (1 - psi0)`, with `1 - psi0` formed as
    /// `(1 - psi) + psi1` so that nothing cancels near `z = 0`.
    pub fn phi(&self, z: f64) -> f64 {
        let (num, den) = self.phi_parts(z);
        num / den
    }

    /// `1 - phi(z)`, accurate for small `z`.
    pub fn one_minus_phi(&self, z: f64) -> f64 {
        let (num, den) = self.phi_parts(z);
        (den - num) / den
    }

    fn phi_parts(&self, z: f64) -> (f64, f64) {
        let psi1 = self.law.laplace_parts(z).1;
        let c = self.law.one_minus_psi(z).max(0.0);
        (psi1, c + psi1)
    }
}

/// An exponential survival law `P(S >= t) = exp(-rate t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialSurvival {
    pub rate: f64,
}

impl ExponentialSurvival {
    pub fn sf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            1.0
        } else {
            (-self.rate * t).exp()
        }
    }

    pub fn curve(&self, t_max: f64, h: f64) -> Result<SurvivalCurve> {
        SurvivalCurve::from_fn(t_max, h, |t| self.sf(t))
    }
}

/// Exact survival law of `S` where one is known: a min-threshold step with
/// exponential `tau` (rate `lambda`, whatever `eta` is) and an independent
/// step with exponential `zeta` (rate `lambda q`).
pub fn closed_form_survival(law: &JointStepLaw) -> Option<ExponentialSurvival> {
    match law {
        JointStepLaw::MinThreshold { tau, .. } => {
            tau.is_exponential().map(|rate| ExponentialSurvival { rate })
        }
        JointStepLaw::Independent { zeta, q } => {
            zeta.is_exponential().map(|rate| ExponentialSurvival { rate: rate * q })
        }
        _ => None,
    }
}

/// Distance of the rescaled transform `phi(q z)` from `1 / (1 + a z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub q: f64,
    pub a: f64,
    pub sup_error: f64,
    pub at_z: f64,
}

pub fn scaled_limit_diagnostics(law: &JointStepLaw, z_grid: &[f64]) -> Result<LimitReport> {
    let m = law.step_moments()?;
    let lt = laplace_transforms(law);
    let mut report = LimitReport { q: m.q, a: m.a, sup_error: 0.0, at_z: 0.0 };
    for &z in z_grid {
        if !(z >= 0.0) {
            return Err(Error::InvalidArgument(format!("z grid must be nonnegative, got {z}")));
        }
        let err = (lt.phi(m.q * z) - 1.0 / (1.0 + m.a * z)).abs();
        if err > report.sup_error {
            report.sup_error = err;
            report.at_z = z;
        }
    }
    Ok(report)
}

/// `-phi'(0)` by a forward difference on `1 - phi`, Richardson-extrapolated
/// from steps `h` and `h / 2`.
pub fn mean_from_transform(lt: &LaplaceTransforms, h: f64) -> f64 {
    let d = |h: f64| lt.one_minus_phi(h) / h;
    2.0 * d(0.5 * h) - d(h)
}

/// `phi''(0)` from the second forward difference
/// `(phi(0) - 2 phi(h) + phi(2h)) / h^2`, Richardson-extrapolated twice.
pub fn second_moment_from_transform(lt: &LaplaceTransforms, h: f64) -> f64 {
    let d = |h: f64| (2.0 * lt.one_minus_phi(h) - lt.one_minus_phi(2.0 * h)) / (h * h);
    let (d1, d2, d4) = (d(h), d(0.5 * h), d(0.25 * h));
    let r1 = 2.0 * d2 - d1;
    let r2 = 2.0 * d4 - d2;
    (4.0 * r2 - r1) / 3.0
}
