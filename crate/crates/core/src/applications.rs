//! The three worked models: a type-1 counter, a duplicated system with
//! repair and light standby, and a single-server queue cut into
//! regeneration cycles.

use serde::{Deserialize, Serialize};

use crate::analytic::{mean_random_sum, variance_random_sum};
use crate::dist::ScalarDistribution;
use crate::error::{Error, Result};
use crate::steplaw::{JointStepLaw, StepMoments};
use crate::volterra::{solve_survival, SurvivalCurve};

/// Law with an atom at 0 and an exponential tail:
/// `P(X = 0) = atom_mass`, `P(X > t) = (1 - atom_mass) exp(-tail_rate t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedExponential {
    pub atom_mass: f64,
    pub tail_rate: f64,
}

impl MixedExponential {
    /// `P(X > t)`
    pub fn sf(&self, t: f64) -> f64 {
        if t < 0.0 {
            1.0
        } else {
            (1.0 - self.atom_mass) * (-self.tail_rate * t).exp()
        }
    }

    /// `P(X <= t)`
    pub fn cdf(&self, t: f64) -> f64 {
        1.0 - self.sf(t)
    }

    pub fn mean(&self) -> f64 {
        (1.0 - self.atom_mass) / self.tail_rate
    }
}

fn check_rate(name: &str, v: f64, allow_zero: bool) -> Result<()> {
    let ok = v.is_finite() && (v > 0.0 || (allow_zero && v == 0.0));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be {}, got {v}", if allow_zero { ">= 0" } else { "> 0" })))
    }
}

/// Poisson particle flow of rate `lambda`; a registered particle locks the
/// counter for a time drawn from `lock`, and particles arriving meanwhile
/// are lost. `T` is the time until the first lost particle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeigerRaw")]
pub struct GeigerModel {
    pub lambda: f64,
    pub lock: ScalarDistribution,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GeigerRaw {
    lambda: f64,
    lock: ScalarDistribution,
}

impl TryFrom<GeigerRaw> for GeigerModel {
    type Error = Error;
    fn try_from(r: GeigerRaw) -> Result<Self> {
        Self::new(r.lambda, r.lock)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeigerCharacteristics {
    pub q: f64,
    pub a: f64,
    pub sigma2: f64,
    pub a0: f64,
    #[serde(rename = "mean_T")]
    pub mean_t: f64,
    #[serde(rename = "var_T")]
    pub var_t: f64,
}

impl GeigerModel {
    pub fn new(lambda: f64, lock: ScalarDistribution) -> Result<Self> {
        check_rate("lambda", lambda, false)?;
        lock.validate()?;
        let m = Self { lambda, lock };
        m.step_law()?;
        Ok(m)
    }

    /// `zeta = tau` (gap to the next particle), `eps = I(tau < eta)`.
    pub fn step_law(&self) -> Result<JointStepLaw> {
        JointStepLaw::race_step(ScalarDistribution::exponential(self.lambda)?, self.lock.clone())
    }

    pub fn characteristics(&self) -> Result<GeigerCharacteristics> {
        let lambda = self.lambda;
        let q = self.lock.laplace_complement(lambda);
        let m = self.step_law()?.step_moments()?;
        let (a0, mean_t) = (m.a0, 1.0 / (lambda * q));
        let var_t = (2.0 * (q + lambda * a0) - 1.0) / (lambda * lambda * q * q);
        Ok(GeigerCharacteristics { q, a: m.a, sigma2: m.sigma2, a0, mean_t, var_t })
    }

    /// `P(T >= t)` from the integral equation.
    pub fn survival(&self, t_max: f64, h: f64) -> Result<SurvivalCurve> {
        solve_survival(&self.step_law()?, t_max, h)
    }
}

/// Two units, one operating (failure rate `lambda`) and one in light
/// standby (failure rate `lambda_prime`), one repair facility with repair
/// law `repair`. A busy period lasts while at least one unit works.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RedundantRaw")]
pub struct RedundantModel {
    pub lambda: f64,
    pub lambda_prime: f64,
    pub repair: ScalarDistribution,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RedundantRaw {
    lambda: f64,
    lambda_prime: f64,
    repair: ScalarDistribution,
}

impl TryFrom<RedundantRaw> for RedundantModel {
    type Error = Error;
    fn try_from(r: RedundantRaw) -> Result<Self> {
        Self::new(r.lambda, r.lambda_prime, r.repair)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RedundantCharacteristics {
    pub q: f64,
    pub a: f64,
    pub sigma2: f64,
    pub a0: f64,
    #[serde(rename = "mean_W1")]
    pub mean_w1: f64,
    #[serde(rename = "mean_Wk")]
    pub mean_wk: f64,
    #[serde(rename = "var_W1")]
    pub var_w1: f64,
    #[serde(rename = "var_Wk")]
    pub var_wk: f64,
    pub alpha0_law: MixedExponential,
    pub alpha1_law: MixedExponential,
}

impl RedundantModel {
    pub fn new(lambda: f64, lambda_prime: f64, repair: ScalarDistribution) -> Result<Self> {
        check_rate("lambda", lambda, false)?;
        check_rate("lambda_prime", lambda_prime, true)?;
        repair.validate()?;
        let m = Self { lambda, lambda_prime, repair };
        m.step_law()?;
        Ok(m)
    }

    /// Rate of leaving the state with both units up.
    pub fn exit_rate(&self) -> f64 {
        self.lambda + self.lambda_prime
    }

    /// `zeta = min(tau, eta) + tau~` with `tau~ ~ Exp(lambda + lambda')`.
    pub fn step_law(&self) -> Result<JointStepLaw> {
        JointStepLaw::shifted_min(
            ScalarDistribution::exponential(self.lambda)?,
            self.repair.clone(),
            ScalarDistribution::exponential(self.exit_rate())?,
        )
    }

    pub fn characteristics(&self) -> Result<RedundantCharacteristics> {
        let (lambda, c) = (self.lambda, self.exit_rate());
        let g = &self.repair;
        let q = g.laplace_complement(lambda);
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::DegenerateLaw { q });
        }
        let l0 = g.laplace_moment(0, lambda, f64::INFINITY);
        let l1 = g.laplace_moment(1, lambda, f64::INFINITY);
        // int t e^{-lambda t} G(t) dt = E[e^{-lambda eta} (eta / lambda + 1 / lambda^2)]
        let weighted = l1 / lambda + l0 / (lambda * lambda);
        let a = q / lambda + 1.0 / c;
        let sigma2 = (2.0 - q * q) / (lambda * lambda) + 1.0 / (c * c) - 2.0 * weighted;
        let a0 = l1 + (1.0 - q) / c;
        let m = StepMoments::new(a, sigma2, a0, q)?;
        let var_w1 = variance_random_sum(&m)?;
        Ok(RedundantCharacteristics {
            q,
            a,
            sigma2,
            a0,
            mean_w1: 1.0 / lambda + 1.0 / (c * q),
            mean_wk: (lambda + q * self.lambda_prime) / (lambda * c * q),
            var_w1,
            var_wk: var_w1 - 1.0 / (c * c),
            alpha0_law: MixedExponential { atom_mass: 0.0, tail_rate: c * q },
            alpha1_law: MixedExponential { atom_mass: 0.0, tail_rate: lambda },
        })
    }

    /// `P(W1 >= t)` from the integral equation.
    pub fn survival(&self, t_max: f64, h: f64) -> Result<SurvivalCurve> {
        solve_survival(&self.step_law()?, t_max, h)
    }
}

/// Single server, Poisson arrivals of rate `lambda`, service law `service`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SsqsRaw")]
pub struct SsqsModel {
    pub lambda: f64,
    pub service: ScalarDistribution,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SsqsRaw {
    lambda: f64,
    service: ScalarDistribution,
}

impl TryFrom<SsqsRaw> for SsqsModel {
    type Error = Error;
    fn try_from(r: SsqsRaw) -> Result<Self> {
        Self::new(r.lambda, r.service)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsqsCharacteristics {
    pub q: f64,
    pub rho: f64,
    pub b: f64,
    pub p0: f64,
    pub p1: f64,
    /// `(1 - rho) rho`, the M/M/1 value, when service is exponential
    pub p1_mm1: Option<f64>,
    pub mean_alpha0: f64,
    pub mean_alpha1: f64,
    pub mean_alpha: f64,
    #[serde(rename = "mean_T")]
    pub mean_t: f64,
    pub mean_beta: f64,
    pub alpha0_law: MixedExponential,
    pub alpha1_law: MixedExponential,
}

impl SsqsModel {
    pub fn new(lambda: f64, service: ScalarDistribution) -> Result<Self> {
        check_rate("lambda", lambda, false)?;
        service.validate()?;
        Ok(Self { lambda, service })
    }

    pub fn rho(&self) -> f64 {
        self.lambda * self.service.mean()
    }

    pub fn check_stable(&self) -> Result<()> {
        let rho = self.rho();
        if rho < 1.0 {
            Ok(())
        } else {
            Err(Error::StabilityViolation { rho })
        }
    }

    /// `q = P(an arrival comes before the service in progress ends)`.
    pub fn q(&self) -> Result<f64> {
        let q = self.service.laplace_complement(self.lambda);
        if q > 0.0 && q < 1.0 {
            Ok(q)
        } else {
            Err(Error::DegenerateLaw { q })
        }
    }

    /// Step law of the time spent in state 1 before the queue first forms.
    pub fn alpha1_step_law(&self) -> Result<JointStepLaw> {
        JointStepLaw::min_threshold(ScalarDistribution::exponential(self.lambda)?, self.service.clone())
    }

    pub fn characteristics(&self) -> Result<SsqsCharacteristics> {
        self.check_stable()?;
        let (lambda, rho, b) = (self.lambda, self.rho(), self.service.mean());
        let q = self.q()?;
        let mean_alpha0 = (1.0 - q) / (lambda * q);
        let mean_alpha1 = 1.0 / lambda;
        let mean_t = (1.0 - q) / (lambda * q * (1.0 - rho));
        Ok(SsqsCharacteristics {
            q,
            rho,
            b,
            p0: 1.0 - rho,
            p1: q * (1.0 - rho) / (1.0 - q),
            p1_mm1: self.service.is_exponential().map(|_| (1.0 - rho) * rho),
            mean_alpha0,
            mean_alpha1,
            mean_alpha: 1.0 / (lambda * q),
            mean_t,
            mean_beta: (rho - q) / (lambda * q * (1.0 - rho)),
            alpha0_law: MixedExponential { atom_mass: q, tail_rate: lambda * q },
            alpha1_law: MixedExponential { atom_mass: 0.0, tail_rate: lambda },
        })
    }
}

/// Any of the three models, tagged by `"model"` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ApplicationModel {
    Geiger(GeigerModel),
    Redundant(RedundantModel),
    Ssqs(SsqsModel),
}

/// Mean and variance of `S` through the generic moment formulas, for
/// comparison with the model-specific formulas.
pub fn generic_sum_moments(law: &JointStepLaw) -> Result<(f64, f64)> {
    let m = law.step_moments()?;
    Ok((mean_random_sum(&m), variance_random_sum(&m)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn exp(r: f64) -> ScalarDistribution {
        ScalarDistribution::exponential(r).unwrap()
    }

    #[test]
    fn geiger_deterministic_lock() {
        let ln2 = 2f64.ln();
        let g = GeigerModel::new(1.0, ScalarDistribution::deterministic(ln2).unwrap()).unwrap();
        let c = g.characteristics().unwrap();
        assert!((c.q - 0.5).abs() < 1e-15);
        assert!((c.a0 - (1.0 + ln2) / 2.0).abs() < 1e-14);
        assert!((c.mean_t - 2.0).abs() < 1e-14);
        assert!((c.var_t - 4.0 * (1.0 + ln2)).abs() < 1e-12);
        let (mean, var) = generic_sum_moments(&g.step_law().unwrap()).unwrap();
        assert!((mean - c.mean_t).abs() < 1e-12 && (var - c.var_t).abs() < 1e-12);
    }

    #[test]
    fn geiger_instant_unlock_is_degenerate() {
        let r = GeigerModel::new(1.0, ScalarDistribution::deterministic(0.0).unwrap());
        assert!(matches!(r, Err(Error::DegenerateLaw { .. })));
    }

    #[test]
    fn geiger_curve_mean() {
        let g = GeigerModel::new(1.0, exp(2.0)).unwrap();
        let c = g.characteristics().unwrap();
        let curve = g.survival(40.0 * c.mean_t, 0.01).unwrap();
        assert!((curve.integral_until(1e-8) - c.mean_t).abs() < 0.01 * c.mean_t);
    }

    #[test]
    fn redundant_example() {
        let m = RedundantModel::new(1.0, 0.5, exp(2.0)).unwrap();
        let c = m.characteristics().unwrap();
        assert!((c.q - 1.0 / 3.0).abs() < 1e-15);
        assert!((c.mean_w1 - 3.0).abs() < 1e-14);
        assert!((c.mean_wk - 7.0 / 3.0).abs() < 1e-14);
        assert!((c.var_wk - (c.var_w1 - 1.0 / 2.25)).abs() < 1e-14);
        assert!((c.alpha0_law.tail_rate - 0.5).abs() < 1e-15);
        assert_eq!(c.alpha1_law.tail_rate, 1.0);
    }

    #[test]
    fn ssqs_example() {
        let m = SsqsModel::new(1.0, exp(2.0)).unwrap();
        let c = m.characteristics().unwrap();
        assert!((c.q - 1.0 / 3.0).abs() < 1e-15);
        assert!((c.rho - 0.5).abs() < 1e-15);
        assert!((c.p0 - 0.5).abs() < 1e-15);
        assert!((c.p1 - 0.25).abs() < 1e-15);
        assert!((c.p1 - c.p1_mm1.unwrap()).abs() < 1e-15);
        assert!((c.mean_alpha - 3.0).abs() < 1e-14);
        assert!((c.mean_t - 4.0).abs() < 1e-14);
        assert!((c.mean_beta - 1.0).abs() < 1e-14);
        assert!((c.mean_alpha + c.mean_beta - c.mean_t).abs() < 1e-14);
        assert!((c.mean_alpha0 + c.mean_alpha1 - c.mean_alpha).abs() < 1e-14);
        assert!((c.p0 - c.mean_alpha0 / c.mean_t).abs() < 1e-14);
        assert!((c.alpha0_law.mean() - c.mean_alpha0).abs() < 1e-14);
        assert!((c.alpha0_law.cdf(0.0) - c.q).abs() < 1e-15);
    }

    #[test]
    fn ssqs_unstable() {
        let m = SsqsModel::new(2.0, exp(1.0)).unwrap();
        assert!(matches!(m.characteristics(), Err(Error::StabilityViolation { .. })));
    }

    #[test]
    fn json_models() {
        let m: ApplicationModel =
            serde_json::from_str(r#"{"model":"ssqs","lambda":1.0,"service":{"kind":"exponential","rate":2.0}}"#)
                .unwrap();
        assert_eq!(m, ApplicationModel::Ssqs(SsqsModel::new(1.0, exp(2.0)).unwrap()));
        let bad = r#"{"model":"geiger","lambda":-1.0,"lock":{"kind":"exponential","rate":2.0}}"#;
        assert!(serde_json::from_str::<ApplicationModel>(bad).is_err());
        let extra = r#"{"model":"geiger","lambda":1.0,"lock":{"kind":"exponential","rate":2.0},"x":1}"#;
        assert!(serde_json::from_str::<ApplicationModel>(extra).is_err());
        let c = serde_json::to_value(SsqsModel::new(1.0, exp(2.0)).unwrap().characteristics().unwrap()).unwrap();
        assert!(c.get("mean_T").is_some() && c.get("p1").is_some());
    }

    fn repair_law(kind: u8, x: f64) -> ScalarDistribution {
        match kind {
            0 => exp(1.0 / x),
            1 => ScalarDistribution::deterministic(x).unwrap(),
            2 => ScalarDistribution::uniform(0.0, 2.0 * x).unwrap(),
            _ => ScalarDistribution::erlang(3, 3.0 / x).unwrap(),
        }
    }

    proptest! {
        #[test]
        fn wald_reproduces_first_busy_period_mean(lambda in 0.05f64..10.0, lambda_p in 0.0f64..10.0, q in 0.001f64..0.999) {
            let c = lambda + lambda_p;
            let a = q / lambda + 1.0 / c;
            let direct = 1.0 / lambda + 1.0 / (c * q);
            prop_assert!((a / q - direct).abs() <= 1e-12 * direct);
        }

        #[test]
        fn redundant_formulas_match_step_law(lambda in 0.1f64..5.0, lambda_p in 0.0f64..5.0, kind in 0u8..4, x in 0.05f64..3.0) {
            let m = RedundantModel::new(lambda, lambda_p, repair_law(kind, x)).unwrap();
            let c = m.characteristics().unwrap();
            let s = m.step_law().unwrap().step_moments().unwrap();
            for (u, v) in [(c.a, s.a), (c.sigma2, s.sigma2), (c.a0, s.a0), (c.q, s.q)] {
                prop_assert!((u - v).abs() <= 1e-9 * v.abs().max(1.0));
            }
            let (mean, var) = generic_sum_moments(&m.step_law().unwrap()).unwrap();
            prop_assert!((mean - c.mean_w1).abs() <= 1e-9 * mean);
            prop_assert!((var - c.var_w1).abs() <= 1e-8 * var);
            let ec = m.exit_rate();
            prop_assert!((c.var_wk - (c.var_w1 - 1.0 / (ec * ec))).abs() <= 1e-12 * c.var_w1);
            prop_assert!((c.mean_wk - (c.mean_w1 - 1.0 / ec)).abs() <= 1e-12 * c.mean_w1);
        }

        #[test]
        fn ssqs_state_probabilities(lambda in 0.05f64..5.0, kind in 0u8..4, rho in 0.01f64..0.99) {
            let m = SsqsModel::new(lambda, repair_law(kind, rho / lambda)).unwrap();
            let c = m.characteristics().unwrap();
            prop_assert!((c.p0 - (1.0 - c.rho)).abs() < 1e-12);
            prop_assert!(c.p0 + c.p1 <= 1.0 + 1e-12);
            prop_assert!(c.q <= c.rho + 1e-12);
            prop_assert!(c.mean_beta >= -1e-12);
            prop_assert!((c.mean_alpha + c.mean_beta - c.mean_t).abs() <= 1e-9 * c.mean_t);
        }
    }

    #[test]
    fn ssqs_equality_case() {
        // deterministic service: q = 1 - e^{-lambda d}, rho = lambda d, so q < rho always;
        // equality p0 + p1 = 1 only when q = rho, forcing E beta = 0
        let m = SsqsModel::new(1.0, ScalarDistribution::deterministic(0.5).unwrap()).unwrap();
        let c = m.characteristics().unwrap();
        assert!(c.p0 + c.p1 < 1.0 && c.mean_beta > 0.0);
        let q: f64 = 0.3;
        let (rho, p0) = (q, 1.0 - q);
        let p1 = q * (1.0 - rho) / (1.0 - q);
        assert!((p0 + p1 - 1.0).abs() < 1e-15);
    }
}
