//! Joint law of one step `(zeta, eps)`: the summand and the stop indicator.
//!
//! Every coupling is reduced to *part expectations*
//! `E[g(zeta) I(zeta < upper) I(eps = j)]` for a few families of `g`
//! (indicator, `exp(-z x)`, `x^k`). When the race clock `tau` is
//! exponential those have closed forms in terms of Laplace moments of
//! `eta`; otherwise they are evaluated by adaptive quadrature.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::ScalarDistribution;
use crate::error::{Error, Result};

/// Tolerance used to decide that a probability is 0 or 1.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Joint law of `(zeta, eps)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "coupling", rename_all = "snake_case", try_from = "RawLaw")]
pub enum JointStepLaw {
    /// `zeta` and `eps` independent, `P(eps = 1) = q`.
    Independent { zeta: ScalarDistribution, q: f64 },
    /// `zeta = min(tau, eta)`, `eps = I(tau < eta)`.
    MinThreshold {
        tau: ScalarDistribution,
        eta: ScalarDistribution,
    },
    /// `zeta = tau`, `eps = I(tau < eta)`.
    RaceStep {
        tau: ScalarDistribution,
        eta: ScalarDistribution,
    },
    /// `zeta = min(tau, eta) + shift`, `eps = I(tau < eta)`, shift independent.
    ShiftedMin {
        tau: ScalarDistribution,
        eta: ScalarDistribution,
        shift: ScalarDistribution,
    },
}

#[derive(Deserialize)]
#[serde(tag = "coupling", rename_all = "snake_case", deny_unknown_fields)]
enum RawLaw {
    Independent {
        zeta: ScalarDistribution,
        q: f64,
    },
    MinThreshold {
        tau: ScalarDistribution,
        eta: ScalarDistribution,
    },
    RaceStep {
        tau: ScalarDistribution,
        eta: ScalarDistribution,
    },
    ShiftedMin {
        tau: ScalarDistribution,
        eta: ScalarDistribution,
        shift: ScalarDistribution,
    },
}

impl TryFrom<RawLaw> for JointStepLaw {
    type Error = Error;

    fn try_from(raw: RawLaw) -> Result<Self> {
        let law = match raw {
            RawLaw::Independent { zeta, q } => Self::Independent { zeta, q },
            RawLaw::MinThreshold { tau, eta } => Self::MinThreshold { tau, eta },
            RawLaw::RaceStep { tau, eta } => Self::RaceStep { tau, eta },
            RawLaw::ShiftedMin { tau, eta, shift } => Self::ShiftedMin { tau, eta, shift },
        };
        law.validate()?;
        Ok(law)
    }
}

/// Sub-distribution functions at one point, left-limit convention:
/// `f0 = P(zeta < t, eps = 0)`, `f1 = P(zeta < t, eps = 1)`, `f = f0 + f1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubCdfs {
    pub f0: f64,
    pub f1: f64,
    pub f: f64,
}

/// A point mass of `zeta`, split by the value of `eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepAtom {
    pub at: f64,
    pub mass0: f64,
    pub mass1: f64,
}

/// First two moments of a step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMoments {
    /// `E zeta`
    pub a: f64,
    /// `D zeta`
    pub sigma2: f64,
    /// `E zeta I(eps = 0)`
    pub a0: f64,
    /// `P(eps = 1)`
    pub q: f64,
}

impl StepMoments {
    pub fn new(a: f64, sigma2: f64, a0: f64, q: f64) -> Result<Self> {
        let m = Self { a, sigma2, a0, q };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.a, self.sigma2, self.a0, self.q].iter().all(|v| v.is_finite()) {
            return Err(Error::NonfiniteMoment(format!("{self:?}")));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::DegenerateLaw { q: self.q });
        }
        let slack = 1e-12 * self.a.max(1.0);
        if self.a < 0.0 || self.sigma2 < 0.0 || self.a0 < -slack || self.a0 > self.a + slack {
            return Err(Error::InvalidArgument(format!(
                "step moments must satisfy a >= 0, sigma2 >= 0, 0 <= a0 <= a: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Which value of `eps` a part expectation is restricted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Part {
    Fail,
    Success,
}

/// Integrand families used by the part expectations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Query {
    /// `g = 1`, restricted to `zeta < upper`
    Mass(f64),
    /// `g = exp(-z x)`
    Laplace(f64),
    /// `g = x^k`, `k <= 2`
    Moment(u32),
}

/// Evaluation route; `Quadrature` ignores every closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Auto,
    Quadrature,
}

impl JointStepLaw {
    pub fn independent(zeta: ScalarDistribution, q: f64) -> Result<Self> {
        Self::checked(Self::Independent { zeta, q })
    }

    pub fn min_threshold(tau: ScalarDistribution, eta: ScalarDistribution) -> Result<Self> {
        Self::checked(Self::MinThreshold { tau, eta })
    }

    pub fn race_step(tau: ScalarDistribution, eta: ScalarDistribution) -> Result<Self> {
        Self::checked(Self::RaceStep { tau, eta })
    }

    pub fn shifted_min(
        tau: ScalarDistribution,
        eta: ScalarDistribution,
        shift: ScalarDistribution,
    ) -> Result<Self> {
        Self::checked(Self::ShiftedMin { tau, eta, shift })
    }

    fn checked(law: Self) -> Result<Self> {
        law.validate()?;
        Ok(law)
    }

    fn components(&self) -> Vec<&ScalarDistribution> {
        match self {
            Self::Independent { zeta, .. } => vec![zeta],
            Self::MinThreshold { tau, eta } | Self::RaceStep { tau, eta } => vec![tau, eta],
            Self::ShiftedMin { tau, eta, shift } => vec![tau, eta, shift],
        }
    }

    /// Checks component parameters, `0 < q < 1` and `P(zeta = 0) < 1`.
    pub fn validate(&self) -> Result<()> {
        for c in self.components() {
            c.validate()?;
        }
        if let Self::Independent { q, .. } = self {
            if !q.is_finite() {
                return Err(Error::DegenerateLaw { q: *q });
            }
        }
        self.q()?;
        let zero_mass: f64 = self
            .atoms()
            .iter()
            .filter(|a| a.at == 0.0)
            .map(|a| a.mass0 + a.mass1)
            .sum();
        if zero_mass >= 1.0 - DEGENERACY_TOL {
            return Err(Error::InvalidArgument(
                "step is identically zero: P(zeta = 0) must be < 1".into(),
            ));
        }
        Ok(())
    }

    /// Conditions that are allowed but worth reporting.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let eta = match self {
            Self::MinThreshold { eta, .. }
            | Self::RaceStep { eta, .. }
            | Self::ShiftedMin { eta, .. } => Some(eta),
            Self::Independent { .. } => None,
        };
        if let Some(eta) = eta {
            let w: f64 = eta.atoms().iter().filter(|(x, _)| *x == 0.0).map(|(_, w)| w).sum();
            if w > 0.0 {
                out.push(format!("eta has an atom of mass {w} at 0 (instantaneous threshold)"));
            }
        }
        out
    }

    /// `P(eps = 1)`.
    pub fn q(&self) -> Result<f64> {
        let q = match self {
            Self::Independent { q, .. } => *q,
            _ => self.part(Part::Success, Query::Moment(0), Route::Auto),
        };
        if !(q > DEGENERACY_TOL && q < 1.0 - DEGENERACY_TOL) {
            return Err(Error::DegenerateLaw { q });
        }
        Ok(q)
    }

    /// Left-limit sub-CDFs at `t`.
    pub fn sub_cdfs(&self, t: f64) -> SubCdfs {
        self.sub_cdfs_with(t, Route::Auto)
    }

    pub fn sub_cdfs_with(&self, t: f64, route: Route) -> SubCdfs {
        if t <= 0.0 {
            return SubCdfs { f0: 0.0, f1: 0.0, f: 0.0 };
        }
        let f0 = self.part(Part::Fail, Query::Mass(t), route).max(0.0);
        let f1 = self.part(Part::Success, Query::Mass(t), route).max(0.0);
        SubCdfs { f0, f1, f: f0 + f1 }
    }

    /// Right-continuous sub-CDFs `P(zeta <= t, eps = j)`.
    pub fn sub_cdfs_closed(&self, t: f64) -> SubCdfs {
        let mut s = self.sub_cdfs(t);
        for a in self.atoms().iter().filter(|a| a.at == t) {
            s.f0 += a.mass0;
            s.f1 += a.mass1;
        }
        s.f = s.f0 + s.f1;
        s
    }

    /// Point masses of `zeta`, merged by location and sorted.
    pub fn atoms(&self) -> Vec<StepAtom> {
        let mut out = match self {
            Self::Independent { zeta, q } => zeta
                .atoms()
                .into_iter()
                .map(|(x, w)| StepAtom { at: x, mass0: (1.0 - q) * w, mass1: q * w })
                .collect(),
            Self::MinThreshold { tau, eta } => min_atoms(tau, eta),
            Self::RaceStep { tau, eta } => tau
                .atoms()
                .into_iter()
                .map(|(x, w)| StepAtom { at: x, mass0: w * eta.cdf(x), mass1: w * eta.sf(x) })
                .collect(),
            Self::ShiftedMin { tau, eta, shift } => {
                let mut v = Vec::new();
                for m in min_atoms(tau, eta) {
                    for (y, w) in shift.atoms() {
                        v.push(StepAtom { at: m.at + y, mass0: m.mass0 * w, mass1: m.mass1 * w });
                    }
                }
                v
            }
        };
        out.retain(|a| a.mass0 + a.mass1 > 0.0);
        out.sort_by(|a, b| a.at.total_cmp(&b.at));
        let mut merged: Vec<StepAtom> = Vec::with_capacity(out.len());
        for a in out {
            match merged.last_mut() {
                Some(last) if last.at == a.at => {
                    last.mass0 += a.mass0;
                    last.mass1 += a.mass1;
                }
                _ => merged.push(a),
            }
        }
        merged
    }

    /// Points where the sub-CDFs may be non-smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = match self {
            Self::ShiftedMin { tau, eta, shift } => {
                let mut inner = tau.breakpoints();
                inner.extend(eta.breakpoints());
                inner.push(0.0);
                let mut out = Vec::new();
                for x in inner {
                    out.push(x);
                    out.extend(shift.breakpoints().iter().map(|y| x + y));
                }
                out
            }
            _ => self.components().iter().flat_map(|c| c.breakpoints()).collect(),
        };
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// A characteristic time scale (largest component scale).
    pub fn scale(&self) -> f64 {
        self.components().iter().map(|c| c.scale()).fold(0.0, f64::max)
    }

    /// Exact moments where closed forms exist, quadrature otherwise.
    pub fn step_moments(&self) -> Result<StepMoments> {
        self.step_moments_with(Route::Auto)
    }

    pub fn step_moments_with(&self, route: Route) -> Result<StepMoments> {
        let q = self.q()?;
        let m1_0 = self.part(Part::Fail, Query::Moment(1), route);
        let m1_1 = self.part(Part::Success, Query::Moment(1), route);
        let a = m1_0 + m1_1;
        let sigma2 = match self {
            Self::Independent { zeta, .. } => zeta.variance(),
            _ => {
                let m2 = self.part(Part::Fail, Query::Moment(2), route)
                    + self.part(Part::Success, Query::Moment(2), route);
                let v = m2 - a * a;
                if v < 0.0 && v > -1e-10 * m2.max(1.0) {
                    0.0
                } else {
                    v
                }
            }
        };
        let a0 = m1_0.clamp(0.0, a.max(0.0));
        if !(a.is_finite() && sigma2.is_finite() && a0.is_finite()) {
            return Err(Error::NonfiniteMoment(format!(
                "a = {a}, sigma2 = {sigma2}, a0 = {a0}"
            )));
        }
        StepMoments::new(a, sigma2, a0, q)
    }

    /// `(psi0(z), psi1(z))`: transforms of the two sub-distributions.
    pub fn laplace_parts(&self, z: f64) -> (f64, f64) {
        self.laplace_parts_with(z, Route::Auto)
    }

    pub fn laplace_parts_with(&self, z: f64, route: Route) -> (f64, f64) {
        (
            self.part(Part::Fail, Query::Laplace(z), route),
            self.part(Part::Success, Query::Laplace(z), route),
        )
    }

    /// `1 - psi(z)` computed without cancellation near `z = 0`.
    pub fn one_minus_psi(&self, z: f64) -> f64 {
        self.one_minus_psi_with(z, Route::Auto)
    }

    pub fn one_minus_psi_with(&self, z: f64, route: Route) -> f64 {
        match self {
            Self::Independent { zeta, .. } => zeta.laplace_complement(z),
            Self::RaceStep { tau, .. } => tau.laplace_complement(z),
            Self::MinThreshold { tau, eta } => min_one_minus_psi(tau, eta, z, route),
            Self::ShiftedMin { tau, eta, shift } => {
                let c_min = min_one_minus_psi(tau, eta, z, route);
                let psi_min = min_part(tau, eta, Part::Fail, Query::Laplace(z), route)
                    + min_part(tau, eta, Part::Success, Query::Laplace(z), route);
                c_min + psi_min * shift.laplace_complement(z)
            }
        }
    }

    pub(crate) fn part(&self, part: Part, query: Query, route: Route) -> f64 {
        match self {
            Self::Independent { zeta, q } => {
                let w = match part {
                    Part::Fail => 1.0 - q,
                    Part::Success => *q,
                };
                let v = match query {
                    Query::Mass(u) => zeta.cdf_left(u),
                    Query::Laplace(z) => zeta.laplace(z),
                    Query::Moment(0) => 1.0,
                    Query::Moment(1) => zeta.mean(),
                    Query::Moment(_) => zeta.second_moment(),
                };
                w * v
            }
            Self::MinThreshold { tau, eta } => min_part(tau, eta, part, query, route),
            Self::RaceStep { tau, eta } => race_part(tau, eta, part, query, route),
            Self::ShiftedMin { tau, eta, shift } => match query {
                Query::Mass(u) => {
                    let mut breaks: Vec<f64> = tau.breakpoints();
                    breaks.extend(eta.breakpoints());
                    breaks.push(0.0);
                    let shifted: Vec<f64> = breaks.iter().map(|b| u - b).collect();
                    shift.expect(
                        |y| min_part(tau, eta, part, Query::Mass(u - y), route),
                        u,
                        &shifted,
                    )
                }
                Query::Laplace(z) => min_part(tau, eta, part, query, route) * shift.laplace(z),
                Query::Moment(k) => {
                    let p = min_part(tau, eta, part, Query::Moment(0), route);
                    if k == 0 {
                        return p;
                    }
                    let m1 = min_part(tau, eta, part, Query::Moment(1), route);
                    if k == 1 {
                        return m1 + p * shift.mean();
                    }
                    let m2 = min_part(tau, eta, part, Query::Moment(2), route);
                    m2 + 2.0 * m1 * shift.mean() + p * shift.second_moment()
                }
            },
        }
    }

    /// Draws one `(zeta, eps)` pair.
    pub fn sample_step<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, bool) {
        match self {
            Self::Independent { zeta, q } => {
                let z = zeta.sample(rng);
                (z, rng.random::<f64>() < *q)
            }
            Self::MinThreshold { tau, eta } => {
                let (t, e) = (tau.sample(rng), eta.sample(rng));
                (t.min(e), t < e)
            }
            Self::RaceStep { tau, eta } => {
                let (t, e) = (tau.sample(rng), eta.sample(rng));
                (t, t < e)
            }
            Self::ShiftedMin { tau, eta, shift } => {
                let (t, e) = (tau.sample(rng), eta.sample(rng));
                (t.min(e) + shift.sample(rng), t < e)
            }
        }
    }
}

fn min_atoms(tau: &ScalarDistribution, eta: &ScalarDistribution) -> Vec<StepAtom> {
    let mut v: Vec<StepAtom> = eta
        .atoms()
        .into_iter()
        .map(|(x, w)| StepAtom { at: x, mass0: w * tau.sf_left(x), mass1: 0.0 })
        .collect();
    v.extend(
        tau.atoms()
            .into_iter()
            .map(|(x, w)| StepAtom { at: x, mass0: 0.0, mass1: w * eta.sf(x) }),
    );
    v
}

fn query_fn(query: Query) -> impl Fn(f64) -> f64 {
    move |x| match query {
        Query::Mass(_) => 1.0,
        Query::Laplace(z) => (-z * x).exp(),
        Query::Moment(k) => x.powi(k as i32),
    }
}

fn query_upper(query: Query) -> f64 {
    match query {
        Query::Mass(u) => u,
        _ => f64::INFINITY,
    }
}

/// Part expectations for `zeta = min(tau, eta)`, `eps = I(tau < eta)`.
fn min_part(
    tau: &ScalarDistribution,
    eta: &ScalarDistribution,
    part: Part,
    query: Query,
    route: Route,
) -> f64 {
    if let (Route::Auto, Some(lambda)) = (route, tau.is_exponential()) {
        return min_part_exp(lambda, eta, part, query);
    }
    let g = query_fn(query);
    let upper = query_upper(query);
    match part {
        // eps = 1: zeta = tau, weight P(eta > tau)
        Part::Success => tau.expect(|x| g(x) * eta.sf(x), upper, &eta.breakpoints()),
        // eps = 0: zeta = eta, weight P(tau >= eta)
        Part::Fail => eta.expect(|x| g(x) * tau.sf_left(x), upper, &tau.breakpoints()),
    }
}

/// Closed forms for `tau ~ Exp(lambda)` via `L_k(s, u) = E[eta^k e^{-s eta} I(eta < u)]`.
fn min_part_exp(lambda: f64, eta: &ScalarDistribution, part: Part, query: Query) -> f64 {
    let lm = |k: u32, s: f64| eta.laplace_moment(k, s, f64::INFINITY);
    match (part, query) {
        (Part::Fail, Query::Mass(u)) => eta.laplace_moment(0, lambda, u),
        (Part::Fail, Query::Laplace(z)) => lm(0, z + lambda),
        (Part::Fail, Query::Moment(k)) => lm(k, lambda),
        (Part::Success, Query::Mass(u)) => {
            if u.is_infinite() {
                eta.laplace_complement(lambda)
            } else {
                let e = (-lambda * u).exp();
                -(-lambda * u).exp_m1() - eta.laplace_moment(0, lambda, u) + e * eta.cdf_left(u)
            }
        }
        (Part::Success, Query::Laplace(z)) => {
            lambda / (z + lambda) * eta.laplace_complement(z + lambda)
        }
        (Part::Success, Query::Moment(0)) => eta.laplace_complement(lambda),
        (Part::Success, Query::Moment(1)) => eta.laplace_complement(lambda) / lambda - lm(1, lambda),
        (Part::Success, Query::Moment(_)) => {
            let min2 = 2.0 / (lambda * lambda)
                - 2.0 * (lm(1, lambda) / lambda + lm(0, lambda) / (lambda * lambda));
            min2 - lm(2, lambda)
        }
    }
}

fn min_one_minus_psi(tau: &ScalarDistribution, eta: &ScalarDistribution, z: f64, route: Route) -> f64 {
    if let (Route::Auto, Some(lambda)) = (route, tau.is_exponential()) {
        return eta.laplace_complement(z + lambda) * z / (z + lambda);
    }
    let g = |x: f64| -(-z * x).exp_m1();
    tau.expect(|x| g(x) * eta.sf(x), f64::INFINITY, &eta.breakpoints())
        + eta.expect(|x| g(x) * tau.sf_left(x), f64::INFINITY, &tau.breakpoints())
}

/// Part expectations for `zeta = tau`, `eps = I(tau < eta)`.
fn race_part(
    tau: &ScalarDistribution,
    eta: &ScalarDistribution,
    part: Part,
    query: Query,
    route: Route,
) -> f64 {
    if let (Route::Auto, Some(lambda)) = (route, tau.is_exponential()) {
        let fail = race_fail_exp(lambda, eta, query);
        return match part {
            Part::Fail => fail,
            Part::Success => match query {
                Query::Mass(u) => -(-lambda * u).exp_m1() - fail,
                Query::Laplace(z) => lambda / (z + lambda) * eta.laplace_complement(z + lambda),
                Query::Moment(0) => eta.laplace_complement(lambda),
                Query::Moment(k) => tau.laplace_moment(k, 0.0, f64::INFINITY) - fail,
            },
        };
    }
    let g = query_fn(query);
    let upper = query_upper(query);
    match part {
        Part::Success => tau.expect(|x| g(x) * eta.sf(x), upper, &eta.breakpoints()),
        // ties go to eps = 0
        Part::Fail => tau.expect(|x| g(x) * eta.cdf(x), upper, &eta.breakpoints()),
    }
}

/// `E[g(tau) G(tau) I(tau < u)]` for `tau ~ Exp(lambda)`, integrating by
/// parts against the lock law.
fn race_fail_exp(lambda: f64, eta: &ScalarDistribution, query: Query) -> f64 {
    let lm = |k: u32, s: f64| eta.laplace_moment(k, s, f64::INFINITY);
    match query {
        Query::Mass(u) => {
            if u.is_infinite() {
                lm(0, lambda)
            } else {
                (eta.laplace_moment(0, lambda, u) - (-lambda * u).exp() * eta.cdf_left(u)).max(0.0)
            }
        }
        Query::Laplace(z) => lambda / (z + lambda) * lm(0, z + lambda),
        Query::Moment(0) => lm(0, lambda),
        Query::Moment(1) => lm(1, lambda) + lm(0, lambda) / lambda,
        Query::Moment(_) => {
            lm(2, lambda) + 2.0 * lm(1, lambda) / lambda + 2.0 * lm(0, lambda) / (lambda * lambda)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn exp(r: f64) -> ScalarDistribution {
        ScalarDistribution::exponential(r).unwrap()
    }
    fn det(v: f64) -> ScalarDistribution {
        ScalarDistribution::deterministic(v).unwrap()
    }
    fn uni(a: f64, b: f64) -> ScalarDistribution {
        ScalarDistribution::uniform(a, b).unwrap()
    }
    fn erl(n: u32, r: f64) -> ScalarDistribution {
        ScalarDistribution::erlang(n, r).unwrap()
    }

    fn laws() -> Vec<JointStepLaw> {
        let tab = ScalarDistribution::tabulated(vec![0.2, 0.6, 1.5], vec![0.1, 0.7, 1.0]).unwrap();
        vec![
            JointStepLaw::independent(exp(1.0), 0.5).unwrap(),
            JointStepLaw::independent(tab.clone(), 0.3).unwrap(),
            JointStepLaw::min_threshold(exp(1.0), exp(2.0)).unwrap(),
            JointStepLaw::min_threshold(exp(1.0), det(1.0)).unwrap(),
            JointStepLaw::min_threshold(exp(1.0), uni(0.0, 2.0)).unwrap(),
            JointStepLaw::min_threshold(erl(2, 1.0), uni(0.0, 2.0)).unwrap(),
            JointStepLaw::race_step(exp(1.0), exp(1.0)).unwrap(),
            JointStepLaw::race_step(exp(1.0), det(2f64.ln())).unwrap(),
            JointStepLaw::race_step(exp(1.0), tab.clone()).unwrap(),
            JointStepLaw::race_step(uni(0.0, 2.0), erl(2, 1.5)).unwrap(),
            JointStepLaw::shifted_min(exp(1.0), exp(2.0), exp(1.5)).unwrap(),
            JointStepLaw::shifted_min(exp(2.0), uni(0.0, 1.0), det(0.3)).unwrap(),
        ]
    }

    #[test]
    fn q_examples() {
        let l = JointStepLaw::independent(exp(1.0), 0.5).unwrap();
        assert_eq!(l.q().unwrap(), 0.5);
        // q = lambda / (lambda + mu)
        let l = JointStepLaw::min_threshold(exp(1.0), exp(2.0)).unwrap();
        assert!((l.q().unwrap() - 1.0 / 3.0).abs() < 1e-14);
        // q = F(ln 2)
        let l = JointStepLaw::race_step(exp(1.0), det(2f64.ln())).unwrap();
        assert!((l.q().unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn degenerate_laws_are_rejected() {
        assert!(matches!(
            JointStepLaw::independent(exp(1.0), 1.0),
            Err(Error::DegenerateLaw { .. })
        ));
        assert!(matches!(
            JointStepLaw::race_step(exp(1.0), det(0.0)),
            Err(Error::DegenerateLaw { .. })
        ));
        assert!(JointStepLaw::independent(det(0.0), 0.5).is_err());
    }

    #[test]
    fn atom_at_zero_in_eta_is_flagged() {
        let tab = ScalarDistribution::tabulated(vec![0.0, 1.0], vec![0.2, 1.0]).unwrap();
        let law = JointStepLaw::race_step(exp(1.0), tab).unwrap();
        assert_eq!(law.warnings().len(), 1);
        assert!(JointStepLaw::race_step(exp(1.0), exp(1.0)).unwrap().warnings().is_empty());
    }

    #[test]
    fn sub_cdfs_decompose_and_start_at_zero() {
        for law in laws() {
            let z = law.sub_cdfs(0.0);
            assert_eq!((z.f0, z.f1, z.f), (0.0, 0.0, 0.0));
            let mut prev = z;
            for i in 1..60 {
                let t = 0.1 * i as f64;
                let s = law.sub_cdfs(t);
                assert!((s.f0 + s.f1 - s.f).abs() <= 1e-12);
                assert!(s.f0 >= prev.f0 - 1e-13 && s.f1 >= prev.f1 - 1e-13, "{law:?} at {t}");
                prev = s;
            }
        }
    }

    #[test]
    fn q_is_the_limit_of_f1() {
        for law in laws() {
            let q = law.q().unwrap();
            let s = law.sub_cdfs(50.0 * law.scale());
            assert!((s.f1 - q).abs() < 1e-6, "{law:?}");
            assert!((s.f0 - (1.0 - q)).abs() < 1e-6, "{law:?}");
        }
    }

    #[test]
    fn independent_fail_part_is_proportional() {
        let law = JointStepLaw::independent(erl(2, 1.0), 0.3).unwrap();
        for i in 0..30 {
            let t = 0.25 * i as f64;
            let s = law.sub_cdfs(t);
            assert!((s.f0 - 0.7 * s.f).abs() < 1e-15);
        }
    }

    #[test]
    fn race_step_fail_part_integrates_lock_cdf() {
        // F0(t) = int_0^t G(x) lambda e^{-lambda x} dx with G = Exp(2) CDF
        let law = JointStepLaw::race_step(exp(1.0), exp(2.0)).unwrap();
        for &t in &[0.3f64, 1.0, 4.0] {
            let expect = (1.0 - (-t).exp()) - (1.0 - (-3.0 * t).exp()) / 3.0;
            assert!((law.sub_cdfs(t).f0 - expect).abs() < 1e-14);
            assert!((law.sub_cdfs(t).f - (1.0 - (-t).exp())).abs() < 1e-14);
        }
    }

    #[test]
    fn min_threshold_fail_part_at_one() {
        let law = JointStepLaw::min_threshold(exp(1.0), exp(2.0)).unwrap();
        let expect = 2.0 / 3.0 * (1.0 - (-3.0f64).exp());
        assert!((law.sub_cdfs(1.0).f0 - expect).abs() < 1e-14);
    }

    #[test]
    fn closed_forms_agree_with_quadrature() {
        for law in laws() {
            for &t in &[0.05, 0.5, 0.99, 1.0, 1.01, 2.5, 7.0] {
                let a = law.sub_cdfs_with(t, Route::Auto);
                let b = law.sub_cdfs_with(t, Route::Quadrature);
                assert!((a.f0 - b.f0).abs() < 1e-10 && (a.f1 - b.f1).abs() < 1e-10, "{law:?} t={t}: {a:?} {b:?}");
            }
            for &z in &[0.0, 0.1, 1.0, 10.0] {
                let a = law.laplace_parts_with(z, Route::Auto);
                let b = law.laplace_parts_with(z, Route::Quadrature);
                assert!((a.0 - b.0).abs() < 1e-10 && (a.1 - b.1).abs() < 1e-10, "{law:?} z={z}");
                let c = law.one_minus_psi_with(z, Route::Auto);
                let d = law.one_minus_psi_with(z, Route::Quadrature);
                assert!((c - d).abs() < 1e-10, "{law:?} z={z}");
                assert!((c - (1.0 - a.0 - a.1)).abs() < 1e-10, "{law:?} z={z}");
            }
            let a = law.step_moments_with(Route::Auto).unwrap();
            let b = law.step_moments_with(Route::Quadrature).unwrap();
            for (x, y) in [(a.a, b.a), (a.sigma2, b.sigma2), (a.a0, b.a0), (a.q, b.q)] {
                assert!((x - y).abs() < 1e-9, "{law:?}: {a:?} {b:?}");
            }
        }
    }

    #[test]
    fn moment_examples() {
        let m = JointStepLaw::independent(exp(2.0), 0.25).unwrap().step_moments().unwrap();
        assert!((m.a - 0.5).abs() < 1e-15 && (m.sigma2 - 0.25).abs() < 1e-15);
        assert!((m.a0 - 0.75 * 0.5).abs() < 1e-15);

        // a = q / lambda + 1 / (lambda + lambda')
        let (lambda, lambda_p) = (1.0, 0.5);
        let law = JointStepLaw::shifted_min(exp(lambda), exp(2.0), exp(lambda + lambda_p)).unwrap();
        let m = law.step_moments().unwrap();
        assert!((m.a - (m.q / lambda + 1.0 / (lambda + lambda_p))).abs() < 1e-14);

        // a0 = lambda int t e^{-lambda t} G(t) dt = 1 - 1/4
        let m = JointStepLaw::race_step(exp(1.0), exp(1.0)).unwrap().step_moments().unwrap();
        assert!((m.a - 1.0).abs() < 1e-14 && (m.a0 - 0.75).abs() < 1e-14 && (m.q - 0.5).abs() < 1e-14);
    }

    #[test]
    fn closed_sub_cdfs_add_atoms() {
        let law = JointStepLaw::min_threshold(exp(1.0), det(1.0)).unwrap();
        let open = law.sub_cdfs(1.0);
        let closed = law.sub_cdfs_closed(1.0);
        assert!((closed.f0 - open.f0 - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(closed.f1, open.f1);
    }

    #[test]
    fn sampling_matches_moments_and_q() {
        let n = 1_000_000;
        for (i, law) in laws().into_iter().enumerate() {
            let m = law.step_moments().unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
            let draws: Vec<(f64, bool)> = (0..n).map(|_| law.sample_step(&mut rng)).collect();
            let nf = n as f64;
            let eps_mean = draws.iter().filter(|d| d.1).count() as f64 / nf;
            assert!((eps_mean - m.q).abs() <= 4.0 * (m.q * (1.0 - m.q) / nf).sqrt(), "{law:?}");
            let mean = draws.iter().map(|d| d.0).sum::<f64>() / nf;
            assert!((mean - m.a).abs() <= 4.0 * (m.sigma2 / nf).sqrt(), "{law:?}");
            let var = draws.iter().map(|d| (d.0 - mean).powi(2)).sum::<f64>() / (nf - 1.0);
            let m4 = draws.iter().map(|d| (d.0 - mean).powi(4)).sum::<f64>() / nf;
            assert!((var - m.sigma2).abs() <= 4.0 * ((m4 - var * var) / nf).sqrt() + 1e-12, "{law:?}");
            let a0_draws: Vec<f64> = draws.iter().map(|d| if d.1 { 0.0 } else { d.0 }).collect();
            let a0_mean = a0_draws.iter().sum::<f64>() / nf;
            let a0_var = a0_draws.iter().map(|x| (x - a0_mean).powi(2)).sum::<f64>() / nf;
            assert!((a0_mean - m.a0).abs() <= 4.0 * (a0_var / nf).sqrt(), "{law:?}");
        }
    }

    #[test]
    fn sampled_sub_cdfs_within_ks_bound() {
        let n = 200_000;
        let bound = 1.63 / (n as f64).sqrt();
        for (i, law) in laws().into_iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(900 + i as u64);
            // failed steps mapped to zeta, successful ones to +inf (and vice versa)
            let mut fail: Vec<f64> = Vec::with_capacity(n);
            let mut succ: Vec<f64> = Vec::with_capacity(n);
            for _ in 0..n {
                let (z, e) = law.sample_step(&mut rng);
                fail.push(if e { f64::INFINITY } else { z });
                succ.push(if e { z } else { f64::INFINITY });
            }
            for (xs, is_fail) in [(&mut fail, true), (&mut succ, false)] {
                xs.sort_by(f64::total_cmp);
                let mut d: f64 = 0.0;
                let mut k = 0;
                while k < n && xs[k].is_finite() {
                    let x = xs[k];
                    let last = k + xs[k..].partition_point(|&y| y == x);
                    let s = law.sub_cdfs(x);
                    let closed = law.sub_cdfs_closed(x);
                    let (lo, hi) = if is_fail { (s.f0, closed.f0) } else { (s.f1, closed.f1) };
                    d = d.max((k as f64 / n as f64 - lo).abs()).max((last as f64 / n as f64 - hi).abs());
                    k = last;
                }
                assert!(d <= bound, "{law:?}: D = {d}");
            }
        }
    }

    #[test]
    fn json_schema() {
        let l: JointStepLaw = serde_json::from_str(
            r#"{"coupling":"min_threshold","tau":{"kind":"exponential","rate":1.0},"eta":{"kind":"exponential","rate":2.0}}"#,
        )
        .unwrap();
        assert_eq!(l, JointStepLaw::min_threshold(exp(1.0), exp(2.0)).unwrap());
        let bad = r#"{"coupling":"race_step","tau":{"kind":"exponential","rate":1.0},"eta":{"kind":"deterministic","value":0.0}}"#;
        assert!(serde_json::from_str::<JointStepLaw>(bad).is_err());
    }
}
