//! Sample summaries and goodness-of-fit tests.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::volterra::SurvivalCurve;

/// Mean, variance and their standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    /// unbiased sample variance
    pub variance: f64,
    pub std_err_mean: f64,
    /// from the fourth central moment
    pub std_err_variance: f64,
}

impl SampleStats {
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        let n = xs.len();
        if n < 2 {
            return Err(Error::InvalidArgument("need at least two samples".into()));
        }
        let nf = n as f64;
        let mean = xs.iter().sum::<f64>() / nf;
        let (mut m2, mut m4) = (0.0, 0.0);
        for x in xs {
            let d2 = (x - mean) * (x - mean);
            m2 += d2;
            m4 += d2 * d2;
        }
        let variance = m2 / (nf - 1.0);
        let (m2, m4) = (m2 / nf, m4 / nf);
        Ok(Self {
            n,
            mean,
            variance,
            std_err_mean: (variance / nf).sqrt(),
            std_err_variance: ((m4 - m2 * m2).max(0.0) / nf).sqrt(),
        })
    }

    /// `(mean - target) / std_err_mean`.
    pub fn z_mean(&self, target: f64) -> f64 {
        z_score(self.mean - target, self.std_err_mean)
    }

    pub fn z_variance(&self, target: f64) -> f64 {
        z_score(self.variance - target, self.std_err_variance)
    }
}

/// `diff / se`, with `0 / 0 = 0`.
pub fn z_score(diff: f64, se: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else if se > 0.0 {
        diff / se
    } else {
        f64::INFINITY.copysign(diff)
    }
}

/// Asymptotic Kolmogorov critical value `c(alpha) / sqrt(n)`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-0.5 * (0.5 * alpha).ln()).sqrt() / (n as f64).sqrt()
}

/// Kolmogorov tail probability with Stephens' small-sample correction.
pub fn kolmogorov_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let x = (sn + 0.12 + 0.11 / sn) * d;
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub n: usize,
    pub statistic: f64,
    pub critical: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub pass: bool,
}

impl KsResult {
    fn new(n: usize, statistic: f64, alpha: f64) -> Self {
        let critical = ks_critical(n, alpha);
        Self {
            n,
            statistic,
            critical,
            p_value: kolmogorov_p_value(statistic, n),
            alpha,
            pass: statistic <= critical,
        }
    }
}

/// One-sample KS test. `cdf_left(x) = P(X < x)` and `cdf(x) = P(X <= x)`
/// let the reference law carry atoms; tied samples are grouped.
pub fn ks_test<L, R>(samples: &[f64], cdf_left: L, cdf: R, alpha: f64) -> Result<KsResult>
where
    L: Fn(f64) -> f64,
    R: Fn(f64) -> f64,
{
    if samples.is_empty() {
        return Err(Error::InvalidArgument("KS test needs samples".into()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let nf = n as f64;
    let mut d: f64 = 0.0;
    let mut k = 0;
    while k < n {
        let x = xs[k];
        let end = k + xs[k..].partition_point(|&y| y == x);
        d = d
            .max((k as f64 / nf - cdf_left(x)).abs())
            .max((end as f64 / nf - cdf(x)).abs());
        k = end;
    }
    Ok(KsResult::new(n, d, alpha))
}

/// KS test against a continuous CDF.
pub fn ks_test_continuous<F: Fn(f64) -> f64>(samples: &[f64], cdf: F, alpha: f64) -> Result<KsResult> {
    ks_test(samples, &cdf, &cdf, alpha)
}

/// Sup distance between an empirical and a reference survival curve on a
/// common grid, judged with the KS critical value for `n` samples.
pub fn ks_on_grid(empirical: &SurvivalCurve, reference: &SurvivalCurve, n: usize, alpha: f64) -> Result<KsResult> {
    Ok(KsResult::new(n, empirical.sup_distance(reference)?, alpha))
}

/// `t -> #{x >= t} / n` on the grid `t_k = k h`, `k = 0..=ceil(t_max / h)`.
pub fn empirical_survival(samples: &[f64], t_max: f64, h: f64) -> Result<SurvivalCurve> {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    SurvivalCurve::from_fn(t_max, h, |t| {
        let below = xs.partition_point(|&x| x < t);
        (xs.len() - below) as f64 / n
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub alpha: f64,
    pub pass: bool,
}

/// Pearson test of stopping indices against `P(nu = k) = q (1 - q)^(k - 1)`.
/// Cells with expected count below 5 are pooled into the tail cell.
pub fn chi_square_geometric(nu: &[u64], q: f64, alpha: f64) -> Result<ChiSquareResult> {
    if nu.is_empty() || !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidArgument("need samples and 0 < q < 1".into()));
    }
    let n = nu.len() as f64;
    // values 1..=singles get a cell each; the last cell is {nu > singles}
    let mut singles = 0usize;
    while n * q * (1.0 - q).powi(singles as i32) >= 5.0 && n * (1.0 - q).powi(singles as i32 + 1) >= 5.0 {
        singles += 1;
    }
    if singles == 0 {
        return Err(Error::InvalidArgument("too few samples for a chi-square test".into()));
    }
    let mut observed = vec![0.0; singles + 1];
    for &k in nu {
        if k == 0 {
            return Err(Error::InvalidArgument("stopping index must be >= 1".into()));
        }
        observed[(k as usize - 1).min(singles)] += 1.0;
    }
    let mut statistic = 0.0;
    for (i, o) in observed.iter().enumerate() {
        let p = if i < singles { q * (1.0 - q).powi(i as i32) } else { (1.0 - q).powi(singles as i32) };
        let e = n * p;
        statistic += (o - e) * (o - e) / e;
    }
    let dof = singles;
    let p_value = 1.0 - ChiSquared::new(dof as f64).expect("positive dof").cdf(statistic);
    Ok(ChiSquareResult { statistic, dof, p_value, alpha, pass: p_value >= alpha })
}
