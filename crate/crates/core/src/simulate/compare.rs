use serde::{Deserialize, Serialize};

use super::stats::{ks_on_grid, z_score, KsResult};
use super::SimReport;
use crate::error::Result;
use crate::volterra::SurvivalCurve;

/// Threshold on `|z|` for mean and variance.
pub const Z_LIMIT: f64 = 4.0;
/// Level of the KS test on survival curves.
pub const KS_ALPHA: f64 = 0.01;

/// What the analytic layer predicts for a simulated quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticTarget {
    pub mean: f64,
    pub variance: f64,
    pub survival: Option<SurvivalCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonVerdict {
    pub z_mean: f64,
    pub z_variance: f64,
    pub ks: Option<KsResult>,
    pub pass: bool,
    /// human-readable reasons for a failure
    pub failures: Vec<String>,
}

/// PASS iff both `|z| <= 4` and, when a curve is given, the sup distance
/// between curves is within the 1% KS critical value.
pub fn compare_reports(sim: &SimReport, analytic: &AnalyticTarget) -> Result<ComparisonVerdict> {
    let z_mean = z_score(sim.mean - analytic.mean, sim.std_err_mean);
    let z_variance = z_score(sim.variance - analytic.variance, sim.std_err_variance);
    let ks = match &analytic.survival {
        Some(curve) => Some(ks_on_grid(&sim.empirical_survival, curve, sim.n, KS_ALPHA)?),
        None => None,
    };
    let mut failures = Vec::new();
    if !(z_mean.abs() <= Z_LIMIT) {
        failures.push(format!("mean: z = {z_mean:.3} ({} vs {})", sim.mean, analytic.mean));
    }
    if !(z_variance.abs() <= Z_LIMIT) {
        failures.push(format!("variance: z = {z_variance:.3} ({} vs {})", sim.variance, analytic.variance));
    }
    if let Some(k) = &ks {
        if !k.pass {
            failures.push(format!("survival: D = {:.5} > {:.5}", k.statistic, k.critical));
        }
    }
    Ok(ComparisonVerdict { z_mean, z_variance, ks, pass: failures.is_empty(), failures })
}
