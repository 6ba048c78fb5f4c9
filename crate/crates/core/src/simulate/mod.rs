//! Seeded Monte Carlo: generic stopped sums and event-driven runs of the
//! three models. Replication `i` always draws from stream `i` of the seed,
//! so a run is reproducible bit for bit regardless of thread scheduling.

mod calendar;
mod compare;
mod geiger;
mod random_sum;
mod redundant;
pub mod rng;
mod ssqs;
pub mod stats;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use calendar::{EventCalendar, EventId};
pub use compare::{compare_reports, AnalyticTarget, ComparisonVerdict};
pub use geiger::simulate_geiger;
pub use random_sum::simulate_random_sum;
pub use redundant::simulate_redundant;
pub use ssqs::simulate_ssqs;
pub use stats::{KsResult, SampleStats};

use crate::error::{Error, Result};
use crate::volterra::SurvivalCurve;

/// Step cap per replication unless configured otherwise.
pub const DEFAULT_MAX_STEPS: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub seed: u64,
    /// steps (or events) one replication may take before giving up
    pub max_steps: u64,
}

impl SimConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        Self { n, seed, max_steps: DEFAULT_MAX_STEPS }
    }

    pub fn with_max_steps(self, max_steps: u64) -> Self {
        Self { max_steps, ..self }
    }

    fn check(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidArgument(format!("need n >= 2 replications, got {}", self.n)));
        }
        Ok(())
    }
}

/// Raw output of a simulation: one main sample per replication plus named
/// side series of the same length.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    pub seed: u64,
    /// name of the main variable (`S`, `T`, `W1`)
    pub variable: String,
    pub samples: Vec<f64>,
    pub series: BTreeMap<String, Vec<f64>>,
    pub extra: BTreeMap<String, f64>,
}

impl SimRun {
    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn stats(&self) -> Result<SampleStats> {
        SampleStats::from_samples(&self.samples)
    }

    pub fn series(&self, name: &str) -> Result<&[f64]> {
        self.series
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::InvalidArgument(format!("no series named {name}")))
    }

    pub fn series_stats(&self, name: &str) -> Result<SampleStats> {
        SampleStats::from_samples(self.series(name)?)
    }

    /// Summary with the empirical survival tabulated on `[0, t_max]`.
    pub fn report(&self, t_max: f64, h: f64) -> Result<SimReport> {
        let s = self.stats()?;
        let mut extra = self.extra.clone();
        for name in self.series.keys() {
            let st = self.series_stats(name)?;
            extra.insert(format!("mean_{name}"), st.mean);
            extra.insert(format!("var_{name}"), st.variance);
            extra.insert(format!("se_mean_{name}"), st.std_err_mean);
            extra.insert(format!("se_var_{name}"), st.std_err_variance);
        }
        Ok(SimReport {
            n: s.n,
            seed: self.seed,
            variable: self.variable.clone(),
            mean: s.mean,
            variance: s.variance,
            std_err_mean: s.std_err_mean,
            std_err_variance: s.std_err_variance,
            empirical_survival: stats::empirical_survival(&self.samples, t_max, h)?,
            extra_scalars: extra,
        })
    }
}

/// Serializable summary of a [`SimRun`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub n: usize,
    pub seed: u64,
    pub variable: String,
    pub mean: f64,
    pub variance: f64,
    pub std_err_mean: f64,
    pub std_err_variance: f64,
    pub empirical_survival: SurvivalCurve,
    pub extra_scalars: BTreeMap<String, f64>,
}

/// Splits per-replication records into named columns.
fn columns<const K: usize>(rows: &[[f64; K]], names: [&str; K]) -> BTreeMap<String, Vec<f64>> {
    names
        .iter()
        .enumerate()
        .map(|(j, name)| (name.to_string(), rows.iter().map(|r| r[j]).collect()))
        .collect()
}
