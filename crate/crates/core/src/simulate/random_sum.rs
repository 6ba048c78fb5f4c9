use std::collections::BTreeMap;

use super::rng::replicate;
use super::{SimConfig, SimRun};
use crate::error::{Error, Result};
use crate::steplaw::JointStepLaw;

/// Replications of `S = zeta_1 + ... + zeta_nu`; the stopping index of each
/// one is kept as series `nu`.
pub fn simulate_random_sum(law: &JointStepLaw, cfg: &SimConfig) -> Result<SimRun> {
    cfg.check()?;
    let rows = replicate(cfg.n, cfg.seed, |i, rng| {
        let (mut s, mut nu) = (0.0, 0u64);
        loop {
            nu += 1;
            let (zeta, eps) = law.sample_step(rng);
            s += zeta;
            if eps {
                return Ok((s, nu));
            }
            if nu >= cfg.max_steps {
                return Err(Error::RunawayStop { replication: i, limit: cfg.max_steps });
            }
        }
    })?;
    let mut series = BTreeMap::new();
    series.insert("nu".to_string(), rows.iter().map(|r| r.1 as f64).collect());
    Ok(SimRun {
        seed: cfg.seed,
        variable: "S".into(),
        samples: rows.iter().map(|r| r.0).collect(),
        series,
        extra: BTreeMap::new(),
    })
}
