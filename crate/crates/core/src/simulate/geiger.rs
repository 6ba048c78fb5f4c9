use std::collections::BTreeMap;

use super::calendar::EventCalendar;
use super::rng::replicate;
use super::{SimConfig, SimRun};
use crate::applications::GeigerModel;
use crate::dist::ScalarDistribution;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
enum Event {
    Arrival,
    Unlock,
}

/// Event-driven counter runs. A particle registers at time 0; `T` is the
/// arrival time of the first particle that finds the counter locked.
pub fn simulate_geiger(model: &GeigerModel, cfg: &SimConfig) -> Result<SimRun> {
    cfg.check()?;
    let arrivals = ScalarDistribution::exponential(model.lambda)?;
    let rows = replicate(cfg.n, cfg.seed, |i, rng| {
        let mut cal = EventCalendar::new();
        // an unlock scheduled before the next arrival wins a tie, so a
        // particle arriving exactly at unlock is registered
        cal.schedule(model.lock.sample(rng), Event::Unlock);
        cal.schedule(arrivals.sample(rng), Event::Arrival);
        let (mut locked, mut registered) = (true, 1u64);
        while let Some((t, ev)) = cal.pop() {
            match ev {
                Event::Unlock => locked = false,
                Event::Arrival if locked => return Ok([t, registered as f64]),
                Event::Arrival => {
                    registered += 1;
                    if registered > cfg.max_steps {
                        return Err(Error::RunawayStop { replication: i, limit: cfg.max_steps });
                    }
                    locked = true;
                    cal.schedule(model.lock.sample(rng), Event::Unlock);
                    cal.schedule(arrivals.sample(rng), Event::Arrival);
                }
            }
        }
        unreachable!("arrival stream never ends")
    })?;
    Ok(SimRun {
        seed: cfg.seed,
        variable: "T".into(),
        samples: rows.iter().map(|r| r[0]).collect(),
        series: super::columns(&rows, ["T", "registered"]),
        extra: BTreeMap::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instant_unlock_never_loses() {
        let model = GeigerModel { lambda: 1.0, lock: ScalarDistribution::deterministic(0.0).unwrap() };
        let r = simulate_geiger(&model, &SimConfig::new(4, 1).with_max_steps(10_000));
        assert!(matches!(r, Err(Error::RunawayStop { limit: 10_000, .. })));
    }

    #[test]
    fn geometric_number_of_gaps() {
        let model = GeigerModel::new(1.0, ScalarDistribution::deterministic(2f64.ln()).unwrap()).unwrap();
        let run = simulate_geiger(&model, &SimConfig::new(100_000, 2)).unwrap();
        // registered particles = nu, mean 1 / q = 2
        let s = run.series_stats("registered").unwrap();
        assert!(s.z_mean(2.0).abs() < 4.0);
    }
}
