use std::collections::BTreeMap;

use super::calendar::EventCalendar;
use super::rng::replicate;
use super::{SimConfig, SimRun};
use crate::applications::SsqsModel;
use crate::dist::ScalarDistribution;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
enum Event {
    Arrival,
    Departure,
}

/// Event-driven FIFO single-server queue started empty. The cycle runs
/// from the first arrival to the first transition from 2 customers to 1;
/// it is cut into `alpha` (no queue yet) and `beta`, and `alpha` further
/// into the time spent with 0 and with 1 customer.
pub fn simulate_ssqs(model: &SsqsModel, cfg: &SimConfig) -> Result<SimRun> {
    cfg.check()?;
    model.check_stable()?;
    let arrivals = ScalarDistribution::exponential(model.lambda)?;
    let rows = replicate(cfg.n, cfg.seed, |i, rng| {
        let mut cal = EventCalendar::new();
        cal.schedule(arrivals.sample(rng), Event::Arrival);
        let mut xi = 0u64;
        let (mut start, mut last, mut alpha) = (None::<f64>, 0.0, None::<f64>);
        let mut sojourn = [0.0f64; 2];
        let mut steps = 0u64;
        while let Some((t, ev)) = cal.pop() {
            steps += 1;
            if steps > cfg.max_steps {
                return Err(Error::RunawayStop { replication: i, limit: cfg.max_steps });
            }
            if start.is_some() && xi < 2 {
                sojourn[xi as usize] += t - last;
            }
            last = t;
            match ev {
                Event::Arrival => {
                    xi += 1;
                    if start.is_none() {
                        start = Some(t);
                    }
                    if xi == 1 {
                        cal.schedule(model.service.sample(rng), Event::Departure);
                    }
                    if xi == 2 && alpha.is_none() {
                        alpha = Some(t - start.unwrap_or(t));
                    }
                    cal.schedule(arrivals.sample(rng), Event::Arrival);
                }
                Event::Departure => {
                    xi -= 1;
                    if xi >= 1 {
                        cal.schedule(model.service.sample(rng), Event::Departure);
                    }
                    if xi == 1 {
                        if let (Some(s0), Some(a)) = (start, alpha) {
                            let cycle = t - s0;
                            return Ok([cycle, a, cycle - a, sojourn[0], sojourn[1]]);
                        }
                    }
                }
            }
        }
        unreachable!("arrival stream never ends")
    })?;
    let mut run = SimRun {
        seed: cfg.seed,
        variable: "T".into(),
        samples: rows.iter().map(|r| r[0]).collect(),
        series: super::columns(&rows, ["T", "alpha", "beta", "alpha0", "alpha1"]),
        extra: BTreeMap::new(),
    };
    let total: f64 = run.samples.iter().sum();
    let a0: f64 = rows.iter().map(|r| r[3]).sum();
    let a1: f64 = rows.iter().map(|r| r[4]).sum();
    let zero = rows.iter().filter(|r| r[3] == 0.0).count() as f64 / rows.len() as f64;
    run.extra.insert("frac_time_state0".into(), a0 / total);
    run.extra.insert("frac_time_state1".into(), a1 / total);
    run.extra.insert("p_alpha0_zero".into(), zero);
    Ok(run)
}
