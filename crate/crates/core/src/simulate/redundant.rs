use std::collections::{BTreeMap, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::calendar::{EventCalendar, EventId};
use super::rng::replicate;
use super::{SimConfig, SimRun};
use crate::applications::RedundantModel;
use crate::dist::ScalarDistribution;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Unit {
    Working,
    Standby,
    Failed,
}

#[derive(Debug, Clone, Copy)]
enum Event {
    Failure(usize),
    RepairDone(usize),
}

struct System<'a> {
    model: &'a RedundantModel,
    cal: EventCalendar<Event>,
    units: [Unit; 2],
    /// pending standby failure, cancelled when the unit is switched in
    standby_clock: [Option<EventId>; 2],
    repair_queue: VecDeque<usize>,
    repairing: Option<usize>,
    steps: u64,
}

impl<'a> System<'a> {
    fn new(model: &'a RedundantModel) -> Self {
        Self {
            model,
            cal: EventCalendar::new(),
            units: [Unit::Failed; 2],
            standby_clock: [None; 2],
            repair_queue: VecDeque::new(),
            repairing: None,
            steps: 0,
        }
    }

    fn failed(&self) -> usize {
        self.units.iter().filter(|u| **u == Unit::Failed).count()
    }

    fn exp(rate: f64, rng: &mut ChaCha8Rng) -> f64 {
        -(1.0 - rng.random::<f64>()).ln() / rate
    }

    fn start_working(&mut self, u: usize, rng: &mut ChaCha8Rng) {
        self.units[u] = Unit::Working;
        if let Some(id) = self.standby_clock[u].take() {
            self.cal.cancel(id);
        }
        // exponential life: a fresh clock is as good as the residual one
        let d = Self::exp(self.model.lambda, rng);
        self.cal.schedule(d, Event::Failure(u));
    }

    fn start_standby(&mut self, u: usize, rng: &mut ChaCha8Rng) {
        self.units[u] = Unit::Standby;
        if self.model.lambda_prime > 0.0 {
            let d = Self::exp(self.model.lambda_prime, rng);
            self.standby_clock[u] = Some(self.cal.schedule(d, Event::Failure(u)));
        }
    }

    fn send_to_repair(&mut self, u: usize, rng: &mut ChaCha8Rng) {
        self.units[u] = Unit::Failed;
        self.standby_clock[u] = None;
        self.repair_queue.push_back(u);
        self.next_repair(rng);
    }

    fn next_repair(&mut self, rng: &mut ChaCha8Rng) {
        if self.repairing.is_none() {
            if let Some(u) = self.repair_queue.pop_front() {
                self.repairing = Some(u);
                let d = self.model.repair.sample(rng);
                self.cal.schedule(d, Event::RepairDone(u));
            }
        }
    }

    /// Processes events until the number of failed units changes; returns
    /// the time of that change.
    fn advance(&mut self, rng: &mut ChaCha8Rng, replication: u64, limit: u64) -> Result<f64> {
        let before = self.failed();
        loop {
            self.steps += 1;
            if self.steps > limit {
                return Err(Error::RunawayStop { replication, limit });
            }
            let (t, ev) = self.cal.pop().expect("a failure or repair is always pending");
            match ev {
                Event::Failure(u) => {
                    let was_working = self.units[u] == Unit::Working;
                    self.send_to_repair(u, rng);
                    let other = 1 - u;
                    if was_working && self.units[other] == Unit::Standby {
                        self.start_working(other, rng);
                    }
                }
                Event::RepairDone(u) => {
                    self.repairing = None;
                    let other = 1 - u;
                    if self.units[other] == Unit::Working {
                        self.start_standby(u, rng);
                    } else {
                        self.start_working(u, rng);
                    }
                    self.next_repair(rng);
                }
            }
            if self.failed() != before {
                return Ok(t);
            }
        }
    }
}

/// Event-driven runs of the duplicated system from both units up. Each
/// replication records the first busy period `W1`, the sojourns `alpha0`,
/// `alpha1` in states 0 and 1 during it, and the following busy period as
/// a sample of `Wk`.
pub fn simulate_redundant(model: &RedundantModel, cfg: &SimConfig) -> Result<SimRun> {
    cfg.check()?;
    ScalarDistribution::exponential(model.lambda)?;
    let rows = replicate(cfg.n, cfg.seed, |i, rng| {
        let mut sys = System::new(model);
        sys.start_working(0, rng);
        sys.start_standby(1, rng);
        let (mut t, mut alpha) = (0.0, [0.0f64; 2]);
        // first busy period
        loop {
            let state = sys.failed();
            let next = sys.advance(rng, i, cfg.max_steps)?;
            alpha[state] += next - t;
            t = next;
            if sys.failed() == 2 {
                break;
            }
        }
        let w1 = t;
        // idle period, then one more busy period
        let start = sys.advance(rng, i, cfg.max_steps)?;
        let mut end = start;
        while sys.failed() < 2 {
            end = sys.advance(rng, i, cfg.max_steps)?;
        }
        Ok([w1, end - start, alpha[0], alpha[1]])
    })?;
    Ok(SimRun {
        seed: cfg.seed,
        variable: "W1".into(),
        samples: rows.iter().map(|r| r[0]).collect(),
        series: super::columns(&rows, ["W1", "Wk", "alpha0", "alpha1"]),
        extra: BTreeMap::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sojourns_add_up() {
        let m = RedundantModel::new(1.0, 0.5, ScalarDistribution::exponential(2.0).unwrap()).unwrap();
        let run = simulate_redundant(&m, &SimConfig::new(2000, 11)).unwrap();
        let (w1, a0, a1) = (run.series("W1").unwrap(), run.series("alpha0").unwrap(), run.series("alpha1").unwrap());
        for k in 0..w1.len() {
            assert!((w1[k] - a0[k] - a1[k]).abs() <= 1e-9 * w1[k].max(1.0));
        }
        assert!(run.series("Wk").unwrap().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn cold_standby_and_deterministic_repair() {
        let m = RedundantModel::new(1.0, 0.0, ScalarDistribution::deterministic(0.5).unwrap()).unwrap();
        let c = m.characteristics().unwrap();
        let run = simulate_redundant(&m, &SimConfig::new(100_000, 12)).unwrap();
        assert!(run.stats().unwrap().z_mean(c.mean_w1).abs() < 4.0);
        assert!(run.series_stats("Wk").unwrap().z_mean(c.mean_wk).abs() < 4.0);
    }
}
