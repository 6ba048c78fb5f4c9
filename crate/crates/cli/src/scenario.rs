//! Scenario files: JSON describing what to compute and where.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use stopsum::applications::{GeigerModel, RedundantModel, SsqsModel};
use stopsum::JointStepLaw;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    RandomSum,
    Geiger,
    Redundant,
    Ssqs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    Moments,
    Survival,
    Laplace,
    LimitCheck,
    Simulate,
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub t_max: f64,
    pub h: f64,
}

impl Default for Grid {
    fn default() -> Self {
        Self { t_max: 10.0, h: 0.01 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sim {
    pub n: usize,
    pub seed: u64,
}

impl Default for Sim {
    fn default() -> Self {
        Self { n: 100_000, seed: 1 }
    }
}

/// What the scenario is about, after validation.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Subject {
    Law(JointStepLaw),
    Geiger(GeigerModel),
    Redundant(RedundantModel),
    Ssqs(SsqsModel),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    #[serde(default)]
    name: Option<String>,
    target: Target,
    #[serde(default)]
    law: Option<Value>,
    #[serde(default)]
    model: Option<Value>,
    #[serde(default)]
    grid: Grid,
    #[serde(default)]
    sim: Sim,
    #[serde(default = "all_outputs")]
    outputs: Vec<Output>,
}

fn all_outputs() -> Vec<Output> {
    vec![Output::Moments, Output::Survival, Output::Simulate, Output::Compare]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub target: Target,
    #[serde(rename = "parameters")]
    pub subject: Subject,
    pub grid: Grid,
    pub sim: Sim,
    pub outputs: Vec<Output>,
}

/// Command-line values that replace scenario fields when present.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub t_max: Option<f64>,
    pub h: Option<f64>,
}

fn parse_at<T: serde::de::DeserializeOwned>(value: Value, prefix: &str) -> Result<T, CliError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = if inner == "." { prefix.to_string() } else { format!("{prefix}.{inner}") };
        CliError::Parse { path, message: e.into_inner().to_string() }
    })
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: RawScenario = serde_path_to_error::deserialize(de).map_err(|e| CliError::Parse {
            path: e.path().to_string(),
            message: e.into_inner().to_string(),
        })?;
        let missing = |field: &str| CliError::Validation(format!("target {:?} needs a `{field}` object", raw.target));
        let subject = match raw.target {
            Target::RandomSum => Subject::Law(parse_at(raw.law.clone().ok_or_else(|| missing("law"))?, "law")?),
            t => {
                let v = raw.model.clone().ok_or_else(|| missing("model"))?;
                match t {
                    Target::Geiger => Subject::Geiger(parse_at(v, "model")?),
                    Target::Redundant => Subject::Redundant(parse_at(v, "model")?),
                    _ => Subject::Ssqs(parse_at(v, "model")?),
                }
            }
        };
        if raw.target == Target::RandomSum && raw.model.is_some() || raw.target != Target::RandomSum && raw.law.is_some() {
            return Err(CliError::Validation("give `law` for random_sum and `model` otherwise, not both".into()));
        }
        let mut outputs = raw.outputs;
        outputs.sort();
        outputs.dedup();
        Ok(Self { name: raw.name, target: raw.target, subject, grid: raw.grid, sim: raw.sim, outputs })
    }

    /// Flags win over file values.
    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(s) = o.seed {
            self.sim.seed = s;
        }
        if let Some(n) = o.n {
            self.sim.n = n;
        }
        if let Some(t) = o.t_max {
            self.grid.t_max = t;
        }
        if let Some(h) = o.h {
            self.grid.h = h;
        }
        let Grid { t_max, h } = self.grid;
        if !(h > 0.0 && h.is_finite() && t_max.is_finite() && t_max >= 10.0 * h) {
            return Err(CliError::Validation(format!("grid needs h > 0 and t_max >= 10 h, got t_max {t_max}, h {h}")));
        }
        if self.sim.n < 2 && self.wants(Output::Simulate) {
            return Err(CliError::Validation(format!("sim.n must be at least 2, got {}", self.sim.n)));
        }
        Ok(())
    }

    pub fn wants(&self, o: Output) -> bool {
        self.outputs.contains(&o) || (o == Output::Simulate && self.outputs.contains(&Output::Compare))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GEIGER: &str = r#"{
        "target": "geiger",
        "model": {"lambda": 1.0, "lock": {"kind": "exponential", "rate": 2.0}},
        "sim": {"n": 1000, "seed": 5}
    }"#;

    #[test]
    fn parses_with_defaults() {
        let s = Scenario::from_json(GEIGER).unwrap();
        assert_eq!(s.target, Target::Geiger);
        assert_eq!(s.grid, Grid::default());
        assert_eq!(s.sim, Sim { n: 1000, seed: 5 });
        assert!(s.wants(Output::Compare) && s.wants(Output::Simulate));
    }

    #[test]
    fn error_paths_are_precise() {
        let bad = GEIGER.replace("\"rate\": 2.0", "\"rate\": \"fast\"");
        match Scenario::from_json(&bad) {
            // tagged enums buffer their content, so the path stops at the tagged object
            Err(CliError::Parse { path, message }) => {
                assert_eq!(path, "model.lock");
                assert!(message.contains("fast"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let bad = GEIGER.replace("\"seed\"", "\"sede\"");
        match Scenario::from_json(&bad) {
            Err(CliError::Parse { path, .. }) => assert_eq!(path, "sim.sede"),
            other => panic!("{other:?}"),
        }
        let bad = GEIGER.replace("\"lambda\": 1.0", "\"lambda\": -1.0");
        assert!(matches!(Scenario::from_json(&bad), Err(CliError::Parse { .. })));
    }

    #[test]
    fn target_and_parameters_must_match() {
        let s = r#"{"target": "random_sum"}"#;
        assert!(matches!(Scenario::from_json(s), Err(CliError::Validation(_))));
        let s = GEIGER.replace("\"model\"", "\"law\"");
        assert!(matches!(Scenario::from_json(&s), Err(CliError::Validation(_))));
    }

    #[test]
    fn overrides_take_precedence() {
        let mut s = Scenario::from_json(GEIGER).unwrap();
        s.apply(&Overrides { seed: Some(42), n: None, t_max: Some(20.0), h: None }).unwrap();
        assert_eq!(s.sim, Sim { n: 1000, seed: 42 });
        assert_eq!(s.grid, Grid { t_max: 20.0, h: 0.01 });
        let err = s.apply(&Overrides { h: Some(5.0), ..Default::default() });
        assert!(matches!(err, Err(CliError::Validation(_))));
    }
}
