//! Executes a scenario and writes its artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use stopsum::analytic::{laplace_transforms, mean_random_sum, scaled_limit_diagnostics, variance_random_sum};
use stopsum::applications::generic_sum_moments;
use stopsum::simulate::{
    compare_reports, simulate_geiger, simulate_random_sum, simulate_redundant, simulate_ssqs, AnalyticTarget,
    ComparisonVerdict, SimConfig, SimRun,
};
use stopsum::volterra::{format_g, solve_survival, SurvivalCurve};
use stopsum::JointStepLaw;

use crate::error::CliError;
use crate::scenario::{Grid, Output, Scenario, Subject};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Serialize)]
struct Provenance {
    seed: u64,
    n: usize,
    grid: Grid,
    version: &'static str,
}

#[derive(Serialize)]
struct Summary<'a> {
    scenario: &'a Scenario,
    symbols: BTreeMap<String, f64>,
    provenance: Provenance,
}

#[derive(Serialize)]
struct Comparison<'a> {
    variable: &'a str,
    analytic_mean: f64,
    analytic_variance: f64,
    simulated_mean: f64,
    simulated_variance: f64,
    verdict: &'a ComparisonVerdict,
}

/// Result of a run: the files written and, if a comparison was made,
/// whether it passed.
#[derive(Debug)]
pub struct RunOutcome {
    pub written: Vec<PathBuf>,
    pub comparison_pass: Option<bool>,
}

/// The step law whose sum is the solved quantity, and that quantity's name.
fn step_law(subject: &Subject) -> Result<(JointStepLaw, &'static str), CliError> {
    Ok(match subject {
        Subject::Law(l) => (l.clone(), "S"),
        Subject::Geiger(m) => (m.step_law()?, "T"),
        Subject::Redundant(m) => (m.step_law()?, "W1"),
        Subject::Ssqs(m) => (m.alpha1_step_law()?, "alpha1"),
    })
}

/// Adds every number in `v` under dotted keys.
fn flatten(prefix: &str, v: &Value, out: &mut BTreeMap<String, f64>) {
    match v {
        Value::Number(x) => {
            out.insert(prefix.to_string(), x.as_f64().unwrap_or(f64::NAN));
        }
        Value::Object(map) => {
            for (k, x) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        _ => {}
    }
}

fn model_symbols(subject: &Subject, law: &JointStepLaw) -> Result<BTreeMap<String, f64>, CliError> {
    let value = match subject {
        Subject::Law(_) => {
            let m = law.step_moments()?;
            serde_json::json!({
                "q": m.q, "a": m.a, "sigma2": m.sigma2, "a0": m.a0,
                "mean_S": mean_random_sum(&m), "var_S": variance_random_sum(&m)?,
            })
        }
        Subject::Geiger(g) => serde_json::to_value(g.characteristics()?).expect("plain struct"),
        Subject::Redundant(r) => serde_json::to_value(r.characteristics()?).expect("plain struct"),
        Subject::Ssqs(s) => serde_json::to_value(s.characteristics()?).expect("plain struct"),
    };
    let mut out = BTreeMap::new();
    flatten("", &value, &mut out);
    Ok(out)
}

/// Analytic mean and variance of the solved quantity.
fn analytic_moments(subject: &Subject, law: &JointStepLaw) -> Result<(f64, f64), CliError> {
    Ok(match subject {
        Subject::Geiger(g) => {
            let c = g.characteristics()?;
            (c.mean_t, c.var_t)
        }
        Subject::Redundant(r) => {
            let c = r.characteristics()?;
            (c.mean_w1, c.var_w1)
        }
        Subject::Ssqs(s) => {
            s.characteristics()?;
            generic_sum_moments(law)?
        }
        Subject::Law(_) => generic_sum_moments(law)?,
    })
}

fn simulate(subject: &Subject, law: &JointStepLaw, cfg: &SimConfig) -> Result<SimRun, CliError> {
    Ok(match subject {
        Subject::Law(_) => simulate_random_sum(law, cfg)?,
        Subject::Geiger(g) => simulate_geiger(g, cfg)?,
        Subject::Redundant(r) => simulate_redundant(r, cfg)?,
        Subject::Ssqs(s) => simulate_ssqs(s, cfg)?,
    })
}

fn curve_text(curve: &SurvivalCurve, format: Format) -> String {
    match format {
        Format::Csv => curve.to_csv(),
        Format::Json => serde_json::to_string_pretty(curve).expect("plain struct") + "\n",
    }
}

fn write(dir: &Path, name: &str, text: &str, written: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    written.push(path);
    Ok(())
}

const LAPLACE_POINTS: usize = 100;
const LAPLACE_STEP: f64 = 0.1;

pub fn run(scenario: &Scenario, out_dir: &Path, format: Format) -> Result<RunOutcome, CliError> {
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let (law, variable) = step_law(&scenario.subject)?;
    for w in law.warnings() {
        eprintln!("warning: {w}");
    }
    let Grid { t_max, h } = scenario.grid;
    let mut symbols = BTreeMap::new();
    let mut written = Vec::new();
    let mut comparison_pass = None;

    if scenario.wants(Output::Moments) {
        symbols.extend(model_symbols(&scenario.subject, &law)?);
    }

    let needs_curve = scenario.wants(Output::Survival) || scenario.wants(Output::Compare);
    let curve = if needs_curve { Some(solve_survival(&law, t_max, h)?) } else { None };
    if let (true, Some(c)) = (scenario.wants(Output::Survival), &curve) {
        write(out_dir, &format!("survival.{}", format.ext()), &curve_text(c, format), &mut written)?;
    }

    if scenario.wants(Output::Laplace) {
        let lt = laplace_transforms(&law);
        let rows: Vec<(f64, f64, f64, f64)> = (0..=LAPLACE_POINTS)
            .map(|i| {
                let z = i as f64 * LAPLACE_STEP;
                (z, lt.psi0(z), lt.psi1(z), lt.phi(z))
            })
            .collect();
        let text = match format {
            Format::Csv => {
                let mut s = String::from("z,psi0,psi1,phi\n");
                for (z, p0, p1, phi) in &rows {
                    s.push_str(&format!("{},{},{},{}\n", format_g(*z), format_g(*p0), format_g(*p1), format_g(*phi)));
                }
                s
            }
            Format::Json => {
                let v: Vec<Value> =
                    rows.iter().map(|(z, p0, p1, phi)| serde_json::json!({"z": z, "psi0": p0, "psi1": p1, "phi": phi})).collect();
                serde_json::to_string_pretty(&v).expect("plain values") + "\n"
            }
        };
        write(out_dir, &format!("laplace.{}", format.ext()), &text, &mut written)?;
    }

    if scenario.wants(Output::LimitCheck) {
        let grid: Vec<f64> = (1..=1000).map(|i| 0.01 * i as f64).collect();
        let r = scaled_limit_diagnostics(&law, &grid)?;
        symbols.insert("limit.sup_error".into(), r.sup_error);
        symbols.insert("limit.at_z".into(), r.at_z);
    }

    if scenario.wants(Output::Simulate) {
        let cfg = SimConfig::new(scenario.sim.n, scenario.sim.seed);
        let mut run = simulate(&scenario.subject, &law, &cfg)?;
        if run.variable != variable {
            // keep the empirical curve on the same quantity as the solved one
            run.samples = run.series(variable)?.to_vec();
            run.variable = variable.to_string();
        }
        let report = run.report(t_max, h)?;
        symbols.insert("sim.n".into(), report.n as f64);
        symbols.insert(format!("sim.mean_{variable}"), report.mean);
        symbols.insert(format!("sim.var_{variable}"), report.variance);
        symbols.insert(format!("sim.se_mean_{variable}"), report.std_err_mean);
        symbols.insert(format!("sim.se_var_{variable}"), report.std_err_variance);
        for (k, v) in &report.extra_scalars {
            symbols.insert(format!("sim.{k}"), *v);
        }
        write(out_dir, &format!("empirical.{}", format.ext()), &curve_text(&report.empirical_survival, format), &mut written)?;

        if scenario.wants(Output::Compare) {
            let (mean, variance) = analytic_moments(&scenario.subject, &law)?;
            let target = AnalyticTarget { mean, variance, survival: curve.clone() };
            let verdict = compare_reports(&report, &target)?;
            let doc = Comparison {
                variable,
                analytic_mean: mean,
                analytic_variance: variance,
                simulated_mean: report.mean,
                simulated_variance: report.variance,
                verdict: &verdict,
            };
            write(out_dir, "comparison.json", &(serde_json::to_string_pretty(&doc).expect("plain struct") + "\n"), &mut written)?;
            comparison_pass = Some(verdict.pass);
        }
    }

    let summary = Summary {
        scenario,
        symbols,
        provenance: Provenance {
            seed: scenario.sim.seed,
            n: scenario.sim.n,
            grid: scenario.grid,
            version: env!("CARGO_PKG_VERSION"),
        },
    };
    write(out_dir, "summary.json", &(serde_json::to_string_pretty(&summary).expect("plain struct") + "\n"), &mut written)?;
    Ok(RunOutcome { written, comparison_pass })
}
