use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use super::checks::{Assertion, Comparison};
use super::{run, ExperimentConfig, ExperimentKind, Focus, RunReport, SCHEMA_VERSION};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Quick,
    Full,
}

impl Profile {
    /// Wall-time budget of the whole suite in seconds.
    pub fn budget_s(self) -> f64 {
        match self {
            Profile::Quick => 60.0,
            Profile::Full => 600.0,
        }
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Profile::Quick),
            "full" => Ok(Profile::Full),
            _ => Err(Error::Usage(format!("unknown profile '{s}' (expected quick or full)"))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionReport {
    pub schema_version: u32,
    pub criterion: u8,
    pub title: &'static str,
    pub profile: Profile,
    pub passed: bool,
    pub runs: Vec<RunReport>,
    /// Checks that belong to the suite rather than to a run (timing).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub assertions: Vec<Assertion>,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteEntry {
    pub criterion: u8,
    pub title: &'static str,
    pub kinds: Vec<ExperimentKind>,
    pub passed: bool,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub profile: Profile,
    pub seed: u64,
    pub passed: bool,
    pub entries: Vec<SuiteEntry>,
    pub wall_time_s: f64,
    #[serde(skip)]
    pub criteria: Vec<CriterionReport>,
}

struct Plan {
    criterion: u8,
    title: &'static str,
    configs: Vec<ExperimentConfig>,
    /// Wall-time budget of this criterion alone.
    budget_s: Option<f64>,
}

fn timing(name: &str, elapsed: f64, budget: f64) -> Assertion {
    Assertion {
        name: name.into(),
        measured: elapsed,
        tolerance: budget,
        comparison: Comparison::AtMost,
        passed: elapsed <= budget,
    }
}

fn plan(profile: Profile, seed: u64) -> Vec<Plan> {
    let quick = profile == Profile::Quick;
    let cfg = |kind: ExperimentKind, quick_trials: Option<usize>| {
        let c = ExperimentConfig::new(kind).with_seed(seed);
        match quick_trials {
            Some(t) if quick => c.with_trials(t),
            _ => c,
        }
    };
    let focused = |focus: Focus| {
        let mut c = cfg(ExperimentKind::BoundaryFeedin, None);
        c.focus = Some(focus);
        c
    };
    let mut bounds = cfg(ExperimentKind::BeamBounds, Some(10));
    if quick {
        bounds.dims.n = Some(100);
    }
    let plan = |criterion, title, configs, budget_s| Plan { criterion, title, configs, budget_s };
    vec![
        plan(1, "quadruple identities", vec![cfg(ExperimentKind::QuadrupleIdentities, Some(10))], Some(10.0)),
        plan(
            2,
            "perturbation compositions",
            vec![
                cfg(ExperimentKind::ComposeAcross, Some(10)),
                cfg(ExperimentKind::ComposeCross, Some(10)),
                cfg(ExperimentKind::ComposeDouble, Some(10)),
            ],
            Some(30.0),
        ),
        plan(3, "radius of surjectivity", vec![cfg(ExperimentKind::Radius, Some(25))], None),
        plan(4, "k0 robustness", vec![cfg(ExperimentKind::K0Sweep, Some(5))], Some(60.0)),
        plan(5, "theta0 robustness", vec![cfg(ExperimentKind::Theta0Sweep, Some(5))], None),
        plan(6, "boundary triple equivalence", vec![focused(Focus::Equivalence)], None),
        plan(7, "beam closed forms", vec![cfg(ExperimentKind::BeamTransfer, None)], None),
        plan(8, "beam inequalities", vec![bounds], None),
        plan(9, "feedthrough limits", vec![focused(Focus::Limits)], None),
    ]
}

fn file_name(criterion: u8) -> String {
    format!("criterion-{criterion:02}")
}

/// Runs every acceptance criterion. With `out`, writes one JSON per criterion
/// (`criterion-NN.json`), the run traces under `criterion-NN/<kind>/`, and
/// `suite.json`.
pub fn suite(profile: Profile, seed: Option<u64>, out: Option<&Path>) -> Result<SuiteReport> {
    let seed = seed.unwrap_or(1);
    let start = Instant::now();
    let mut criteria = Vec::new();
    for p in plan(profile, seed) {
        let t0 = Instant::now();
        let runs = p.configs.iter().map(run).collect::<Result<Vec<_>>>()?;
        let wall = t0.elapsed().as_secs_f64();
        let assertions: Vec<_> = p.budget_s.map(|b| timing("criterion_wall_time_s", wall, b)).into_iter().collect();
        criteria.push(CriterionReport {
            schema_version: SCHEMA_VERSION,
            criterion: p.criterion,
            title: p.title,
            profile,
            passed: runs.iter().all(|r| r.passed) && assertions.iter().all(|a| a.passed),
            runs,
            assertions,
            wall_time_s: wall,
        });
    }
    let elapsed = start.elapsed().as_secs_f64();
    let budget = profile.budget_s();
    let total = timing("suite_wall_time_s", elapsed, budget);
    criteria.push(CriterionReport {
        schema_version: SCHEMA_VERSION,
        criterion: 10,
        title: "suite runtime",
        profile,
        passed: total.passed,
        runs: Vec::new(),
        assertions: vec![total],
        wall_time_s: elapsed,
    });

    let entries = criteria
        .iter()
        .map(|c| SuiteEntry {
            criterion: c.criterion,
            title: c.title,
            kinds: c.runs.iter().map(|r| r.kind).collect(),
            passed: c.passed,
            wall_time_s: c.wall_time_s,
        })
        .collect();
    let report = SuiteReport {
        schema_version: SCHEMA_VERSION,
        profile,
        seed,
        passed: criteria.iter().all(|c| c.passed),
        entries,
        wall_time_s: elapsed,
        criteria,
    };
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        for c in &report.criteria {
            let name = file_name(c.criterion);
            for r in &c.runs {
                if !r.trace_data.is_empty() {
                    let sub = dir.join(&name).join(r.kind.name());
                    fs::create_dir_all(&sub)?;
                    for t in &r.trace_data {
                        fs::write(sub.join(&t.name), &t.csv)?;
                    }
                }
            }
            fs::write(dir.join(format!("{name}.json")), serde_json::to_string_pretty(c)?)?;
        }
        fs::write(dir.join("suite.json"), serde_json::to_string_pretty(&report)?)?;
    }
    Ok(report)
}
