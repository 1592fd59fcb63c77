//! Reproducible experiment runs: a JSON config in, a JSON report (plus CSV
//! traces) out.
//!
//! Every run is deterministic in its seed; only `wall_time_s` varies between
//! identical runs.

mod algebra;
mod beams;
mod boundaries;
mod checks;
mod suite;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::random;

pub use checks::{Assertion, Comparison};
pub use suite::{suite, CriterionReport, Profile, SuiteEntry, SuiteReport};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    QuadrupleIdentities,
    ComposeAcross,
    ComposeCross,
    ComposeDouble,
    K0Sweep,
    Theta0Sweep,
    Radius,
    BoundaryFeedin,
    BeamTransfer,
    BeamBounds,
    BeamObservability,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 11] = [
        ExperimentKind::QuadrupleIdentities,
        ExperimentKind::ComposeAcross,
        ExperimentKind::ComposeCross,
        ExperimentKind::ComposeDouble,
        ExperimentKind::K0Sweep,
        ExperimentKind::Theta0Sweep,
        ExperimentKind::Radius,
        ExperimentKind::BoundaryFeedin,
        ExperimentKind::BeamTransfer,
        ExperimentKind::BeamBounds,
        ExperimentKind::BeamObservability,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::QuadrupleIdentities => "quadruple-identities",
            ExperimentKind::ComposeAcross => "compose-across",
            ExperimentKind::ComposeCross => "compose-cross",
            ExperimentKind::ComposeDouble => "compose-double",
            ExperimentKind::K0Sweep => "k0-sweep",
            ExperimentKind::Theta0Sweep => "theta0-sweep",
            ExperimentKind::Radius => "radius",
            ExperimentKind::BoundaryFeedin => "boundary-feedin",
            ExperimentKind::BeamTransfer => "beam-transfer",
            ExperimentKind::BeamBounds => "beam-bounds",
            ExperimentKind::BeamObservability => "beam-observability",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown experiment kind '{s}'")))
    }
}

/// Which half of the boundary experiment to run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Focus {
    /// Triple realization against the extended simulation.
    Equivalence,
    /// Extrapolated feedthrough limits.
    Limits,
    #[default]
    All,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dims {
    /// Beam interior nodes, or the stand-in grid size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Largest random state dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_n: Option<usize>,
    /// Largest random input/output dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_io: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

fn default_seed() -> u64 {
    1
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub dims: Dims,
    #[serde(default, skip_serializing_if = "is_default")]
    pub grid: GridParams,
    /// Overrides of named assertion tolerances.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focus: Option<Focus>,
    /// Feedback gains for the beam observability sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gains: Option<Vec<f64>>,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            seed: default_seed(),
            trials: None,
            dims: Dims::default(),
            grid: GridParams::default(),
            tolerances: BTreeMap::new(),
            focus: None,
            gains: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = Some(trials);
        self
    }

    /// Parses a JSON config; any syntax or schema problem is a usage error.
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Usage(format!("malformed config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        let table = checks::defaults(self.kind);
        for (name, &v) in &self.tolerances {
            if !table.iter().any(|(n, _, _)| n == name) {
                let known: Vec<&str> = table.iter().map(|t| t.0).collect();
                return Err(Error::Usage(format!(
                    "tolerance '{name}' is not used by {}; known: {}",
                    self.kind.name(),
                    known.join(", ")
                )));
            }
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Usage(format!("tolerance '{name}' must be positive, got {v}")));
            }
        }
        if self.trials == Some(0) {
            return Err(Error::Usage("trials must be positive".into()));
        }
        let g = &self.grid;
        for (name, v) in [("grid.t_end", g.t_end), ("grid.dt", g.dt)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::Usage(format!("{name} must be positive, got {v}")));
                }
            }
        }
        if g.steps == Some(0) {
            return Err(Error::Usage("grid.steps must be positive".into()));
        }
        for (name, v) in [("dims.n", self.dims.n), ("dims.max_n", self.dims.max_n), ("dims.max_io", self.dims.max_io)] {
            if v == Some(0) {
                return Err(Error::Usage(format!("{name} must be positive")));
            }
        }
        if self.focus.is_some() && self.kind != ExperimentKind::BoundaryFeedin {
            return Err(Error::Usage("focus only applies to boundary-feedin".into()));
        }
        if let Some(gains) = &self.gains {
            if self.kind != ExperimentKind::BeamObservability {
                return Err(Error::Usage("gains only apply to beam-observability".into()));
            }
            if gains.is_empty() || gains.iter().any(|k| !(k.is_finite() && *k >= 0.0)) {
                return Err(Error::Usage("gains must be a nonempty list of nonnegative numbers".into()));
            }
        }
        Ok(())
    }

    pub(crate) fn trials_or(&self, default: usize) -> usize {
        self.trials.unwrap_or(default)
    }

    pub(crate) fn rng(&self) -> random::Rng {
        random::rng(self.seed)
    }
}

/// CSV trace produced by a run.
#[derive(Clone, Debug)]
pub struct Trace {
    pub name: String,
    pub csv: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    pub generator: &'static str,
    pub config: ExperimentConfig,
    pub passed: bool,
    pub assertions: Vec<Assertion>,
    pub payload: serde_json::Value,
    /// File names of the CSV traces written next to the report.
    pub traces: Vec<String>,
    pub wall_time_s: f64,
    #[serde(skip)]
    pub trace_data: Vec<Trace>,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// JSON with the wall time zeroed, for reproducibility comparisons.
    pub fn timeless_json(&self) -> Result<String> {
        let mut copy = serde_json::to_value(self)?;
        copy["wall_time_s"] = serde_json::json!(0.0);
        Ok(serde_json::to_string_pretty(&copy)?)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Assertion> {
        self.assertions.iter().filter(|a| !a.passed)
    }

    /// Writes `report.json` and the traces into `dir` (created if missing).
    pub fn write_to(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        for t in &self.trace_data {
            fs::write(dir.join(&t.name), &t.csv)?;
        }
        let path = dir.join("report.json");
        fs::write(&path, self.to_json()?)?;
        Ok(path)
    }
}

pub(crate) struct Outcome {
    pub assertions: Vec<Assertion>,
    pub payload: serde_json::Value,
    pub traces: Vec<Trace>,
}

/// Runs one experiment in memory.
pub fn run(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let start = Instant::now();
    let tol = checks::Tolerances::new(cfg);
    let out = match cfg.kind {
        ExperimentKind::QuadrupleIdentities => algebra::quadruple_identities(cfg, &tol),
        ExperimentKind::ComposeAcross | ExperimentKind::ComposeCross | ExperimentKind::ComposeDouble => {
            algebra::compose(cfg, &tol)
        }
        ExperimentKind::K0Sweep | ExperimentKind::Theta0Sweep => algebra::gain_sweep(cfg, &tol),
        ExperimentKind::Radius => algebra::radius(cfg, &tol),
        ExperimentKind::BoundaryFeedin => boundaries::feedin(cfg, &tol),
        ExperimentKind::BeamTransfer => beams::transfer(cfg, &tol),
        ExperimentKind::BeamBounds => beams::bounds(cfg, &tol),
        ExperimentKind::BeamObservability => beams::observability(cfg, &tol),
    }?;
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        kind: cfg.kind,
        generator: random::GENERATOR,
        config: cfg.clone(),
        passed: out.assertions.iter().all(|a| a.passed),
        traces: out.traces.iter().map(|t| t.name.clone()).collect(),
        assertions: out.assertions,
        payload: out.payload,
        wall_time_s: start.elapsed().as_secs_f64(),
        trace_data: out.traces,
    })
}

/// Runs an experiment and writes its report and traces into `dir`. Nothing is
/// written if the run fails with an error.
pub fn run_to_dir(cfg: &ExperimentConfig, dir: &Path) -> Result<RunReport> {
    let rep = run(cfg)?;
    rep.write_to(dir)?;
    Ok(rep)
}

pub(crate) fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub(crate) fn fmt(x: f64) -> String {
    format!("{x:e}")
}
