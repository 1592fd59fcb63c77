use std::collections::BTreeMap;

use serde::Serialize;

use super::{ExperimentConfig, ExperimentKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Comparison {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Clone, Debug, Serialize)]
pub struct Assertion {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub passed: bool,
}

type Row = (&'static str, f64, Comparison);

use Comparison::{AtLeast, AtMost};

/// Named tolerances of each kind with their defaults.
pub(crate) fn defaults(kind: ExperimentKind) -> &'static [Row] {
    match kind {
        ExperimentKind::QuadrupleIdentities => &[
            ("semigroup", 1e-10, AtMost),
            ("input_split", 1e-10, AtMost),
            ("output_shift", 1e-10, AtMost),
            ("io_splice", 1e-10, AtMost),
            ("toeplitz", 1e-10, AtMost),
        ],
        ExperimentKind::ComposeAcross | ExperimentKind::ComposeCross | ExperimentKind::ComposeDouble => {
            &[("transfer", 1e-10, AtMost), ("time", 1e-9, AtMost)]
        }
        ExperimentKind::K0Sweep => &[
            ("relative_sigma_within_bound", 1e-8, AtLeast),
            ("breakdown_margin", 1.0, AtLeast),
        ],
        ExperimentKind::Theta0Sweep => &[
            ("constant_over_alpha0_within_bound", 1.0, AtLeast),
            ("breakdown_margin", 1.0, AtLeast),
        ],
        ExperimentKind::Radius => &[
            ("preserved_sigma_ratio", 1e-8, AtLeast),
            ("adversarial_sigma_ratio", 1e-10, AtMost),
            ("radius_identity", 1e-12, AtMost),
        ],
        ExperimentKind::BoundaryFeedin => &[
            ("simulation", 1e-6, AtMost),
            ("shift_independence", 1e-8, AtMost),
            ("feedin_composite", 1e-9, AtMost),
            ("velocity_final_residual", 1e-4, AtMost),
            ("velocity_feedthrough", 1e-3, AtMost),
            ("limit_prediction", 1e-6, AtMost),
        ],
        ExperimentKind::BeamTransfer => &[
            ("h_times_s", 5.0, AtMost),
            ("h1_scaled", 2.0, AtMost),
            ("discrete_relative_error", 0.02, AtMost),
        ],
        ExperimentKind::BeamBounds => &[
            ("admissibility_ratio", 1.05, AtMost),
            ("wellposedness_ratio", 1.05, AtMost),
            ("observability_ratio", 0.95, AtLeast),
            ("energy_drift", 1e-8, AtMost),
            ("rho_order", 1.0, AtLeast),
            ("rho1_order", 1.0, AtLeast),
        ],
        ExperimentKind::BeamObservability => &[
            ("open_loop_ratio", 0.95, AtLeast),
            ("energy_increase", 1e-10, AtMost),
        ],
    }
}

/// Defaults merged with the config's overrides; collects assertions.
pub(crate) struct Tolerances {
    table: BTreeMap<&'static str, (f64, Comparison)>,
}

impl Tolerances {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        let table = defaults(cfg.kind)
            .iter()
            .map(|&(name, v, c)| (name, (cfg.tolerances.get(name).copied().unwrap_or(v), c)))
            .collect();
        Tolerances { table }
    }

    pub fn get(&self, name: &str) -> f64 {
        self.table[name].0
    }

    /// Assertion against the named tolerance. NaN never passes.
    pub fn check(&self, name: &'static str, measured: f64) -> Assertion {
        let (tolerance, comparison) = *self
            .table
            .get(name)
            .unwrap_or_else(|| panic!("assertion '{name}' has no tolerance entry"));
        let passed = match comparison {
            AtMost => measured <= tolerance,
            AtLeast => measured >= tolerance,
        };
        Assertion { name: name.to_string(), measured, tolerance, comparison, passed }
    }
}
