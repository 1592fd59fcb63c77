//! Exact controllability and observability on a horizon: Gramians, radii,
//! minimum-norm controls and gain sweeps.

mod operators;
mod sweep;

pub use crate::linalg::surjectivity_radius;
pub use operators::{
    control_operator, controllability, min_norm_control, observability, observability_constant,
    observation_operator, ControlOperatorMatrix, GramianReport, ObservationOperatorMatrix, EXACT_REL,
};
pub use sweep::{design_grid, guaranteed_grid, log_grid, robustness_sweep, SweepMode, SweepReport, SweepRow};
