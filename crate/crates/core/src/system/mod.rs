//! Realizations, their time-domain maps on a grid, and frequency-domain evaluation.

mod frequency;
mod grid;
mod identities;
pub mod io;
mod maps;
mod realization;

pub use frequency::{identity_samples, lambda_extension, regularity_limit, resolvent_apply, transfer, LimitEstimate};
pub use grid::{Signal, TimeGrid};
pub use identities::{identity_defects, IdentityDefects};
pub use maps::{input_map, io_map, output_map, semigroup_step, trajectory, Discretization, QuadrupleMaps};
pub use realization::{Realization, SpaceLabels};

pub(crate) use maps::propagate;
pub(crate) use realization::same_matrix;
