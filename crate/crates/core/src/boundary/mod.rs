//! Boundary control systems `(L, G, K)` in extended coordinates: restriction
//! to the trace kernel, Dirichlet maps, feedthrough limits and boundary
//! feedback composites.

mod feedin;
mod feedthrough;
mod simulate;
pub mod standins;
mod triple;

use nalgebra::DMatrix;
use serde::Serializer;

pub use feedin::{feed_in_control, feed_in_full, feed_in_limit_check, feed_in_observe, FeedInReport, LimitCheck};
pub use feedthrough::{channel_feedthrough, channel_samples, feedthrough_estimate, FeedthroughEstimate, InputTrace, ShiftSweep};
pub use simulate::{extended_simulation, ExtendedTrace};
pub use triple::{
    control_operator_from_triple, decomposition_residual, dirichlet_map, dirichlet_map_all, output_decomposition_residual,
    realization_of, restrict_generator, BoundaryRealizationReport, BoundaryTriple, DirichletMap, Lifting, Restriction,
};

pub(crate) fn ser_matrix<S: Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for r in m.row_iter() {
        seq.serialize_element(&r.iter().copied().collect::<Vec<f64>>())?;
    }
    seq.end()
}
