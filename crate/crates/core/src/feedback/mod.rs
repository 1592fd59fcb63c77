//! Feedback interconnection, perturbation composition and robustness radii.

mod bounds;
mod compose;
mod gain;
pub mod interconnect;

pub use bounds::{k0_bound, theta0_bound, K0Inputs, Theta0Inputs};
pub use compose::{
    across_closed_loop, across_k0, cross_closed_loop, cross_theta0, double_closed_loop, perturb_across,
    perturb_cross, perturb_double, scaled_across, scaled_cross, square_input_operator, CompositionReport,
    Theorem,
};
pub use gain::{admissible_feedback_check, closed_loop, AdmissibilityReport, FeedbackGain};
