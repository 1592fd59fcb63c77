//! Clamped Euler-Bernoulli beam with shear control at the free end: finite
//! differences, energy and multiplier functionals, closed-form transfer
//! functions and randomized checks of the energy inequalities.

mod functionals;
mod model;
mod simulate;
mod transfer;
mod verify;

pub use functionals::{
    energy, modal_state, multiplier_rho, multiplier_rho1, rho1_rate_terms, rho_rate_terms,
};
pub use model::{BeamMode, BeamModel, BeamState, BeamTrace};
pub use simulate::{
    modal_amplitude, rho1_derivative_check, rho_derivative_check, simulate, BeamRun, BeamSimulator, DerivativeCheck,
    FunctionalTrace,
};
pub use transfer::{beam_transfer_h, beam_transfer_h1, beam_transfer_h1_scaled};
pub use verify::{
    random_modal_state, verify_admissibility_bound, verify_observability, verify_wellposedness_bound,
    wellposedness_constant, BoundReport, TrialConfig,
};
