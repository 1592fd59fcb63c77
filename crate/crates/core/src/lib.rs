//! Finite-dimensional realization, composition and verification of well-posed
//! and regular linear systems.
//!
//! The crate works with dense realizations `(A, B, C, D)` and their sampled
//! time-domain maps under zero-order hold. On top of that it provides feedback
//! interconnection and perturbation composition, Gramian-based exact
//! controllability/observability measures with robustness sweeps, boundary
//! control triples `(L, G, K)`, and a finite-difference Euler-Bernoulli beam.

pub mod error;
pub mod linalg;
pub mod random;
pub mod feedback;
pub mod gramian;
pub mod boundary;
pub mod beam;
pub mod system;
pub mod experiment;

pub use error::{Error, Result};
pub use system::{Realization, Signal, TimeGrid};
