//! Seeded random instances for property checks and experiments.
//!
//! All generators draw from [`Rng`] (ChaCha8), so a seed reproduces an
//! instance on every platform.

use nalgebra::{DMatrix, DVector};
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::system::Realization;

pub type Rng = ChaCha8Rng;

/// Name recorded in reports.
pub const GENERATOR: &str = "ChaCha8Rng (rand_chacha 0.9)";

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn gaussian_vector(rng: &mut Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// Random generator with spectral abscissa pushed left by `shift`; entries are
/// scaled by `1/sqrt(n)` so the spectrum stays in a disc of radius about one.
pub fn generator(rng: &mut Rng, n: usize, shift: f64) -> DMatrix<f64> {
    gaussian(rng, n, n) / (n as f64).sqrt() - DMatrix::identity(n, n) * shift
}

/// Random matrix rescaled to spectral norm `norm`.
pub fn with_norm(rng: &mut Rng, rows: usize, cols: usize, norm: f64) -> DMatrix<f64> {
    let m = gaussian(rng, rows, cols);
    let s = crate::linalg::norm2(&m);
    if s == 0.0 {
        m
    } else {
        m * (norm / s)
    }
}

pub fn realization(rng: &mut Rng, n: usize, m: usize, p: usize, d_norm: f64) -> Result<Realization> {
    let a = generator(rng, n, 0.5);
    let b = gaussian(rng, n, m);
    let c = gaussian(rng, p, n);
    let d = with_norm(rng, p, m, d_norm);
    Realization::new(a, b, c, d)
}

pub fn stable_realization(rng: &mut Rng, n: usize, m: usize, p: usize) -> Result<Realization> {
    loop {
        let r = realization(rng, n, m, p, 0.0)?;
        if crate::linalg::spectral_abscissa(r.a()) < -0.05 {
            return Ok(r);
        }
    }
}

/// Shared-generator family for the perturbation theorems: a square main system
/// and the three perturbation blocks sharing `A`, `B`, `C`, `dB`, `dC`.
#[derive(Clone, Debug)]
pub struct PerturbationFamily {
    /// `(A, B, C, D)`, square.
    pub main: Realization,
    /// `(A, dB, C, P_b)`.
    pub pert_b: Realization,
    /// `(A, B, dC, P_c)`.
    pub pert_c: Realization,
    /// `(A, dB, dC, P_bc)`.
    pub pert_bc: Realization,
}

#[derive(Clone, Copy, Debug)]
pub struct FamilyShape {
    pub n: usize,
    /// Loop dimension (input = output of the main system).
    pub m: usize,
    /// Inputs through `dB`.
    pub extra_inputs: usize,
    /// Outputs through `dC`.
    pub extra_outputs: usize,
    /// Spectral norm of `D`; below one keeps `I - D` invertible.
    pub d_norm: f64,
    /// Scale of the `dB`, `dC` and `P` blocks.
    pub pert_scale: f64,
}

impl FamilyShape {
    pub fn draw(rng: &mut Rng, max_n: usize, max_m: usize) -> Self {
        FamilyShape {
            n: rng.random_range(2..=max_n),
            m: rng.random_range(1..=max_m),
            extra_inputs: rng.random_range(1..=max_m),
            extra_outputs: rng.random_range(1..=max_m),
            d_norm: rng.random_range(0.0..0.5),
            pert_scale: 1.0,
        }
    }
}

pub fn perturbation_family(rng: &mut Rng, s: &FamilyShape) -> Result<PerturbationFamily> {
    let a = generator(rng, s.n, 0.5);
    let b = gaussian(rng, s.n, s.m) / (s.n as f64).sqrt();
    let c = gaussian(rng, s.m, s.n) / (s.n as f64).sqrt();
    let d = with_norm(rng, s.m, s.m, s.d_norm);
    let db = gaussian(rng, s.n, s.extra_inputs) * s.pert_scale;
    let dc = gaussian(rng, s.extra_outputs, s.n) * s.pert_scale;
    let pb = gaussian(rng, s.m, s.extra_inputs) * (0.5 * s.pert_scale);
    let pc = gaussian(rng, s.extra_outputs, s.m) * (0.5 * s.pert_scale);
    let pbc = gaussian(rng, s.extra_outputs, s.extra_inputs) * (0.5 * s.pert_scale);
    Ok(PerturbationFamily {
        main: Realization::new(a.clone(), b.clone(), c.clone(), d)?,
        pert_b: Realization::new(a.clone(), db.clone(), c, pb)?,
        pert_c: Realization::new(a.clone(), b, dc.clone(), pc)?,
        pert_bc: Realization::new(a, db, dc, pbc)?,
    })
}

/// Smooth random scalar signal: a few random sinusoids.
pub fn smooth_profile(rng: &mut Rng, terms: usize) -> Vec<(f64, f64, f64)> {
    (0..terms)
        .map(|_| {
            (
                StandardNormal.sample(rng),
                rng.random_range(0.5..6.0),
                rng.random_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect()
}

pub fn eval_profile(profile: &[(f64, f64, f64)], t: f64) -> f64 {
    profile.iter().map(|(a, w, ph)| a * (w * t + ph).sin()).sum()
}
