//! Unit-feedback perturbation theorems: control-side ("across"), observation-side
//! ("cross") and the double perturbation ("bcross").
//!
//! Each composition is checked three ways:
//! * transfer domain, exact up to rounding;
//! * time domain, by realizing the right-hand side as one augmented LTI system
//!   and discretizing it exactly under zero-order hold;
//! * on the sample-and-hold grid, by multiplying the assembled map matrices.
//!   This last figure is a discretization diagnostic, `O(dt)`, not a theorem check.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Serialize, Serializer};

use super::gain::{admissible_feedback_check, AdmissibilityReport, FeedbackGain};
use super::interconnect::{free_response, loop_inverse, parallel, series, state_readout};
use super::bounds::{k0_bound, theta0_bound, K0Inputs, Theta0Inputs};
use crate::error::{Error, Result};
use crate::gramian;
use crate::linalg::{inverse, norm2, rel_dev, to_complex, Scalar};
use crate::system::io::RealizationDoc;
use crate::system::{identity_samples, resolvent_apply, same_matrix, transfer, QuadrupleMaps, Realization, TimeGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Theorem {
    Across,
    Cross,
    Bcross,
}

fn ser_realization<T: Scalar, S: Serializer>(r: &Realization<T>, s: S) -> std::result::Result<S::Ok, S::Error> {
    RealizationDoc::from_realization(r).serialize(s)
}

#[derive(Clone, Debug, Serialize)]
pub struct CompositionReport<T: Scalar = f64> {
    pub theorem: Theorem,
    #[serde(serialize_with = "ser_realization")]
    pub closed_loop: Realization<T>,
    /// Map of the closed loop (input map, output map or io map on the grid).
    #[serde(skip)]
    pub lhs: DMatrix<T>,
    /// The composed right-hand side, exactly discretized.
    #[serde(skip)]
    pub rhs: DMatrix<T>,
    pub deviation_time: f64,
    /// Same identity with sample-and-hold map products; `O(dt)`.
    pub deviation_grid: f64,
    pub deviation_transfer: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta0: Option<f64>,
    pub lambda_samples: Vec<f64>,
    pub grid: TimeGrid,
    pub admissibility: AdmissibilityReport,
}

fn square_main<T: Scalar>(main: &Realization<T>, g: &TimeGrid) -> Result<AdmissibilityReport> {
    if main.m() != main.p() {
        return Err(Error::dim("unit feedback needs input dim = output dim", main.m(), main.p()));
    }
    let rep = admissible_feedback_check(main, &FeedbackGain::scaled_identity(1.0, main.m())?, g)?;
    if !rep.admissible {
        return Err(Error::NotAdmissible {
            sigma_min: rep.sigma_min.min(rep.feedthrough_sigma_min),
            threshold: 1e-8,
        });
    }
    Ok(rep)
}

fn loop_resolvent<T: Scalar>(d: &DMatrix<T>) -> Result<DMatrix<T>> {
    let m = d.nrows();
    inverse(&(DMatrix::<T>::identity(m, m) - d)).ok_or(Error::FeedthroughLoop)
}

fn id_minus_inv(g: &DMatrix<Complex64>, lambda: Complex64) -> Result<DMatrix<Complex64>> {
    let m = g.nrows();
    inverse(&(DMatrix::<Complex64>::identity(m, m) - g)).ok_or(Error::Singular { lambda })
}

/// `I - F` inverted on coefficient vectors of the grid.
fn grid_loop<T: Scalar>(f: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = f.nrows();
    inverse(&(DMatrix::<T>::identity(n, n) - f)).ok_or(Error::FeedthroughLoop)
}

/// `(A + B(I-D)^{-1}C, B(I-D)^{-1}P + dB, (I-D)^{-1}C, (I-D)^{-1}P)`.
pub fn across_closed_loop<T: Scalar>(main: &Realization<T>, pert: &Realization<T>) -> Result<Realization<T>> {
    let s = loop_resolvent(main.d())?;
    let sc = &s * main.c();
    Realization::new(
        main.a() + main.b() * &sc,
        main.b() * &s * pert.d() + pert.b(),
        sc,
        &s * pert.d(),
    )
}

/// `(A + B(I-D)^{-1}C, B, P(I-D)^{-1}C + dC, P)`.
pub fn cross_closed_loop<T: Scalar>(main: &Realization<T>, pert: &Realization<T>) -> Result<Realization<T>> {
    let s = loop_resolvent(main.d())?;
    let sc = &s * main.c();
    Realization::new(
        main.a() + main.b() * &sc,
        main.b().clone(),
        pert.d() * &sc + pert.c(),
        pert.d().clone(),
    )
}

/// `(A^I, dB + B(I-D)^{-1}P_b, dC + P_c(I-D)^{-1}C, P_c(I-D)^{-1}P_b + P_bc)`.
pub fn double_closed_loop<T: Scalar>(
    main: &Realization<T>,
    pert_b: &Realization<T>,
    pert_c: &Realization<T>,
    pert_bc: &Realization<T>,
) -> Result<Realization<T>> {
    let s = loop_resolvent(main.d())?;
    let sc = &s * main.c();
    Realization::new(
        main.a() + main.b() * &sc,
        pert_b.b() + main.b() * &s * pert_b.d(),
        pert_bc.c() + pert_c.d() * &sc,
        pert_c.d() * &s * pert_b.d() + pert_bc.d(),
    )
}

/// Closed loop of the across construction with gain `k I`.
pub fn scaled_across<T: Scalar>(main: &Realization<T>, pert: &Realization<T>, k: f64) -> Result<Realization<T>> {
    let kk = T::from_re(k);
    let main_k = Realization::new(main.a().clone(), main.b().clone(), main.c() * kk, main.d() * kk)?;
    let pert_k = Realization::new(pert.a().clone(), pert.b().clone(), pert.c() * kk, pert.d() * kk)?;
    across_closed_loop(&main_k, &pert_k)
}

/// Closed loop of the cross construction with gain `k I`.
pub fn scaled_cross<T: Scalar>(main: &Realization<T>, pert: &Realization<T>, k: f64) -> Result<Realization<T>> {
    let kk = T::from_re(k);
    let main_k = Realization::new(main.a().clone(), main.b().clone(), main.c() * kk, main.d() * kk)?;
    let pert_k = Realization::new(pert.a().clone(), pert.b().clone(), pert.c().clone(), pert.d() * kk)?;
    cross_closed_loop(&main_k, &pert_k)
}

fn max_transfer_dev(
    lambdas: &[f64],
    mut both: impl FnMut(Complex64) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)>,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &l in lambdas {
        let (lhs, rhs) = both(Complex64::new(l, 0.0))?;
        worst = worst.max(rel_dev(&lhs, &rhs));
    }
    Ok(worst)
}

fn check_across<T: Scalar>(main: &Realization<T>, pert: &Realization<T>) -> Result<()> {
    main.check_same_a(pert, "perturbation A")?;
    same_matrix(main.c(), pert.c(), "perturbation C")?;
    Ok(())
}

fn check_cross<T: Scalar>(main: &Realization<T>, pert: &Realization<T>) -> Result<()> {
    main.check_same_a(pert, "perturbation A")?;
    same_matrix(main.b(), pert.b(), "perturbation B")?;
    Ok(())
}

/// Controllability radius of `(A, dB)` and the resulting `k0`, if `(A, dB)` is
/// exactly controllable at the grid horizon.
pub fn across_k0<T: Scalar>(main: &Realization<T>, pert: &Realization<T>, g: &TimeGrid) -> Result<Option<f64>> {
    let ctrl = gramian::controllability(pert, g, g.t_end())?;
    if !ctrl.exact {
        return Ok(None);
    }
    let mm = QuadrupleMaps::assemble(main, g)?;
    let mp = QuadrupleMaps::assemble(pert, g)?;
    k0_bound(&K0Inputs {
        t0: g.t_end(),
        d: norm2(main.d()),
        f: norm2(&mm.weighted_io_map()),
        phi: norm2(&mm.weighted_input_map()),
        f_pert: norm2(&mp.weighted_io_map()),
        s0: ctrl.sigma_min,
    })
    .map(Some)
}

/// Observability constant of `(A, dC)`, `alpha0 = k_obs / 2` and the resulting
/// `theta0`, if `(A, dC)` is exactly observable at the grid horizon.
pub fn cross_theta0<T: Scalar>(
    main: &Realization<T>,
    pert: &Realization<T>,
    g: &TimeGrid,
) -> Result<Option<(f64, f64, f64)>> {
    let obs = gramian::observability(pert, g, g.t_end())?;
    if !obs.exact {
        return Ok(None);
    }
    let mm = QuadrupleMaps::assemble(main, g)?;
    let mp = QuadrupleMaps::assemble(pert, g)?;
    let psi = gramian::observation_operator(main, g, g.t_end())?;
    let alpha0 = obs.sigma_min / 2.0;
    let theta0 = theta0_bound(&Theta0Inputs {
        t0: g.t_end(),
        d: norm2(main.d()),
        f: norm2(&mm.weighted_io_map()),
        f_pert: norm2(&mp.weighted_io_map()),
        psi: norm2(&psi.matrix),
        k_obs: obs.sigma_min,
        alpha0,
    })?;
    Ok(Some((theta0, obs.sigma_min, alpha0)))
}

/// Control-side perturbation: main `(A, B, C, D)` under unit feedback, extra
/// input through `(A, dB, C, P)`.
pub fn perturb_across<T: Scalar>(
    main: &Realization<T>,
    pert: &Realization<T>,
    g: &TimeGrid,
) -> Result<CompositionReport<T>> {
    let admissibility = square_main(main, g)?;
    check_across(main, pert)?;
    let cl = across_closed_loop(main, pert)?;

    let lhs = QuadrupleMaps::assemble(&cl, g)?.input_map;
    let composed = parallel(
        &series(&series(pert, &loop_inverse(main)?)?, &state_readout(main.a(), main.b())?)?,
        &state_readout(pert.a(), pert.b())?,
    )?;
    let rhs = composed.c() * QuadrupleMaps::assemble(&composed, g)?.input_map;

    let mm = QuadrupleMaps::assemble(main, g)?;
    let mp = QuadrupleMaps::assemble(pert, g)?;
    let grid_rhs = &mm.input_map * grid_loop(&mm.io_map)? * &mp.io_map + &mp.input_map;

    let lambdas = identity_samples(&[main.a(), cl.a()]);
    let (a, b, db) = (to_complex(main.a()), to_complex(main.b()), to_complex(pert.b()));
    let deviation_transfer = max_transfer_dev(&lambdas, |lam| {
        let lhs = resolvent_apply(cl.a(), lam, &to_complex(cl.b()))?;
        let ginv = id_minus_inv(&transfer(main, lam)?, lam)?;
        let rb = resolvent_apply(&a, lam, &b)?;
        let rdb = resolvent_apply(&a, lam, &db)?;
        Ok((lhs, rb * ginv * transfer(pert, lam)? + rdb))
    })?;

    Ok(CompositionReport {
        theorem: Theorem::Across,
        deviation_time: rel_dev(&lhs, &rhs),
        deviation_grid: rel_dev(&lhs, &grid_rhs),
        deviation_transfer,
        k0: across_k0(main, pert, g)?,
        theta0: None,
        lambda_samples: lambdas,
        grid: *g,
        admissibility,
        closed_loop: cl,
        lhs,
        rhs,
    })
}

/// Observation-side perturbation: main `(A, B, C, D)` under unit feedback,
/// extra output through `(A, B, dC, P)`.
pub fn perturb_cross<T: Scalar>(
    main: &Realization<T>,
    pert: &Realization<T>,
    g: &TimeGrid,
) -> Result<CompositionReport<T>> {
    let admissibility = square_main(main, g)?;
    check_cross(main, pert)?;
    let cl = cross_closed_loop(main, pert)?;
    let n = main.n();
    let m = main.m();

    let lhs = QuadrupleMaps::assemble(&cl, g)?.output_map;
    let composed = parallel(
        &series(&series(&free_response(main.a(), main.c(), m)?, &loop_inverse(main)?)?, pert)?,
        &free_response(pert.a(), pert.c(), m)?,
    )?;
    // State order: free response, loop inverse, perturbation, second free response.
    let mut embed = DMatrix::<T>::zeros(composed.n(), n);
    embed.view_mut((0, 0), (n, n)).fill_with_identity();
    embed.view_mut((3 * n, 0), (n, n)).fill_with_identity();
    let rhs = QuadrupleMaps::assemble(&composed, g)?.output_map * embed;

    let mm = QuadrupleMaps::assemble(main, g)?;
    let mp = QuadrupleMaps::assemble(pert, g)?;
    let grid_rhs = &mp.io_map * grid_loop(&mm.io_map)? * &mm.output_map + &mp.output_map;

    let lambdas = identity_samples(&[main.a(), cl.a()]);
    let eye = DMatrix::<Complex64>::identity(n, n);
    let (c, dc) = (to_complex(main.c()), to_complex(pert.c()));
    let deviation_transfer = max_transfer_dev(&lambdas, |lam| {
        let lhs = to_complex(cl.c()) * resolvent_apply(cl.a(), lam, &eye)?;
        let r = resolvent_apply(main.a(), lam, &eye)?;
        let ginv = id_minus_inv(&transfer(main, lam)?, lam)?;
        Ok((lhs, transfer(pert, lam)? * ginv * &c * &r + &dc * &r))
    })?;

    let theta = cross_theta0(main, pert, g)?;
    Ok(CompositionReport {
        theorem: Theorem::Cross,
        deviation_time: rel_dev(&lhs, &rhs),
        deviation_grid: rel_dev(&lhs, &grid_rhs),
        deviation_transfer,
        k0: None,
        theta0: theta.map(|t| t.0),
        lambda_samples: lambdas,
        grid: *g,
        admissibility,
        closed_loop: cl,
        lhs,
        rhs,
    })
}

/// Double perturbation with `pert_b = (A, dB, C, P_b)`, `pert_c = (A, B, dC, P_c)`
/// and `pert_bc = (A, dB, dC, P_bc)`.
pub fn perturb_double<T: Scalar>(
    main: &Realization<T>,
    pert_b: &Realization<T>,
    pert_c: &Realization<T>,
    pert_bc: &Realization<T>,
    g: &TimeGrid,
) -> Result<CompositionReport<T>> {
    let admissibility = square_main(main, g)?;
    check_across(main, pert_b)?;
    check_cross(main, pert_c)?;
    main.check_same_a(pert_bc, "perturbation A")?;
    same_matrix(pert_b.b(), pert_bc.b(), "perturbation dB")?;
    same_matrix(pert_c.c(), pert_bc.c(), "perturbation dC")?;
    let cl = double_closed_loop(main, pert_b, pert_c, pert_bc)?;

    let lhs = QuadrupleMaps::assemble(&cl, g)?.io_map;
    let composed = parallel(&series(&series(pert_b, &loop_inverse(main)?)?, pert_c)?, pert_bc)?;
    let rhs = QuadrupleMaps::assemble(&composed, g)?.io_map;

    let mm = QuadrupleMaps::assemble(main, g)?;
    let grid_rhs = QuadrupleMaps::assemble(pert_c, g)?.io_map
        * grid_loop(&mm.io_map)?
        * QuadrupleMaps::assemble(pert_b, g)?.io_map
        + QuadrupleMaps::assemble(pert_bc, g)?.io_map;

    let lambdas = identity_samples(&[main.a(), cl.a()]);
    let deviation_transfer = max_transfer_dev(&lambdas, |lam| {
        let ginv = id_minus_inv(&transfer(main, lam)?, lam)?;
        Ok((
            transfer(&cl, lam)?,
            transfer(pert_c, lam)? * ginv * transfer(pert_b, lam)? + transfer(pert_bc, lam)?,
        ))
    })?;

    Ok(CompositionReport {
        theorem: Theorem::Bcross,
        deviation_time: rel_dev(&lhs, &rhs),
        deviation_grid: rel_dev(&lhs, &grid_rhs),
        deviation_transfer,
        k0: None,
        theta0: None,
        lambda_samples: lambdas,
        grid: *g,
        admissibility,
        closed_loop: cl,
        lhs,
        rhs,
    })
}

/// The closed-loop input operator in the square case written as `B (I - D Gamma)^{-1}`;
/// equals `B (I - Gamma D)^{-1}` whenever `D` and `Gamma` commute (e.g. `Gamma = k I`).
pub fn square_input_operator<T: Scalar>(r: &Realization<T>, fb: &FeedbackGain<T>) -> Result<DMatrix<T>> {
    if r.m() != r.p() {
        return Err(Error::dim("square system required", r.m(), r.p()));
    }
    let g = fb.effective();
    Ok(r.b() * inverse(&(DMatrix::<T>::identity(r.p(), r.p()) - r.d() * g)).ok_or(Error::FeedthroughLoop)?)
}
