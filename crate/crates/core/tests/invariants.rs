use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use wellposed::beam::{random_modal_state, simulate, BeamMode, BeamModel};
use wellposed::boundary::{decomposition_residual, restrict_generator, BoundaryTriple};
use wellposed::feedback::{closed_loop, FeedbackGain};
use wellposed::gramian::{control_operator, controllability, min_norm_control, observability};
use wellposed::linalg::{norm2, singular_values, surjectivity_radius};
use wellposed::random::{self, rng};
use wellposed::system::{identity_defects, input_map, semigroup_step, transfer, QuadrupleMaps};
use wellposed::{Realization, Signal, TimeGrid};

fn config() -> ProptestConfig {
    ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() }
}

fn dual(r: &Realization) -> Realization {
    Realization::new(r.a().transpose(), r.c().transpose(), r.b().transpose(), r.d().transpose()).unwrap()
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn semigroup_law(seed in any::<u64>(), n in 1usize..7, s in 0.01f64..1.0, t in 0.01f64..1.0) {
        let mut g = rng(seed);
        let r = random::realization(&mut g, n, 1, 1, 0.0).unwrap();
        let lhs = semigroup_step(&r, s + t).unwrap();
        let rhs = semigroup_step(&r, s).unwrap() * semigroup_step(&r, t).unwrap();
        prop_assert!((&lhs - &rhs).norm() <= 1e-11 * lhs.norm().max(1.0));
    }

    #[test]
    fn quadruple_identities_hold(seed in any::<u64>(), n in 1usize..7, m in 1usize..4, p in 1usize..4, split in 1usize..30) {
        let mut g = rng(seed);
        let r = random::realization(&mut g, n, m, p, 1.0).unwrap();
        let grid = TimeGrid::new(1.0, 30).unwrap();
        let x0 = random::gaussian_vector(&mut g, n);
        let u = Signal::new(grid, (0..=30).map(|_| random::gaussian_vector(&mut g, m)).collect()).unwrap();
        let d = identity_defects(&r, &grid, split, &x0, &u).unwrap();
        prop_assert!(d.max() < 1e-10, "{d:?}");
    }

    #[test]
    fn io_map_is_block_toeplitz(seed in any::<u64>(), n in 1usize..6, steps in 2usize..25) {
        let mut g = rng(seed);
        let r = random::realization(&mut g, n, 2, 2, 0.5).unwrap();
        let maps = QuadrupleMaps::assemble(&r, &TimeGrid::new(1.0, steps).unwrap()).unwrap();
        prop_assert!(maps.toeplitz_defect() < 1e-12);
    }

    #[test]
    fn closed_loop_transfer_pushes_through(seed in any::<u64>(), n in 1usize..6, m in 1usize..4, k in 0.0f64..0.5, w in 0.0f64..5.0) {
        let mut g = rng(seed);
        let r = random::realization(&mut g, n, m, m, 0.5).unwrap();
        let gamma = random::with_norm(&mut g, m, m, 1.0);
        let fb = FeedbackGain::scaled(gamma.clone(), k).unwrap();
        let cl = closed_loop(&r, &fb).unwrap();
        let lambda = Complex64::new(wellposed::linalg::spectral_abscissa(r.a()).max(wellposed::linalg::spectral_abscissa(cl.a())) + 1.0, w);
        let h = transfer(&r, lambda).unwrap();
        let hcl = transfer(&cl, lambda).unwrap();
        let kg = gamma.map(|x| Complex64::new(k * x, 0.0));
        let eye = DMatrix::<Complex64>::identity(m, m);
        // G_cl (I - k Gamma G) = G and (I - G k Gamma) G_cl = G.
        let right = &hcl * (&eye - &kg * &h);
        let left = (&eye - &h * &kg) * &hcl;
        let scale = h.norm().max(1.0);
        prop_assert!((right - &h).norm() < 1e-9 * scale);
        prop_assert!((left - &h).norm() < 1e-9 * scale);
    }

    #[test]
    fn controllability_is_dual_to_observability(seed in any::<u64>(), n in 1usize..7, m in 1usize..4) {
        let mut g = rng(seed);
        let r = random::realization(&mut g, n, m, 2, 0.0).unwrap();
        let grid = TimeGrid::new(1.0, 40).unwrap();
        let c = controllability(&r, &grid, 1.0).unwrap();
        let o = observability(&dual(&r), &grid, 1.0).unwrap();
        prop_assert!((c.sigma_max - o.sigma_max).abs() <= 1e-10 * c.sigma_max);
        prop_assert!((c.sigma_min - o.sigma_min).abs() <= 1e-10 * c.sigma_max);
        prop_assert_eq!(c.exact, o.exact);
    }

    #[test]
    fn radius_guards_surjectivity(seed in any::<u64>(), rows in 1usize..6, extra in 0usize..4, frac in 0.0f64..0.99) {
        let mut g = rng(seed);
        let m = random::gaussian(&mut g, rows, rows + extra);
        let r = surjectivity_radius(&m);
        let p = random::with_norm(&mut g, rows, rows + extra, frac * r);
        let s = singular_values(&(&m + &p));
        prop_assert_eq!(s.len(), rows);
        prop_assert!(*s.last().unwrap() >= r - norm2(&p) - 1e-12 * r.max(1.0));
    }

    #[test]
    fn min_norm_control_reaches_and_is_orthogonal(seed in any::<u64>(), n in 1usize..5, m in 1usize..3) {
        let mut g = rng(seed);
        let r = random::realization(&mut g, n, m, 1, 0.0).unwrap();
        let grid = TimeGrid::new(1.0, 30).unwrap();
        prop_assume!(controllability(&r, &grid, 1.0).unwrap().exact);
        let target = random::gaussian_vector(&mut g, n);
        let u = min_norm_control(&r, &grid, 1.0, &target).unwrap();
        let x = input_map(&r, u.grid(), &u).unwrap();
        prop_assert!((x.last() - &target).norm() < 1e-8 * target.norm().max(1.0));

        // Any kernel direction of the control operator is orthogonal to u.
        let op = control_operator(&r, &grid, 1.0).unwrap().matrix;
        let z = random::gaussian_vector(&mut g, op.ncols());
        let vt = op.svd(false, true).v_t.unwrap();
        let kernel = &z - vt.transpose() * (&vt * &z);
        let us = QuadrupleMaps::stack(&u);
        prop_assert!(us.dot(&kernel).abs() < 1e-8 * us.norm() * kernel.norm().max(1e-300));
    }

    #[test]
    fn boundary_split_lands_in_the_kernel(seed in any::<u64>(), n in 2usize..8, b in 1usize..3) {
        let mut g = rng(seed);
        let ext = n + b;
        let l = random::gaussian(&mut g, n, ext) / (ext as f64).sqrt();
        let gm = random::gaussian(&mut g, b, ext);
        let k = random::gaussian(&mut g, 1, ext);
        let bt = match BoundaryTriple::new(l, gm, k) {
            Ok(bt) => bt,
            Err(_) => return Err(TestCaseError::reject("singular boundary block")),
        };
        let lambda = restrict_generator(&bt).unwrap().spectral_abscissa.max(0.0) + 1.0;
        let z = random::gaussian_vector(&mut g, ext);
        prop_assert!(decomposition_residual(&bt, lambda, &z).unwrap() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn free_beam_conserves_energy(seed in any::<u64>(), n in 10usize..30) {
        let model = BeamModel::new(n, BeamMode::ShearInput).unwrap();
        let modes = model.modes(4);
        let init = random_modal_state(&modes, &mut rng(seed));
        let run = simulate(&model, &TimeGrid::new(1.0, 200).unwrap(), &init, None).unwrap();
        let e0 = run.trace.energy[0];
        let drift = run.trace.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max);
        prop_assert!(drift <= 1e-10 * e0.max(1e-300), "drift {drift} of {e0}");
    }

    #[test]
    fn velocity_feedback_dissipates(seed in any::<u64>(), gain in 0.0f64..4.0) {
        let model = BeamModel::new(16, BeamMode::ShearFeedback { gain }).unwrap();
        let modes = model.modes(4);
        let init = random_modal_state(&modes, &mut rng(seed));
        let run = simulate(&model, &TimeGrid::new(1.0, 200).unwrap(), &init, None).unwrap();
        let e = &run.trace.energy;
        prop_assert!(e.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }
}
