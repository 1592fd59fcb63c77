use wellposed::feedback::*;
use wellposed::random::{perturbation_family, rng, FamilyShape};
use wellposed::TimeGrid;

#[test]
fn compositions_on_random_families() {
    let mut r = rng(11);
    let g = TimeGrid::new(1.0, 40).unwrap();
    let mut worst = [0.0f64; 6];
    for _ in 0..20 {
        let shape = FamilyShape::draw(&mut r, 6, 3);
        let f = perturbation_family(&mut r, &shape).unwrap();
        let a = perturb_across(&f.main, &f.pert_b, &g).unwrap();
        let c = perturb_cross(&f.main, &f.pert_c, &g).unwrap();
        let d = perturb_double(&f.main, &f.pert_b, &f.pert_c, &f.pert_bc, &g).unwrap();
        for (i, rep) in [a, c, d].iter().enumerate() {
            worst[2 * i] = worst[2 * i].max(rep.deviation_transfer);
            worst[2 * i + 1] = worst[2 * i + 1].max(rep.deviation_time);
        }
    }
    println!("{worst:?}");
    assert!(worst.iter().all(|&w| w < 1e-9));
}

#[test]
fn commuting_gain_matches_square_form() {
    let mut r = rng(3);
    let f = perturbation_family(&mut r, &FamilyShape { n: 4, m: 2, extra_inputs: 1, extra_outputs: 1, d_norm: 0.3, pert_scale: 1.0 }).unwrap();
    let fb = FeedbackGain::scaled_identity(0.7, 2).unwrap();
    let cl = closed_loop(&f.main, &fb).unwrap();
    let sq = square_input_operator(&f.main, &fb).unwrap();
    assert!((cl.b() - sq).norm() < 1e-12 * cl.b().norm());
}
