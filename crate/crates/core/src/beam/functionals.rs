use nalgebra::DVector;

use super::model::{BeamModel, BeamState};

/// Trapezoid rule over nodes `x_0..x_{N+1}` given values at those nodes.
fn trapezoid(h: f64, f: impl Iterator<Item = f64>) -> f64 {
    let vals: Vec<f64> = f.collect();
    let last = vals.len() - 1;
    vals.iter()
        .enumerate()
        .map(|(i, v)| if i == 0 || i == last { 0.5 * v } else { *v })
        .sum::<f64>()
        * h
}

/// Velocity and curvature extended to all nodes `0..=N+1`
/// (`v(0) = 0` by the clamp, `w_xx(1) = 0` by the free end).
fn nodal_fields(model: &BeamModel, s: &BeamState) -> (Vec<f64>, Vec<f64>) {
    let kappa = model.curvature(&s.w);
    let v = std::iter::once(0.0).chain(s.v.iter().copied()).collect();
    let k = kappa.iter().copied().chain(std::iter::once(0.0)).collect();
    (v, k)
}

/// `F = 1/2 int (w_t^2 + w_xx^2)`, trapezoid with the dynamics' curvature stencil.
pub fn energy(model: &BeamModel, s: &BeamState) -> f64 {
    let kappa = model.curvature(&s.w);
    0.5 * (s.v.component_mul(&s.v).dot(model.mass_weights())
        + kappa.component_mul(&kappa).dot(model.curvature_weights()))
}

/// `sum_i h q(x_i) v_i w_x(x_i)` over interior nodes with centered `w_x`;
/// `q` must vanish at both ends (or `v` must).
fn weighted_multiplier(model: &BeamModel, s: &BeamState, q: impl Fn(f64) -> f64) -> f64 {
    let h = model.dx();
    let w = &s.w;
    let wm = |i: usize| if i == 0 { 0.0 } else { w[i - 1] };
    (1..model.nodes())
        .map(|i| {
            let x = i as f64 * h;
            q(x) * s.v[i - 1] * (wm(i + 1) - wm(i - 1)) / (2.0 * h)
        })
        .sum::<f64>()
        * h
}

/// `rho = int x (x - 1) w_t w_x`.
pub fn multiplier_rho(model: &BeamModel, s: &BeamState) -> f64 {
    weighted_multiplier(model, s, |x| x * (x - 1.0))
}

/// `rho1 = int (x - 1) w_t w_x`.
pub fn multiplier_rho1(model: &BeamModel, s: &BeamState) -> f64 {
    weighted_multiplier(model, s, |x| x - 1.0)
}

/// Terms of `rho' = -1/2 int (2x - 1)(w_t^2 + 3 w_xx^2) - w_x(1)^2`.
pub fn rho_rate_terms(model: &BeamModel, s: &BeamState) -> [f64; 3] {
    let h = model.dx();
    let (v, k) = nodal_fields(model, s);
    let q = |i: usize| 2.0 * i as f64 * h - 1.0;
    let kin = -0.5 * trapezoid(h, (0..v.len()).map(|i| q(i) * v[i] * v[i]));
    let pot = -1.5 * trapezoid(h, (0..k.len()).map(|i| q(i) * k[i] * k[i]));
    let tip = -model.slope_tip(&s.w).powi(2);
    [kin, pot, tip]
}

/// Terms of `rho1' = 1/2 w_xx(0)^2 - 1/2 int (w_t^2 + 3 w_xx^2)`.
pub fn rho1_rate_terms(model: &BeamModel, s: &BeamState) -> [f64; 3] {
    let h = model.dx();
    let (v, k) = nodal_fields(model, s);
    let kin = -0.5 * trapezoid(h, v.iter().map(|x| x * x));
    let pot = -1.5 * trapezoid(h, k.iter().map(|x| x * x));
    let root = 0.5 * model.curvature_root(&s.w).powi(2);
    [kin, pot, root]
}

/// Smooth state `w = sum a_j phi_j`, `v = sum b_j omega_j phi_j` over given modes.
pub fn modal_state(modes: &[(f64, DVector<f64>)], a: &[f64], b: &[f64]) -> BeamState {
    let m = modes[0].1.len();
    let mut s = BeamState::zeros(m);
    for ((omega, phi), (&ai, &bi)) in modes.iter().zip(a.iter().zip(b)) {
        s.w += phi * ai;
        s.v += phi * (bi * omega);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam::BeamMode;

    fn model(n: usize) -> BeamModel {
        BeamModel::new(n, BeamMode::Homogeneous).unwrap()
    }

    #[test]
    fn zero_and_flat_states() {
        let m = model(20);
        let z = BeamState::zeros(m.nodes());
        assert_eq!(energy(&m, &z), 0.0);
        assert_eq!(multiplier_rho(&m, &z), 0.0);
        let mut flat = z.clone();
        flat.v.fill(1.0);
        // The clamped node carries no velocity, so its half cell is missing.
        assert!((energy(&m, &flat) - 0.5 * (1.0 - 0.5 * m.dx())).abs() < 1e-14);
    }

    #[test]
    fn energy_matches_energy_coordinates_and_modes() {
        let m = model(30);
        let modes = m.modes(3);
        let s = modal_state(&modes, &[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0]);
        let f = energy(&m, &s);
        assert!((f - 0.5 * modes[0].0.powi(2)).abs() < 1e-10 * f);
        let xi = m.to_energy(&s).unwrap();
        assert!((f - 0.5 * xi.norm_squared()).abs() < 1e-10 * f);
    }

    #[test]
    fn multipliers_bounded_by_energy() {
        let m = model(40);
        let modes = m.modes(5);
        let s = modal_state(&modes, &[1.0, -0.5, 0.3, 0.2, -0.1], &[0.4, 0.9, -0.3, 0.1, 0.2]);
        let f = energy(&m, &s);
        assert!(multiplier_rho(&m, &s).abs() <= f + 1e-8);
        assert!(multiplier_rho1(&m, &s).abs() <= f + 1e-8);
    }

    #[test]
    fn multipliers_converge_to_quadrature_of_smooth_fields() {
        // w = x^2 (x^2 - 4x + 6) satisfies the clamp and w_xx(1) = 0; v = x^2.
        let w = |x: f64| x * x * (x * x - 4.0 * x + 6.0);
        let wx = |x: f64| 4.0 * x * x * x - 12.0 * x * x + 12.0 * x;
        let v = |x: f64| x * x;
        let exact = |q: &dyn Fn(f64) -> f64| {
            // Composite Simpson on a fine grid.
            let n = 20_000;
            let h = 1.0 / n as f64;
            (0..=n)
                .map(|i| {
                    let x = i as f64 * h;
                    let c = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                    c * q(x) * v(x) * wx(x)
                })
                .sum::<f64>()
                * h
                / 3.0
        };
        let rho_ex = exact(&|x| x * (x - 1.0));
        let rho1_ex = exact(&|x| x - 1.0);
        let err = |n: usize| {
            let m = model(n);
            let x = m.positions();
            let s = BeamState { w: x.map(w), v: x.map(v), t: 0.0 };
            (
                (multiplier_rho(&m, &s) - rho_ex).abs(),
                (multiplier_rho1(&m, &s) - rho1_ex).abs(),
            )
        };
        let (e1, f1) = err(49);
        let (e2, f2) = err(99);
        assert!(e1 / e2 > 3.5 && e1 / e2 < 4.5, "{e1} {e2}");
        assert!(f1 / f2 > 3.5 && f1 / f2 < 4.5, "{f1} {f2}");
    }
}
