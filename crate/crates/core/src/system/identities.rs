use nalgebra::DVector;
use serde::Serialize;

use super::grid::{Signal, TimeGrid};
use super::maps::{input_map, io_map, output_map, semigroup_step, QuadrupleMaps};
use super::realization::Realization;
use crate::error::{Error, Result};
use crate::linalg::{norm2, Scalar};

/// Relative defects of the quadruple composition laws at a split `tau = k dt`
/// of a grid with `t + tau = N dt`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct IdentityDefects {
    /// `T(t + tau) = T(t) T(tau)`.
    pub semigroup: f64,
    /// `Phi(t + tau) u = T(t) Phi(tau) u + Phi(t) u(. + tau)`.
    pub input_split: f64,
    /// `(Psi(t + tau) x)(. + tau) = Psi(t) T(tau) x` on `[0, t]`.
    pub output_shift: f64,
    /// `(F(t + tau) u)(. + tau) = Psi(t) Phi(tau) u + F(t) u(. + tau)` on `[0, t]`.
    pub io_splice: f64,
    /// Block-Toeplitz defect of the sampled input-output map.
    pub toeplitz: f64,
}

impl IdentityDefects {
    pub fn max(&self) -> f64 {
        [self.semigroup, self.input_split, self.output_shift, self.io_splice, self.toeplitz]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

fn rel(a: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        a / scale
    } else {
        a
    }
}

fn tail<T: Scalar>(s: &Signal<T>, from: usize) -> Result<Signal<T>> {
    s.shifted(from)
}

/// Evaluates every composition law at split step `split` (`0 < split < N`).
pub fn identity_defects<T: Scalar>(
    r: &Realization<T>,
    grid: &TimeGrid,
    split: usize,
    x0: &DVector<T>,
    u: &Signal<T>,
) -> Result<IdentityDefects> {
    let n = grid.n_steps();
    if split == 0 || split >= n {
        return Err(Error::param(format!("split step must lie in 1..{n}, got {split}")));
    }
    let dt = grid.dt();
    let tau = split as f64 * dt;
    let rest = (n - split) as f64 * dt;
    let short = grid.truncated(n - split)?;

    let t_full = semigroup_step(r, n as f64 * dt)?;
    let t_rest = semigroup_step(r, rest)?;
    let t_tau = semigroup_step(r, tau)?;
    let prod = &t_rest * &t_tau;
    let semigroup = rel(norm2(&(&t_full - &prod)), norm2(&t_full).max(1.0));

    let u_tail = tail(u, split)?;
    let phi_full = input_map(r, grid, u)?;
    let phi_tau = phi_full.at(split).clone();
    let phi_rest = input_map(r, &short, &u_tail)?;
    let lhs = phi_full.last();
    let rhs = &t_rest * &phi_tau + phi_rest.last();
    let input_split = rel((lhs - &rhs).norm(), lhs.norm().max(rhs.norm()));

    let psi_full = output_map(r, grid, x0)?;
    let psi_rest = output_map(r, &short, &(&t_tau * x0))?;
    let output_shift = tail(&psi_full, split)?.max_rel_deviation(&psi_rest);

    let f_full = io_map(r, grid, u)?;
    let free = output_map(r, &short, &phi_tau)?;
    let forced = io_map(r, &short, &u_tail)?;
    let spliced = Signal::new(
        short,
        free.values().iter().zip(forced.values()).map(|(a, b)| a + b).collect(),
    )?;
    let io_splice = tail(&f_full, split)?.max_rel_deviation(&spliced);

    let toeplitz = QuadrupleMaps::assemble(r, grid)?.toeplitz_defect();

    Ok(IdentityDefects { semigroup, input_split, output_shift, io_splice, toeplitz })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;

    #[test]
    fn laws_hold_on_random_systems() {
        let mut g = random::rng(11);
        for _ in 0..4 {
            let r = random::realization(&mut g, 4, 2, 3, 0.7).unwrap();
            let grid = TimeGrid::new(1.0, 40).unwrap();
            let x0 = random::gaussian_vector(&mut g, 4);
            let u = Signal::from_fn(grid, |t| DVector::from_vec(vec![t.sin(), (3.0 * t).cos()])).unwrap();
            let d = identity_defects(&r, &grid, 13, &x0, &u).unwrap();
            assert!(d.max() < 1e-10, "{d:?}");
        }
    }

    #[test]
    fn split_bounds() {
        let r = Realization::new(
            nalgebra::DMatrix::from_element(1, 1, -1.0),
            nalgebra::DMatrix::from_element(1, 1, 1.0),
            nalgebra::DMatrix::from_element(1, 1, 1.0),
            nalgebra::DMatrix::from_element(1, 1, 0.0),
        )
        .unwrap();
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let u = Signal::zeros(grid, 1);
        let x0 = DVector::from_element(1, 1.0);
        assert!(identity_defects(&r, &grid, 0, &x0, &u).is_err());
        assert!(identity_defects(&r, &grid, 4, &x0, &u).is_err());
    }
}
