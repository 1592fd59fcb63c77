use nalgebra::{DMatrix, DVector};

use super::triple::BoundaryTriple;
use crate::error::{Error, Result};
use crate::linalg::{expm, inverse};
use crate::system::{Signal, TimeGrid};

/// Trajectory of the extended coordinates `z = (x, beta)` on a grid.
#[derive(Clone, Debug)]
pub struct ExtendedTrace {
    pub grid: TimeGrid,
    /// `z_k` with boundary values consistent with the input held on `[t_k, t_{k+1})`.
    pub states: Vec<DVector<f64>>,
    /// `K z_k`.
    pub outputs: Signal<f64>,
}

/// Simulates the boundary system without forming `(A, B)`: the constraint
/// `G_all z = (u, 0)` is differentiated into `beta' = -G_beta^{-1} G_x x'`,
/// the extended system is integrated exactly over each step, and `beta` is
/// reset from the trace equation whenever the held input changes.
pub fn extended_simulation(
    bt: &BoundaryTriple,
    grid: &TimeGrid,
    x0: &DVector<f64>,
    u: &Signal<f64>,
) -> Result<ExtendedTrace> {
    let n = bt.n();
    let b = bt.b1() + bt.b2();
    if x0.len() != n {
        return Err(Error::dim("initial state", n, x0.len()));
    }
    if u.dim() != bt.b1() || u.len() != grid.n_steps() + 1 {
        return Err(Error::dim(
            "boundary input",
            format!("{} channels on {} samples", bt.b1(), grid.n_steps() + 1),
            format!("{} channels on {} samples", u.dim(), u.len()),
        ));
    }
    let gall = bt.traces();
    let gx = gall.view((0, 0), (b, n)).into_owned();
    let gbi = inverse(&gall.view((0, n), (b, b)).into_owned())
        .ok_or(Error::RankDeficient { what: "trace map restricted to boundary coordinates" })?;
    let mut gen = DMatrix::zeros(n + b, n + b);
    gen.view_mut((0, 0), (n, n + b)).copy_from(bt.l());
    gen.view_mut((n, 0), (b, n + b)).copy_from(&(-&gbi * &gx * bt.l()));
    let step = expm(&(gen * grid.dt()));

    let consistent = |x: &DVector<f64>, uk: &DVector<f64>| {
        let mut data = DVector::zeros(b);
        data.rows_mut(0, bt.b1()).copy_from(uk);
        let beta = &gbi * (data - &gx * x);
        let mut z = DVector::zeros(n + b);
        z.rows_mut(0, n).copy_from(x);
        z.rows_mut(n, b).copy_from(&beta);
        z
    };

    let mut states = Vec::with_capacity(grid.n_steps() + 1);
    let mut x = x0.clone();
    for k in 0..=grid.n_steps() {
        let z = consistent(&x, u.at(k));
        if k < grid.n_steps() {
            x = (&step * &z).rows(0, n).into_owned();
        }
        states.push(z);
    }
    let outputs = Signal::new(*grid, states.iter().map(|z| bt.k() * z).collect())?;
    Ok(ExtendedTrace {
        grid: *grid,
        states,
        outputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::standins::{wave, WaveTraces};
    use crate::boundary::triple::realization_of;
    use crate::system::trajectory;

    #[test]
    fn matches_restricted_realization() {
        let bt = wave(12, WaveTraces::default()).unwrap();
        let grid = TimeGrid::new(1.0, 200).unwrap();
        let u = Signal::from_fn(grid, |t| DVector::from_element(1, (3.0 * t).sin())).unwrap();
        let x0 = DVector::from_fn(bt.n(), |i, _| (i as f64 * 0.3).cos());
        let ext = extended_simulation(&bt, &grid, &x0, &u).unwrap();
        let r = realization_of(&bt).unwrap();
        let xs = trajectory(&r, &grid, &x0, &u).unwrap();
        let ys: Vec<_> = xs.values().iter().zip(u.values()).map(|(x, u)| r.c() * x + r.d() * u).collect();
        let ys = Signal::new(grid, ys).unwrap();
        let dev = ys.max_rel_deviation(&ext.outputs);
        assert!(dev < 1e-10, "{dev}");
        assert!((xs.last() - ext.states.last().unwrap().rows(0, bt.n())).norm() < 1e-9);
    }
}
