use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{singular_values, zoh, Scalar};
use crate::system::{QuadrupleMaps, Realization, Signal, TimeGrid};

/// Exactness threshold relative to the largest singular value.
pub const EXACT_REL: f64 = 1e-8;

/// `Phi(t0)` acting on piecewise-constant inputs, in discrete L2 geometry:
/// block column `j` is `E^{N-1-j} G / sqrt(dt)`.
#[derive(Clone, Debug)]
pub struct ControlOperatorMatrix<T: Scalar = f64> {
    pub matrix: DMatrix<T>,
    pub t0: f64,
    pub grid: TimeGrid,
}

/// `Psi(t0)` projected onto piecewise constants: block row `k` is the output
/// averaged over `[t_k, t_{k+1})`, scaled by `sqrt(dt)`.
///
/// This projection is the exact adjoint partner of [`ControlOperatorMatrix`]
/// for the dual system, so duality holds to rounding.
#[derive(Clone, Debug)]
pub struct ObservationOperatorMatrix<T: Scalar = f64> {
    pub matrix: DMatrix<T>,
    pub t0: f64,
    pub grid: TimeGrid,
}

fn horizon(g: &TimeGrid, t0: f64) -> Result<TimeGrid> {
    let steps = g.index_of(t0)?;
    if steps == 0 {
        return Err(Error::param("horizon t0 must be positive"));
    }
    g.truncated(steps)
}

pub fn control_operator<T: Scalar>(r: &Realization<T>, g: &TimeGrid, t0: f64) -> Result<ControlOperatorMatrix<T>> {
    let h = horizon(g, t0)?;
    let maps = QuadrupleMaps::assemble(r, &h)?;
    Ok(ControlOperatorMatrix {
        matrix: maps.weighted_input_map(),
        t0,
        grid: h,
    })
}

pub fn observation_operator<T: Scalar>(
    r: &Realization<T>,
    g: &TimeGrid,
    t0: f64,
) -> Result<ObservationOperatorMatrix<T>> {
    let h = horizon(g, t0)?;
    let (n, p) = (r.n(), r.p());
    let dt = h.dt();
    let (e, avg) = zoh(r.a(), &DMatrix::identity(n, n), dt);
    let row0 = r.c() * avg * T::from_re(1.0 / dt.sqrt());
    let mut matrix = DMatrix::zeros(h.n_steps() * p, n);
    let mut block = row0;
    for k in 0..h.n_steps() {
        if k > 0 {
            block = &block * &e;
        }
        matrix.view_mut((k * p, 0), (p, n)).copy_from(&block);
    }
    Ok(ObservationOperatorMatrix { matrix, t0, grid: h })
}

#[derive(Clone, Debug, Serialize)]
pub struct GramianReport {
    #[serde(skip)]
    pub gramian: DMatrix<f64>,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Exactly controllable / observable at `t0`.
    pub exact: bool,
    /// Radius of surjectivity (controllability) or observability constant.
    pub radius: f64,
    pub t0: f64,
}

fn report<T: Scalar>(op: &DMatrix<T>, gram: DMatrix<T>, t0: f64, surjective: bool) -> GramianReport {
    let s = singular_values(op);
    let n = if surjective { op.nrows() } else { op.ncols() };
    let sigma_max = s.first().copied().unwrap_or(0.0);
    // Fewer singular values than the state dimension means a nontrivial defect.
    let sigma_min = if s.len() < n { 0.0 } else { s.last().copied().unwrap_or(0.0) };
    GramianReport {
        gramian: gram.map(|x| x.to_c64().re),
        sigma_min,
        sigma_max,
        exact: sigma_min > EXACT_REL * sigma_max,
        radius: sigma_min,
        t0,
    }
}

/// Controllability Gramian `M M*` and the radius of surjectivity of `Phi(t0)`.
pub fn controllability<T: Scalar>(r: &Realization<T>, g: &TimeGrid, t0: f64) -> Result<GramianReport> {
    let op = control_operator(r, g, t0)?;
    let gram = &op.matrix * op.matrix.adjoint();
    Ok(report(&op.matrix, gram, t0, true))
}

/// Observability Gramian `Psi* Psi` and the constant `k` in `|Psi x| >= k |x|`.
pub fn observability<T: Scalar>(r: &Realization<T>, g: &TimeGrid, t0: f64) -> Result<GramianReport> {
    let op = observation_operator(r, g, t0)?;
    let gram = op.matrix.adjoint() * &op.matrix;
    Ok(report(&op.matrix, gram, t0, false))
}

/// `k` with `|Psi(t0) x| >= k |x|`.
pub fn observability_constant<T: Scalar>(r: &Realization<T>, g: &TimeGrid, t0: f64) -> Result<f64> {
    Ok(observability(r, g, t0)?.sigma_min)
}

/// Least-L2-norm piecewise-constant `u` with `Phi(t0) u = x_target`.
///
/// The returned signal lives on `[0, t0]`; its last sample repeats the last
/// held value and carries no weight.
pub fn min_norm_control<T: Scalar>(
    r: &Realization<T>,
    g: &TimeGrid,
    t0: f64,
    x_target: &DVector<T>,
) -> Result<Signal<T>> {
    if x_target.len() != r.n() {
        return Err(Error::dim("target state", r.n(), x_target.len()));
    }
    let op = control_operator(r, g, t0)?;
    let rep = controllability(r, g, t0)?;
    if !rep.exact {
        return Err(Error::NotControllable {
            t0,
            sigma_min: rep.sigma_min,
        });
    }
    // Pseudo-inverse through the SVD; the Gramian route squares the condition number.
    let rhs = DMatrix::from_column_slice(x_target.len(), 1, x_target.as_slice());
    let cutoff = EXACT_REL * rep.sigma_max;
    let coeffs = op.matrix.clone().svd(true, true).solve(&rhs, cutoff).map_err(|_| Error::NotControllable {
        t0,
        sigma_min: rep.sigma_min,
    })?;
    let scale = T::from_re(1.0 / op.grid.dt().sqrt());
    let dim = r.m();
    let steps = op.grid.n_steps();
    let mut values: Vec<DVector<T>> = (0..steps)
        .map(|k| DVector::from_iterator(dim, coeffs.view((k * dim, 0), (dim, 1)).iter().map(|&c| c * scale)))
        .collect();
    values.push(values[steps - 1].clone());
    Signal::new(op.grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::input_map;

    fn integrator() -> Realization {
        Realization::strictly_proper(
            DMatrix::zeros(1, 1),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn integrator_gramian_is_identity() {
        let g = TimeGrid::new(1.0, 20).unwrap();
        let rep = controllability(&integrator(), &g, 1.0).unwrap();
        assert!((rep.gramian[(0, 0)] - 1.0).abs() < 1e-13);
        assert!(rep.exact);
        let obs = observability(&integrator(), &g, 1.0).unwrap();
        assert!((obs.sigma_min - 1.0).abs() < 1e-13);
    }

    #[test]
    fn zero_channels() {
        let r = Realization::strictly_proper(DMatrix::from_element(1, 1, -1.0), DMatrix::zeros(1, 1), DMatrix::zeros(1, 1)).unwrap();
        let g = TimeGrid::new(1.0, 10).unwrap();
        assert_eq!(control_operator(&r, &g, 1.0).unwrap().matrix.norm(), 0.0);
        let obs = observability(&r, &g, 1.0).unwrap();
        assert_eq!(obs.sigma_min, 0.0);
        assert!(!obs.exact);
    }

    #[test]
    fn off_grid_horizon_refused() {
        let g = TimeGrid::new(1.0, 10).unwrap();
        assert!(matches!(control_operator(&integrator(), &g, 0.55), Err(Error::OffGrid { .. })));
    }

    #[test]
    fn min_norm_control_of_integrator_is_constant() {
        let g = TimeGrid::new(1.0, 16).unwrap();
        let u = min_norm_control(&integrator(), &g, 1.0, &DVector::from_element(1, 1.0)).unwrap();
        assert!(u.values().iter().all(|v| (v[0] - 1.0).abs() < 1e-12));
        let zero = min_norm_control(&integrator(), &g, 1.0, &DVector::zeros(1)).unwrap();
        assert!(zero.values().iter().all(|v| v[0] == 0.0));
    }

    #[test]
    fn min_norm_control_reaches_target() {
        let r = Realization::strictly_proper(
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]),
            DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
        )
        .unwrap();
        let g = TimeGrid::new(2.0, 40).unwrap();
        let target = DVector::from_vec(vec![1.0, -0.5]);
        let u = min_norm_control(&r, &g, 2.0, &target).unwrap();
        let x = input_map(&r, &g, &u).unwrap();
        assert!((x.last() - &target).norm() < 1e-10);
    }
}
