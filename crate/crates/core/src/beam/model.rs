use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryTriple;
use crate::error::{Error, Result};
use crate::system::Realization;

/// Boundary configuration at the free end `x = 1`; the end `x = 0` is always clamped.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum BeamMode {
    /// `w_xxx(1) = u`.
    ShearInput,
    /// `w_xxx(1) = k w_t(1) + u`.
    ShearFeedback { gain: f64 },
    /// `w_xxx(1) = 0`.
    Homogeneous,
}

/// Boundary traces exposed as outputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BeamTrace {
    /// `w_x(1)`.
    SlopeTip,
    /// `w_xx(0)`.
    CurvatureRoot,
    /// `w_t(1)`.
    VelocityTip,
}

impl BeamTrace {
    pub const ALL: [BeamTrace; 3] = [BeamTrace::SlopeTip, BeamTrace::CurvatureRoot, BeamTrace::VelocityTip];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Displacement and velocity at nodes `x_1, ..., x_{N+1} = 1` (`w(0) = 0` is implicit).
#[derive(Clone, Debug, PartialEq)]
pub struct BeamState {
    pub w: DVector<f64>,
    pub v: DVector<f64>,
    pub t: f64,
}

impl BeamState {
    pub fn zeros(nodes: usize) -> Self {
        BeamState { w: DVector::zeros(nodes), v: DVector::zeros(nodes), t: 0.0 }
    }
}

/// Finite-difference Euler-Bernoulli beam `w_tt + w_xxxx = 0` on `(0, 1)`,
/// clamped at 0 (`w = w_x = 0`), `w_xx(1) = 0` and shear `w_xxx(1)` at the tip.
///
/// Unknowns are the `N` interior nodes plus the tip node, `h = 1/(N+1)`.
/// Curvature `kappa_i` lives on nodes `0..=N` with the ghost value
/// `w_{-1} = w_1` from `w_x(0) = 0`, and `kappa_{N+1} = 0`. The semi-discrete
/// system is `M w'' = -D2^T H D2 w - e_tip u` with trapezoid weights `M`, `H`,
/// so that `F = (v^T M v + kappa^T H kappa) / 2` is conserved when `u = 0`.
///
/// The realization is expressed in energy coordinates
/// `xi = (H^{1/2} kappa, M^{1/2} v)`, where `F = |xi|^2 / 2` and the generator
/// is skew-symmetric.
#[derive(Clone, Debug)]
pub struct BeamModel {
    n: usize,
    h: f64,
    mode: BeamMode,
    hk: DVector<f64>,
    mass: DVector<f64>,
    /// `H^{1/2} D2`, lower triangular.
    r: DMatrix<f64>,
}

impl BeamModel {
    pub const MIN_INTERIOR: usize = 8;

    pub fn new(n: usize, mode: BeamMode) -> Result<Self> {
        if n < Self::MIN_INTERIOR {
            return Err(Error::param(format!(
                "beam needs at least {} interior nodes, got {n}",
                Self::MIN_INTERIOR
            )));
        }
        if let BeamMode::ShearFeedback { gain } = mode {
            if !gain.is_finite() {
                return Err(Error::param("feedback gain must be finite"));
            }
        }
        let nodes = n + 1;
        let h = 1.0 / nodes as f64;
        let h2 = h * h;
        let mut d2 = DMatrix::zeros(nodes, nodes);
        d2[(0, 0)] = 2.0 / h2;
        for i in 1..nodes {
            if i >= 2 {
                d2[(i, i - 2)] = 1.0 / h2;
            }
            d2[(i, i - 1)] = -2.0 / h2;
            d2[(i, i)] = 1.0 / h2;
        }
        let mut hk = DVector::from_element(nodes, h);
        hk[0] = 0.5 * h;
        let mut mass = DVector::from_element(nodes, h);
        mass[nodes - 1] = 0.5 * h;
        let mut r = d2;
        for i in 0..nodes {
            r.row_mut(i).scale_mut(hk[i].sqrt());
        }
        Ok(BeamModel { n, h, mode, hk, mass, r })
    }

    pub fn interior_nodes(&self) -> usize {
        self.n
    }

    /// Unknown nodes per field (`N + 1`).
    pub fn nodes(&self) -> usize {
        self.n + 1
    }

    pub fn dx(&self) -> f64 {
        self.h
    }

    pub fn mode(&self) -> BeamMode {
        self.mode
    }

    pub fn with_mode(&self, mode: BeamMode) -> Result<Self> {
        Self::new(self.n, mode)
    }

    /// Node positions `x_1..x_{N+1}`.
    pub fn positions(&self) -> DVector<f64> {
        DVector::from_fn(self.nodes(), |i, _| (i + 1) as f64 * self.h)
    }

    pub fn mass_weights(&self) -> &DVector<f64> {
        &self.mass
    }

    pub fn curvature_weights(&self) -> &DVector<f64> {
        &self.hk
    }

    /// `kappa_0..kappa_N` from `w` (banded product).
    pub fn curvature(&self, w: &DVector<f64>) -> DVector<f64> {
        let h2 = self.h * self.h;
        DVector::from_fn(self.nodes(), |i, _| {
            let prev = if i >= 2 { w[i - 2] } else { 0.0 };
            if i == 0 {
                2.0 * w[0] / h2
            } else {
                (prev - 2.0 * w[i - 1] + w[i]) / h2
            }
        })
    }

    /// `D2^T H D2`.
    pub fn stiffness(&self) -> DMatrix<f64> {
        self.r.transpose() * &self.r
    }

    /// Trace functional on `(w, v)`, as a row over `[w; v]`.
    pub fn trace_row(&self, trace: BeamTrace) -> DMatrix<f64> {
        let nodes = self.nodes();
        let mut row = DMatrix::zeros(1, 2 * nodes);
        match trace {
            BeamTrace::SlopeTip => {
                let s = 1.0 / (2.0 * self.h);
                row[(0, nodes - 1)] = 3.0 * s;
                row[(0, nodes - 2)] = -4.0 * s;
                row[(0, nodes - 3)] = s;
            }
            BeamTrace::CurvatureRoot => row[(0, 0)] = 2.0 / (self.h * self.h),
            BeamTrace::VelocityTip => row[(0, 2 * nodes - 1)] = 1.0,
        }
        row
    }

    /// `w_x(1)` with the one-sided second-order stencil.
    pub fn slope_tip(&self, w: &DVector<f64>) -> f64 {
        let m = self.nodes();
        (3.0 * w[m - 1] - 4.0 * w[m - 2] + w[m - 3]) / (2.0 * self.h)
    }

    /// `w_xx(0) = 2 w_1 / h^2`.
    pub fn curvature_root(&self, w: &DVector<f64>) -> f64 {
        2.0 * w[0] / (self.h * self.h)
    }

    /// `xi = (H^{1/2} D2 w, M^{1/2} v)`.
    pub fn to_energy(&self, s: &BeamState) -> Result<DVector<f64>> {
        let m = self.nodes();
        if s.w.len() != m || s.v.len() != m {
            return Err(Error::dim("beam state", m, s.w.len().max(s.v.len())));
        }
        let mut xi = DVector::zeros(2 * m);
        xi.rows_mut(0, m).copy_from(&(&self.r * &s.w));
        xi.rows_mut(m, m).copy_from(&s.v.component_mul(&self.mass.map(f64::sqrt)));
        Ok(xi)
    }

    pub fn from_energy(&self, xi: &DVector<f64>, t: f64) -> Result<BeamState> {
        let m = self.nodes();
        if xi.len() != 2 * m {
            return Err(Error::dim("energy coordinates", 2 * m, xi.len()));
        }
        // Forward substitution through the three bands of H^{1/2} D2.
        let mut w = DVector::zeros(m);
        for i in 0..m {
            let mut acc = xi[i];
            if i >= 1 {
                acc -= self.r[(i, i - 1)] * w[i - 1];
            }
            if i >= 2 {
                acc -= self.r[(i, i - 2)] * w[i - 2];
            }
            w[i] = acc / self.r[(i, i)];
        }
        let v = xi.rows(m, m).component_div(&self.mass.map(f64::sqrt));
        Ok(BeamState { w, v, t })
    }

    /// Realization in energy coordinates with input shear `w_xxx(1)` and
    /// outputs `[w_x(1), w_xx(0), w_t(1)]` (order of [`BeamTrace::ALL`]).
    /// In feedback mode the loop `u -> u + k w_t(1)` is closed in `A`.
    pub fn realization(&self) -> Result<Realization> {
        let m = self.nodes();
        let inv_sqrt_mass = self.mass.map(|x| 1.0 / x.sqrt());
        let mut s = self.r.clone();
        for j in 0..m {
            s.column_mut(j).scale_mut(inv_sqrt_mass[j]);
        }
        let mut a = DMatrix::zeros(2 * m, 2 * m);
        a.view_mut((0, m), (m, m)).copy_from(&s);
        a.view_mut((m, 0), (m, m)).copy_from(&(-s.transpose()));
        let mut b = DMatrix::zeros(2 * m, 1);
        b[(2 * m - 1, 0)] = -inv_sqrt_mass[m - 1];

        // Outputs in (w, v) coordinates, mapped through w = R^{-1} xi_1, v = M^{-1/2} xi_2.
        let rinv = self
            .r
            .clone()
            .solve_lower_triangular(&DMatrix::identity(m, m))
            .ok_or(Error::RankDeficient { what: "curvature map" })?;
        let mut to_wv = DMatrix::zeros(2 * m, 2 * m);
        to_wv.view_mut((0, 0), (m, m)).copy_from(&rinv);
        for j in 0..m {
            to_wv[(m + j, m + j)] = inv_sqrt_mass[j];
        }
        let mut c = DMatrix::zeros(3, 2 * m);
        for tr in BeamTrace::ALL {
            c.row_mut(tr.index()).copy_from(&(self.trace_row(tr) * &to_wv).row(0));
        }
        if let BeamMode::ShearFeedback { gain } = self.mode {
            a += &b * c.row(BeamTrace::VelocityTip.index()) * gain;
        }
        Realization::new(a, b, c, DMatrix::zeros(3, 1))
    }

    /// Boundary triple over `z = (w, v, shear)`: `G` reads the shear value,
    /// `K` the requested trace. In feedback mode, `G z = k w_t(1) + u`.
    pub fn triple(&self, output: BeamTrace) -> Result<BoundaryTriple> {
        let m = self.nodes();
        let ext = 2 * m + 1;
        let stiff = self.stiffness();
        let mut l = DMatrix::zeros(2 * m, ext);
        for i in 0..m {
            l[(i, m + i)] = 1.0;
            for j in 0..m {
                l[(m + i, j)] = -stiff[(i, j)] / self.mass[i];
            }
        }
        l[(2 * m - 1, 2 * m)] = -1.0 / self.mass[m - 1];
        let mut g = DMatrix::zeros(1, ext);
        g[(0, 2 * m)] = 1.0;
        let mut k = DMatrix::zeros(1, ext);
        k.view_mut((0, 0), (1, 2 * m)).copy_from(&self.trace_row(output));
        let bt = BoundaryTriple::new(l, g, k)?;
        match self.mode {
            BeamMode::ShearFeedback { gain } => bt.with_feedback(&(self.extended_trace(BeamTrace::VelocityTip) * gain)),
            _ => Ok(bt),
        }
    }

    /// Trace row padded to the extended coordinates of [`BeamModel::triple`].
    pub fn extended_trace(&self, trace: BeamTrace) -> DMatrix<f64> {
        let m = self.nodes();
        let mut k = DMatrix::zeros(1, 2 * m + 1);
        k.view_mut((0, 0), (1, 2 * m)).copy_from(&self.trace_row(trace));
        k
    }

    /// Lowest `count` modes `(omega, phi)` with `phi^T M phi = 1`, `phi(0)` clamped.
    pub fn modes(&self, count: usize) -> Vec<(f64, DVector<f64>)> {
        let m = self.nodes();
        let inv_sqrt_mass = self.mass.map(|x| 1.0 / x.sqrt());
        let mut s = self.r.clone();
        for j in 0..m {
            s.column_mut(j).scale_mut(inv_sqrt_mass[j]);
        }
        let eig = (s.transpose() * s).symmetric_eigen();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        order
            .into_iter()
            .take(count)
            .map(|j| {
                let mut phi = eig.eigenvectors.column(j).component_mul(&inv_sqrt_mass);
                // Fix the sign so the tip deflection is positive.
                if phi[m - 1] < 0.0 {
                    phi = -phi;
                }
                (eig.eigenvalues[j].max(0.0).sqrt(), phi)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::spectral_abscissa;

    #[test]
    fn too_coarse_refused() {
        assert!(BeamModel::new(7, BeamMode::Homogeneous).is_err());
        assert!(BeamModel::new(8, BeamMode::Homogeneous).is_ok());
    }

    #[test]
    fn energy_coordinates_round_trip() {
        let model = BeamModel::new(12, BeamMode::Homogeneous).unwrap();
        let x = model.positions();
        let s = BeamState { w: x.map(|x| x * x), v: x.map(|x| x.sin()), t: 0.0 };
        let back = model.from_energy(&model.to_energy(&s).unwrap(), 0.0).unwrap();
        assert!((back.w - s.w).norm() < 1e-12);
        assert!((back.v - s.v).norm() < 1e-12);
    }

    #[test]
    fn generator_is_skew_and_stiffness_positive() {
        let model = BeamModel::new(10, BeamMode::Homogeneous).unwrap();
        let r = model.realization().unwrap();
        assert!((r.a() + r.a().transpose()).norm() == 0.0);
        let k = model.stiffness();
        assert!((&k - k.transpose()).norm() < 1e-9 * k.norm());
        assert!(k.clone().cholesky().is_some());
    }

    #[test]
    fn first_frequency_near_clamped_free_value() {
        // Continuum: (1.8751041)^2.
        let model = BeamModel::new(200, BeamMode::Homogeneous).unwrap();
        let w1 = model.modes(1)[0].0;
        assert!((w1 - 3.5160153).abs() < 1e-3, "{w1}");
    }

    #[test]
    fn feedback_dissipates() {
        let model = BeamModel::new(16, BeamMode::ShearFeedback { gain: 1.0 }).unwrap();
        let a = model.realization().unwrap().a().clone();
        let sym = &a + a.transpose();
        assert!(sym.symmetric_eigen().eigenvalues.max() <= 1e-12);
        assert!(spectral_abscissa(&a) < 0.0);
    }

    #[test]
    fn triple_matches_realization_spectrum() {
        let model = BeamModel::new(10, BeamMode::Homogeneous).unwrap();
        let bt = model.triple(BeamTrace::SlopeTip).unwrap();
        let rep = crate::boundary::control_operator_from_triple(&bt, 3.0).unwrap();
        let r = model.realization().unwrap();
        for s in [1.0, 7.0] {
            let t1 = crate::system::transfer(&rep.realization, s.into()).unwrap()[(0, 0)];
            let t2 = crate::system::transfer(&r, s.into()).unwrap()[(0, 0)];
            assert!((t1 - t2).norm() < 1e-9 * t2.norm());
        }
    }
}
