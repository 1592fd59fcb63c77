use std::io::Write;

use nalgebra::DVector;
use serde::Serialize;

use super::functionals::{energy, multiplier_rho, multiplier_rho1, rho1_rate_terms, rho_rate_terms};
use super::model::{BeamMode, BeamModel, BeamState};
use crate::error::{Error, Result};
use crate::system::{propagate, Discretization, Signal, TimeGrid};

/// Functionals sampled along a beam trajectory.
#[derive(Clone, Debug, Serialize)]
pub struct FunctionalTrace {
    #[serde(skip)]
    pub grid: TimeGrid,
    pub energy: Vec<f64>,
    pub rho: Vec<f64>,
    pub rho1: Vec<f64>,
    /// `w_x(1, t)`.
    pub slope_tip: Vec<f64>,
    /// `w_xx(0, t)`.
    pub curvature_root: Vec<f64>,
}

impl FunctionalTrace {
    /// CSV with columns `t,F,rho,w_x_1,w_xx_0`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "F", "rho", "w_x_1", "w_xx_0"])?;
        for (k, t) in self.grid.times().enumerate() {
            w.write_record([
                format!("{t:e}"),
                format!("{:e}", self.energy[k]),
                format!("{:e}", self.rho[k]),
                format!("{:e}", self.slope_tip[k]),
                format!("{:e}", self.curvature_root[k]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Trapezoid integral of a sampled series over the grid.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.grid
            .trapezoid_weights()
            .iter()
            .zip(values)
            .map(|(w, v)| w * v)
            .sum()
    }
}

#[derive(Clone, Debug)]
pub struct BeamRun {
    pub states: Vec<BeamState>,
    pub trace: FunctionalTrace,
}

/// Beam realization with its one-step propagator cached for a fixed step.
#[derive(Clone, Debug)]
pub struct BeamSimulator {
    model: BeamModel,
    disc: Discretization,
}

impl BeamSimulator {
    pub fn new(model: &BeamModel, dt: f64) -> Result<Self> {
        if let BeamMode::ShearFeedback { gain } = model.mode() {
            if gain < 0.0 {
                return Err(Error::param(format!(
                    "feedback gain {gain} feeds energy into the beam (unstable); use a gain >= 0"
                )));
            }
        }
        let r = model.realization()?;
        Ok(BeamSimulator { model: model.clone(), disc: Discretization::new(&r, dt)? })
    }

    pub fn model(&self) -> &BeamModel {
        &self.model
    }

    /// `u = None` runs without input; otherwise the shear is held on each step.
    pub fn run(&self, grid: &TimeGrid, init: &BeamState, u: Option<&Signal<f64>>) -> Result<BeamRun> {
        if (grid.dt() - self.disc.dt).abs() > 1e-12 * self.disc.dt {
            return Err(Error::param(format!("grid step {} differs from simulator step {}", grid.dt(), self.disc.dt)));
        }
        let model = &self.model;
        let zero;
        let u = match u {
            Some(u) => {
                if u.dim() != 1 || u.len() != grid.n_steps() + 1 {
                    return Err(Error::dim(
                        "shear input",
                        format!("1 x {}", grid.n_steps() + 1),
                        format!("{} x {}", u.dim(), u.len()),
                    ));
                }
                u
            }
            None => {
                zero = Signal::zeros(*grid, 1);
                &zero
            }
        };
        let xi0 = model.to_energy(init)?;
        let xs = propagate(&self.disc, &xi0, u);
        let states = xs
            .values()
            .iter()
            .zip(grid.times())
            .map(|(xi, t)| model.from_energy(xi, init.t + t))
            .collect::<Result<Vec<_>>>()?;
        let trace = FunctionalTrace {
            grid: *grid,
            energy: states.iter().map(|s| energy(model, s)).collect(),
            rho: states.iter().map(|s| multiplier_rho(model, s)).collect(),
            rho1: states.iter().map(|s| multiplier_rho1(model, s)).collect(),
            slope_tip: states.iter().map(|s| model.slope_tip(&s.w)).collect(),
            curvature_root: states.iter().map(|s| model.curvature_root(&s.w)).collect(),
        };
        Ok(BeamRun { states, trace })
    }
}

/// Exact-per-step integration (matrix exponential with zero-order hold on the
/// shear input). `u = None` runs without input.
pub fn simulate(model: &BeamModel, grid: &TimeGrid, init: &BeamState, u: Option<&Signal<f64>>) -> Result<BeamRun> {
    BeamSimulator::new(model, grid.dt())?.run(grid, init, u)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DerivativeCheck {
    /// Largest `|central difference - identity right-hand side|`.
    pub max_residual: f64,
    /// Largest sum of absolute right-hand-side terms.
    pub peak: f64,
    pub relative: f64,
}

fn derivative_check(run: &BeamRun, series: &[f64], terms: impl Fn(&BeamState) -> [f64; 3]) -> DerivativeCheck {
    let dt = run.trace.grid.dt();
    let mut max_residual = 0.0f64;
    let mut peak = 0.0f64;
    for k in 1..series.len().saturating_sub(1) {
        let rate = (series[k + 1] - series[k - 1]) / (2.0 * dt);
        let t = terms(&run.states[k]);
        max_residual = max_residual.max((rate - t.iter().sum::<f64>()).abs());
        peak = peak.max(t.iter().map(|x| x.abs()).sum());
    }
    DerivativeCheck {
        max_residual,
        peak,
        relative: if peak > 0.0 { max_residual / peak } else { 0.0 },
    }
}

/// Checks `rho' = -1/2 int (2x-1)(w_t^2 + 3 w_xx^2) - w_x(1)^2` along a homogeneous run.
pub fn rho_derivative_check(model: &BeamModel, run: &BeamRun) -> DerivativeCheck {
    derivative_check(run, &run.trace.rho, |s| rho_rate_terms(model, s))
}

/// Checks `rho1' = 1/2 w_xx(0)^2 - 1/2 int (w_t^2 + 3 w_xx^2)` along a homogeneous run.
pub fn rho1_derivative_check(model: &BeamModel, run: &BeamRun) -> DerivativeCheck {
    derivative_check(run, &run.trace.rho1, |s| rho1_rate_terms(model, s))
}

/// Amplitude of mode `phi` (mass inner product) in each state.
pub fn modal_amplitude(model: &BeamModel, phi: &DVector<f64>, run: &BeamRun) -> Vec<f64> {
    let mphi = phi.component_mul(model.mass_weights());
    run.states.iter().map(|s| s.w.dot(&mphi)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam::functionals::modal_state;

    #[test]
    fn zero_data_stays_zero() {
        let m = BeamModel::new(10, BeamMode::Homogeneous).unwrap();
        let g = TimeGrid::new(0.1, 10).unwrap();
        let run = simulate(&m, &g, &BeamState::zeros(m.nodes()), None).unwrap();
        assert!(run.trace.energy.iter().all(|&e| e == 0.0));
        let c = rho_derivative_check(&m, &run);
        assert_eq!(c.max_residual, 0.0);
    }

    #[test]
    fn eigenmode_oscillates_at_its_frequency() {
        let m = BeamModel::new(40, BeamMode::Homogeneous).unwrap();
        let modes = m.modes(2);
        let (omega, phi) = &modes[1];
        let g = TimeGrid::new(1.0, 500).unwrap();
        let init = modal_state(&modes, &[0.0, 1.0], &[0.0, 0.0]);
        let run = simulate(&m, &g, &init, None).unwrap();
        let amp = modal_amplitude(&m, phi, &run);
        for (k, t) in g.times().enumerate() {
            assert!((amp[k] - (omega * t).cos()).abs() < 1e-6);
        }
        let f0 = run.trace.energy[0];
        assert!(run.trace.energy.iter().all(|f| (f - f0).abs() <= 1e-8 * f0));
    }

    #[test]
    fn negative_gain_refused() {
        let m = BeamModel::new(10, BeamMode::ShearFeedback { gain: -1.0 }).unwrap();
        let g = TimeGrid::new(0.1, 10).unwrap();
        assert!(simulate(&m, &g, &BeamState::zeros(m.nodes()), None).is_err());
    }

    #[test]
    fn csv_layout() {
        let m = BeamModel::new(10, BeamMode::Homogeneous).unwrap();
        let g = TimeGrid::new(0.1, 4).unwrap();
        let modes = m.modes(1);
        let run = simulate(&m, &g, &modal_state(&modes, &[1.0], &[0.0]), None).unwrap();
        let mut buf = Vec::new();
        run.trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,F,rho,w_x_1,w_xx_0\n"));
        assert_eq!(text.lines().count(), 6);
    }
}
