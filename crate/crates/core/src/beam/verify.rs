use nalgebra::DVector;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::functionals::modal_state;
use super::model::{BeamMode, BeamModel, BeamState};
use super::simulate::BeamSimulator;
use crate::error::{Error, Result};
use crate::random::{eval_profile, rng, smooth_profile, Rng};
use crate::system::{Signal, TimeGrid};

/// Shared settings of the randomized beam inequality checks.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TrialConfig {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T")]
    pub t: f64,
    pub trials: usize,
    pub seed: u64,
    pub dt: f64,
    /// Number of lowest modes in the random initial states.
    pub modes: usize,
    /// Relative slack on the continuum inequality.
    pub slack: f64,
}

impl TrialConfig {
    pub fn new(n: usize, t: f64, trials: usize, seed: u64) -> Self {
        TrialConfig { n, t, trials, seed, dt: 1e-3, modes: 6, slack: 0.05 }
    }

    fn grid(&self) -> Result<TimeGrid> {
        if !(self.t.is_finite() && self.t > 0.0) {
            return Err(Error::param("horizon must be positive"));
        }
        let steps = (self.t / self.dt).round().max(1.0) as usize;
        TimeGrid::new(self.t, steps)
    }

    fn trial_rng(&self, trial: usize) -> Rng {
        rng(self.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(trial as u64))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    /// Constant multiplying the reference quantity (`3T+2`, `(1+3T) C`, `T-2`).
    pub bound: f64,
    /// Largest (upper bounds) or smallest (lower bound) measured ratio to the bound.
    pub worst_ratio: f64,
    pub trials: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T")]
    pub t: f64,
    pub slack: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    #[serde(skip)]
    pub ratios: Vec<f64>,
}

/// Random smooth state built from the lowest modes with decaying weights.
pub fn random_modal_state(modes: &[(f64, DVector<f64>)], rng: &mut Rng) -> BeamState {
    let mut draw = |j: usize| -> f64 {
        let g: f64 = StandardNormal.sample(rng);
        g / (j + 1) as f64
    };
    let a: Vec<f64> = (0..modes.len()).map(&mut draw).collect();
    let b: Vec<f64> = (0..modes.len()).map(&mut draw).collect();
    modal_state(modes, &a, &b)
}

/// `C_{delta,T} = (1 + delta + 4T) / (2 (1 - (1 + 4T) delta)) + 1 / (2 delta)`.
pub fn wellposedness_constant(delta: f64, t: f64) -> Result<f64> {
    let upper = 1.0 / (1.0 + 4.0 * t);
    if !(delta > 0.0 && delta < upper) {
        return Err(Error::param(format!("delta must lie in (0, {upper}), got {delta}")));
    }
    Ok((1.0 + delta + 4.0 * t) / (2.0 * (1.0 - (1.0 + 4.0 * t) * delta)) + 1.0 / (2.0 * delta))
}

fn homogeneous(cfg: &TrialConfig) -> Result<(BeamSimulator, Vec<(f64, DVector<f64>)>, TimeGrid)> {
    let model = BeamModel::new(cfg.n, BeamMode::Homogeneous)?;
    let modes = model.modes(cfg.modes);
    let grid = cfg.grid()?;
    Ok((BeamSimulator::new(&model, grid.dt())?, modes, grid))
}

fn worst(ratios: &[f64], upper: bool) -> f64 {
    if upper {
        ratios.iter().copied().fold(0.0, f64::max)
    } else {
        ratios.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `int_0^T w_x(1,t)^2 dt <= (3T + 2) F(0)` for random free motions.
pub fn verify_admissibility_bound(cfg: &TrialConfig) -> Result<BoundReport> {
    let (sim, modes, grid) = homogeneous(cfg)?;
    let bound = 3.0 * cfg.t + 2.0;
    let ratios = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let init = random_modal_state(&modes, &mut cfg.trial_rng(i));
            let run = sim.run(&grid, &init, None)?;
            let lhs = run.trace.integrate(&run.trace.slope_tip.iter().map(|x| x * x).collect::<Vec<_>>());
            Ok(lhs / (bound * run.trace.energy[0]))
        })
        .collect::<Result<Vec<f64>>>()?;
    let worst_ratio = worst(&ratios, true);
    Ok(BoundReport {
        bound,
        worst_ratio,
        trials: cfg.trials,
        n: cfg.n,
        t: cfg.t,
        slack: cfg.slack,
        passed: worst_ratio <= 1.0 + cfg.slack,
        constant: None,
        ratios,
    })
}

/// `int_0^T w_x(1,t)^2 dt <= (1 + 3T) C_{delta,T} int_0^T u^2 dt` from rest under random shear inputs.
pub fn verify_wellposedness_bound(cfg: &TrialConfig, delta: f64) -> Result<BoundReport> {
    let c = wellposedness_constant(delta, cfg.t)?;
    let model = BeamModel::new(cfg.n, BeamMode::ShearInput)?;
    let grid = cfg.grid()?;
    let sim = BeamSimulator::new(&model, grid.dt())?;
    let bound = (1.0 + 3.0 * cfg.t) * c;
    let ratios = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let profile = smooth_profile(&mut cfg.trial_rng(i), 4);
            let u = Signal::from_fn(grid, |t| DVector::from_element(1, eval_profile(&profile, t)))?;
            let run = sim.run(&grid, &BeamState::zeros(model.nodes()), Some(&u))?;
            let lhs = run.trace.integrate(&run.trace.slope_tip.iter().map(|x| x * x).collect::<Vec<_>>());
            let input = u.held_l2_norm().powi(2);
            Ok(if input > 0.0 { lhs / (bound * input) } else { 0.0 })
        })
        .collect::<Result<Vec<f64>>>()?;
    let worst_ratio = worst(&ratios, true);
    Ok(BoundReport {
        bound,
        worst_ratio,
        trials: cfg.trials,
        n: cfg.n,
        t: cfg.t,
        slack: cfg.slack,
        passed: worst_ratio <= 1.0 + cfg.slack,
        constant: Some(c),
        ratios,
    })
}

/// `int_0^T w_xx(0,t)^2 dt >= (T - 2) F(0)` for random free motions, `T > 2`.
pub fn verify_observability(cfg: &TrialConfig) -> Result<BoundReport> {
    if cfg.t <= 2.0 {
        return Err(Error::param(format!(
            "observability bound (T - 2) F(0) is vacuous for T = {} <= 2",
            cfg.t
        )));
    }
    let (sim, modes, grid) = homogeneous(cfg)?;
    let bound = cfg.t - 2.0;
    let ratios = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let init = random_modal_state(&modes, &mut cfg.trial_rng(i));
            let run = sim.run(&grid, &init, None)?;
            let lhs = run.trace.integrate(&run.trace.curvature_root.iter().map(|x| x * x).collect::<Vec<_>>());
            Ok(lhs / (bound * run.trace.energy[0]))
        })
        .collect::<Result<Vec<f64>>>()?;
    let worst_ratio = worst(&ratios, false);
    Ok(BoundReport {
        bound,
        worst_ratio,
        trials: cfg.trials,
        n: cfg.n,
        t: cfg.t,
        slack: cfg.slack,
        passed: worst_ratio >= 1.0 - cfg.slack,
        constant: None,
        ratios,
    })
}
