use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Scalar;

/// Uniform sampling `t_k = k * dt`, `k = 0..=n_steps`, of `[0, t_end]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_end: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::param("time grid needs at least one step"));
        }
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(Error::param(format!("time grid end must be positive, got {t_end}")));
        }
        Ok(TimeGrid { t_end, n_steps })
    }

    /// Grid with step `dt` and `n_steps` steps.
    pub fn with_step(dt: f64, n_steps: usize) -> Result<Self> {
        Self::new(dt * n_steps as f64, n_steps)
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_steps).map(move |k| self.time(k))
    }

    /// Index of a grid-aligned time.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let dt = self.dt();
        let k = (t / dt).round();
        if !(0.0..=self.n_steps as f64).contains(&k) || (k * dt - t).abs() > 1e-9 * dt.max(t.abs()) {
            return Err(Error::OffGrid { t, dt });
        }
        Ok(k as usize)
    }

    /// Grid with the same step covering the first `n_steps` steps.
    pub fn truncated(&self, n_steps: usize) -> Result<Self> {
        Self::with_step(self.dt(), n_steps)
    }

    /// Trapezoid weights for the `n_steps + 1` samples.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let dt = self.dt();
        let mut w = vec![dt; self.n_steps + 1];
        w[0] = dt / 2.0;
        w[self.n_steps] = dt / 2.0;
        w
    }
}

/// Vector-valued samples on a [`TimeGrid`].
///
/// As an input, sample `k` is held constant on `[t_k, t_{k+1})` (zero-order
/// hold); the final sample only enters through feedthrough at `t_end`.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal<T: Scalar = f64> {
    grid: TimeGrid,
    values: Vec<DVector<T>>,
}

impl<T: Scalar> Signal<T> {
    pub fn new(grid: TimeGrid, values: Vec<DVector<T>>) -> Result<Self> {
        if values.len() != grid.n_steps() + 1 {
            return Err(Error::dim("signal length", grid.n_steps() + 1, values.len()));
        }
        let dim = values[0].len();
        if let Some(bad) = values.iter().find(|v| v.len() != dim) {
            return Err(Error::dim("signal sample dimension", dim, bad.len()));
        }
        if values.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFinite { what: "signal" });
        }
        Ok(Signal { grid, values })
    }

    pub fn zeros(grid: TimeGrid, dim: usize) -> Self {
        Signal {
            grid,
            values: vec![DVector::zeros(dim); grid.n_steps() + 1],
        }
    }

    pub fn constant(grid: TimeGrid, value: DVector<T>) -> Self {
        Signal {
            grid,
            values: vec![value; grid.n_steps() + 1],
        }
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> DVector<T>) -> Result<Self> {
        Self::new(grid, grid.times().map(f).collect())
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[DVector<T>] {
        &self.values
    }

    pub fn at(&self, k: usize) -> &DVector<T> {
        &self.values[k]
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn last(&self) -> &DVector<T> {
        &self.values[self.values.len() - 1]
    }

    /// `u(. + shift * dt)` restricted to the remaining steps.
    pub fn shifted(&self, shift: usize) -> Result<Self> {
        let remaining = self
            .grid
            .n_steps()
            .checked_sub(shift)
            .filter(|&r| r > 0)
            .ok_or_else(|| Error::param("shift leaves no samples"))?;
        Ok(Signal {
            grid: self.grid.truncated(remaining)?,
            values: self.values[shift..].to_vec(),
        })
    }

    /// Samples `0..=n_steps` of the same step.
    pub fn truncated(&self, n_steps: usize) -> Result<Self> {
        if n_steps > self.grid.n_steps() {
            return Err(Error::dim("truncation", self.grid.n_steps(), n_steps));
        }
        Ok(Signal {
            grid: self.grid.truncated(n_steps)?,
            values: self.values[..=n_steps].to_vec(),
        })
    }

    /// Discrete L2 norm with trapezoid weights.
    pub fn l2_norm(&self) -> f64 {
        self.grid
            .trapezoid_weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v.norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    /// L2 norm of the zero-order-hold interpretation (the last sample is not held).
    pub fn held_l2_norm(&self) -> f64 {
        let dt = self.grid.dt();
        self.values[..self.grid.n_steps()]
            .iter()
            .map(|v| dt * v.norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest sample-wise difference, relative to the largest sample.
    pub fn max_rel_deviation(&self, other: &Self) -> f64 {
        let scale = self
            .values
            .iter()
            .chain(&other.values)
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
            / scale
    }

    pub(crate) fn from_parts_unchecked(grid: TimeGrid, values: Vec<DVector<T>>) -> Self {
        Signal { grid, values }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_degenerate() {
        assert!(TimeGrid::new(1.0, 0).is_err());
        assert!(TimeGrid::new(0.0, 4).is_err());
        assert!(TimeGrid::new(f64::NAN, 4).is_err());
    }

    #[test]
    fn index_of_grid_point() {
        let g = TimeGrid::new(2.0, 20).unwrap();
        assert_eq!(g.index_of(0.7).unwrap(), 7);
        assert!(matches!(g.index_of(0.75), Err(Error::OffGrid { .. })));
        assert!(g.index_of(2.5).is_err());
    }

    #[test]
    fn trapezoid_norm_of_constant() {
        let g = TimeGrid::new(4.0, 8).unwrap();
        let s = Signal::constant(g, DVector::from_element(1, 3.0_f64));
        assert!((s.l2_norm() - 6.0).abs() < 1e-14);
        assert!((s.held_l2_norm() - 6.0).abs() < 1e-14);
    }

    #[test]
    fn signal_length_checked() {
        let g = TimeGrid::new(1.0, 4).unwrap();
        assert!(Signal::<f64>::new(g, vec![DVector::zeros(1); 4]).is_err());
        let mixed = vec![
            DVector::zeros(1),
            DVector::zeros(2),
            DVector::zeros(1),
            DVector::zeros(1),
            DVector::zeros(1),
        ];
        assert!(Signal::<f64>::new(g, mixed).is_err());
    }

    #[test]
    fn shift_keeps_step() {
        let g = TimeGrid::new(1.0, 10).unwrap();
        let s = Signal::from_fn(g, |t| DVector::from_element(1, t)).unwrap();
        let sh = s.shifted(4).unwrap();
        assert_eq!(sh.grid().n_steps(), 6);
        assert!((sh.grid().dt() - 0.1).abs() < 1e-15);
        assert!((sh.at(0)[0] - 0.4).abs() < 1e-15);
    }
}
