use nalgebra::DMatrix;
use serde::Serialize;

use super::triple::{dirichlet_map_all, restrict_generator, BoundaryTriple};
use crate::error::{Error, Result};

/// Which trace carries the input while the other one is held at zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InputTrace {
    G,
    G2,
}

/// Geometric shift sweep `lambda_j = lambda0 * 2^j`, `j = 0..=doublings`,
/// extrapolated in `lambda^{-1/2}`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ShiftSweep {
    /// `None`: spectral abscissa of the restricted generator plus 10.
    pub lambda0: Option<f64>,
    pub doublings: usize,
    /// Number of leading error terms `lambda^{-j/2}` removed.
    pub depth: usize,
}

impl Default for ShiftSweep {
    fn default() -> Self {
        ShiftSweep { lambda0: None, doublings: 10, depth: 2 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FeedthroughEstimate {
    /// Extrapolated `lim K D_lambda`.
    #[serde(serialize_with = "crate::boundary::ser_matrix")]
    pub k_bar: DMatrix<f64>,
    pub lambdas: Vec<f64>,
    /// Raw `K D_lambda` along the sweep.
    #[serde(skip)]
    pub samples: Vec<DMatrix<f64>>,
    /// Frobenius distance between consecutive extrapolated values.
    pub residuals: Vec<f64>,
    pub final_residual: f64,
    pub converged: bool,
}

impl FeedthroughEstimate {
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NonConvergent { residual: self.final_residual })
        }
    }
}

/// Sweep values of `out * D_lambda` restricted to one trace's inputs.
pub fn channel_samples(
    bt: &BoundaryTriple,
    out: &DMatrix<f64>,
    input: InputTrace,
    lambdas: &[f64],
) -> Result<Vec<DMatrix<f64>>> {
    let (start, width) = match input {
        InputTrace::G => (0, bt.b1()),
        InputTrace::G2 => (bt.b1(), bt.b2()),
    };
    lambdas
        .iter()
        .map(|&l| {
            let d = dirichlet_map_all(bt, l)?;
            Ok(out * d.matrix.columns(start, width))
        })
        .collect()
}

/// Estimate of the feedthrough `lim_{lambda -> inf} out * D_lambda` for a
/// general output trace and input channel.
pub fn channel_feedthrough(
    bt: &BoundaryTriple,
    out: &DMatrix<f64>,
    input: InputTrace,
    sweep: ShiftSweep,
) -> Result<FeedthroughEstimate> {
    if out.ncols() != bt.ext_dim() {
        return Err(Error::dim("output trace", format!("{} columns", bt.ext_dim()), out.ncols()));
    }
    if sweep.doublings < sweep.depth + 2 {
        return Err(Error::param("sweep needs at least depth + 2 doublings"));
    }
    let lambda0 = match sweep.lambda0 {
        Some(l) => l,
        None => restrict_generator(bt)?.spectral_abscissa.max(0.0) + 10.0,
    };
    let lambdas: Vec<f64> = (0..=sweep.doublings).map(|j| lambda0 * 2f64.powi(j as i32)).collect();
    let samples = channel_samples(bt, out, input, &lambdas)?;

    // Nodes x_j = lambda_j^{-1/2} shrink by sqrt(2) per step.
    let ratio = std::f64::consts::SQRT_2;
    let mut column = samples.clone();
    for level in 1..=sweep.depth {
        let r = ratio.powi(level as i32);
        column = column
            .windows(2)
            .map(|w| (&w[1] * r - &w[0]) / (r - 1.0))
            .collect();
    }
    let residuals: Vec<f64> = column.windows(2).map(|w| (&w[1] - &w[0]).norm()).collect();
    let k_bar = column.last().cloned().unwrap_or_else(|| out * 0.0);
    let final_residual = *residuals.last().unwrap_or(&0.0);
    let min_residual = residuals.iter().copied().fold(f64::INFINITY, f64::min);
    let converged = final_residual < 1e-4 * (1.0 + k_bar.norm()) && final_residual <= 10.0 * min_residual;
    Ok(FeedthroughEstimate {
        k_bar,
        lambdas,
        samples,
        residuals,
        final_residual,
        converged,
    })
}

/// `lim K D_lambda` for the triple's own output `K` and input through `G`.
pub fn feedthrough_estimate(bt: &BoundaryTriple, sweep: ShiftSweep) -> Result<FeedthroughEstimate> {
    channel_feedthrough(bt, bt.k(), InputTrace::G, sweep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::standins::{laplacian_dirichlet, laplacian_neumann_left};

    #[test]
    fn trace_output_has_identity_feedthrough() {
        let bt = laplacian_dirichlet(40).unwrap();
        let bt = bt.clone().with_k(bt.g().clone()).unwrap();
        let est = feedthrough_estimate(&bt, ShiftSweep::default()).unwrap();
        assert!((est.k_bar[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(est.converged);
    }

    #[test]
    fn far_end_value_decays() {
        let bt = laplacian_neumann_left(60).unwrap();
        let est = feedthrough_estimate(&bt, ShiftSweep::default()).unwrap();
        assert!(est.k_bar[(0, 0)].abs() < 1e-10, "{}", est.k_bar);
        assert!(est.converged);
        // Leading sample behaves like 1 / cosh(sqrt(lambda)).
        let l0 = est.lambdas[0];
        let expect = 1.0 / l0.sqrt().cosh();
        assert!((est.samples[0][(0, 0)] - expect).abs() < 0.05 * expect);
    }

    #[test]
    fn sweep_too_short_refused() {
        let bt = laplacian_dirichlet(10).unwrap();
        let s = ShiftSweep { lambda0: Some(1.0), doublings: 2, depth: 2 };
        assert!(feedthrough_estimate(&bt, s).is_err());
    }
}
