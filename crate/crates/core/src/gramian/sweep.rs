use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::operators::{control_operator, controllability, observability, observation_operator, EXACT_REL};
use crate::error::{Error, Result};
use crate::feedback::{across_k0, cross_theta0, scaled_across, scaled_cross};
use crate::linalg::{singular_values, Scalar};
use crate::system::{Realization, TimeGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    /// Controllability of the closed loop with extra input `dB`.
    Across,
    /// Observability of the closed loop with extra output `dC`.
    Cross,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub k: f64,
    /// Controllability radius or observability constant at gain `k`.
    pub sigma_min: f64,
    /// `k0` or `theta0`.
    pub bound: f64,
    /// `k < bound`.
    pub within_bound: bool,
    /// Exactness retained (across) or constant `>= alpha0` (cross).
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub mode: SweepMode,
    #[serde(skip)]
    pub rows: Vec<SweepRow>,
    /// `k0` or `theta0`.
    pub k0: f64,
    /// Radius or constant of the unperturbed pair.
    pub base: f64,
    /// `alpha0` in cross mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha0: Option<f64>,
    /// Smallest sampled gain at which the property fails.
    pub k_star: Option<f64>,
    /// `k_star / k0`.
    pub margin: Option<f64>,
    /// Every gain below the bound kept the property.
    pub guaranteed_region_holds: bool,
}

/// `count` log-spaced gains `upper * 10^{-3 (1 - i/count)}`. With `inclusive`
/// the top point is `upper`, otherwise all points stay strictly below it.
pub fn log_grid(upper: f64, count: usize, inclusive: bool) -> Vec<f64> {
    let range = if inclusive { 1..=count } else { 0..=count - 1 };
    range
        .map(|i| upper * 10f64.powf(-3.0 * (1.0 - i as f64 / count as f64)))
        .collect()
}

/// Finite stand-in for an infinite radius when laying out a gain grid.
fn grid_upper(bound: f64) -> f64 {
    if bound.is_finite() {
        bound
    } else {
        1e3
    }
}

/// Gains used for the design sweep: 32 points in `(0, 2 bound]`.
pub fn design_grid(bound: f64) -> Vec<f64> {
    log_grid(2.0 * grid_upper(bound), 32, true)
}

/// Gains used for acceptance: 32 points in `(0, bound)`.
pub fn guaranteed_grid(bound: f64) -> Vec<f64> {
    log_grid(grid_upper(bound), 32, false)
}

/// Recomputes the closed-loop radius/constant for each gain `k I` and compares
/// it with the explicit bound. `k_grid = None` uses [`design_grid`].
pub fn robustness_sweep<T: Scalar>(
    main: &Realization<T>,
    pert: &Realization<T>,
    g: &TimeGrid,
    mode: SweepMode,
    k_grid: Option<&[f64]>,
) -> Result<SweepReport> {
    let t0 = g.t_end();
    let (bound, base, alpha0) = match mode {
        SweepMode::Across => {
            let base = controllability(pert, g, t0)?;
            if !base.exact {
                return Err(Error::NotControllable { t0, sigma_min: base.sigma_min });
            }
            let k0 = across_k0(main, pert, g)?.ok_or(Error::NotControllable { t0, sigma_min: base.sigma_min })?;
            (k0, base.sigma_min, None)
        }
        SweepMode::Cross => {
            let base = observability(pert, g, t0)?;
            if !base.exact {
                return Err(Error::NotObservable { t0, constant: base.sigma_min });
            }
            let (theta0, _, alpha0) =
                cross_theta0(main, pert, g)?.ok_or(Error::NotObservable { t0, constant: base.sigma_min })?;
            (theta0, base.sigma_min, Some(alpha0))
        }
    };
    let default_grid;
    let ks = match k_grid {
        Some(ks) => ks,
        None => {
            default_grid = design_grid(bound);
            &default_grid
        }
    };

    let rows: Vec<SweepRow> = ks
        .par_iter()
        .map(|&k| -> Result<SweepRow> {
            let (value, holds) = match mode {
                SweepMode::Across => {
                    let cl = scaled_across(main, pert, k)?;
                    let s = singular_values(&control_operator(&cl, g, t0)?.matrix);
                    let smin = if s.len() < cl.n() { 0.0 } else { s[s.len() - 1] };
                    (smin, smin > EXACT_REL * s[0])
                }
                SweepMode::Cross => {
                    let cl = scaled_cross(main, pert, k)?;
                    let s = singular_values(&observation_operator(&cl, g, t0)?.matrix);
                    let smin = if s.len() < cl.n() { 0.0 } else { s[s.len() - 1] };
                    (smin, smin >= alpha0.unwrap_or(0.0))
                }
            };
            Ok(SweepRow {
                k,
                sigma_min: value,
                bound,
                within_bound: k < bound,
                holds,
            })
        })
        .collect::<Result<_>>()?;

    let k_star = rows.iter().filter(|r| !r.holds).map(|r| r.k).reduce(f64::min);
    Ok(SweepReport {
        mode,
        k0: bound,
        base,
        alpha0,
        k_star,
        margin: k_star.map(|k| k / bound),
        guaranteed_region_holds: rows.iter().filter(|r| r.within_bound).all(|r| r.holds),
        rows,
    })
}

impl SweepReport {
    /// CSV with columns `k,sigma_min,bound,within_bound`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "sigma_min", "bound", "within_bound"])?;
        for r in &self.rows {
            w.write_record([
                format!("{:e}", r.k),
                format!("{:e}", r.sigma_min),
                format!("{:e}", r.bound),
                r.within_bound.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// JSON summary `{k0, k_star, margin}`.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({ "k0": self.k0, "k_star": self.k_star, "margin": self.margin })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_respect_their_upper_end() {
        let g = log_grid(2.0, 32, false);
        assert_eq!(g.len(), 32);
        assert!(g.iter().all(|&k| k > 0.0 && k < 2.0));
        assert!((g[0] - 2e-3).abs() < 1e-15);
        let d = design_grid(1.0);
        assert_eq!(d.len(), 32);
        assert!((d[31] - 2.0).abs() < 1e-14);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
