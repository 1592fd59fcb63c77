//! Explicit robustness radii for scaled feedback `k I`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `1/x` with `1/0 = +inf`.
fn recip(x: f64) -> f64 {
    if x == 0.0 {
        f64::INFINITY
    } else {
        1.0 / x
    }
}

fn check_norms(values: &[(f64, &str)]) -> Result<()> {
    for &(v, name) in values {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::param(format!("{name} must be a finite nonnegative norm, got {v}")));
        }
    }
    Ok(())
}

/// Norms entering the controllability radius, all at horizon `t0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct K0Inputs {
    pub t0: f64,
    /// `|D|` of the main system.
    pub d: f64,
    /// `|F_{A,B,C,D}(t0)|`.
    pub f: f64,
    /// `|Phi_{A,B}(t0)|`.
    pub phi: f64,
    /// `|F_{A,dB,C,P}(t0)|`.
    pub f_pert: f64,
    /// Radius of surjectivity of `Phi_{A,dB}(t0)`.
    pub s0: f64,
}

/// `k0 = min{1/|D|, 1/|F|, s0 / (|Phi| |F_P| + s0 |F|)}`.
pub fn k0_bound(x: &K0Inputs) -> Result<f64> {
    check_norms(&[(x.d, "|D|"), (x.f, "|F|"), (x.phi, "|Phi|"), (x.f_pert, "|F_P|")])?;
    if !(x.s0 > 0.0) {
        return Err(Error::NotControllable {
            t0: x.t0,
            sigma_min: x.s0,
        });
    }
    let third = x.s0 / (x.phi * x.f_pert + x.s0 * x.f);
    Ok(recip(x.d).min(recip(x.f)).min(third))
}

/// Norms entering the observability radius, all at horizon `t0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theta0Inputs {
    pub t0: f64,
    /// `|D|` of the main system.
    pub d: f64,
    /// `|F_{A,B,C,D}(t0)|`.
    pub f: f64,
    /// `|F_{A,B,dC,P}(t0)|`.
    pub f_pert: f64,
    /// `|Psi_{A,C}(t0)|`.
    pub psi: f64,
    /// Observability constant of `(A, dC)`.
    pub k_obs: f64,
    /// Retained lower bound, `0 < alpha0 < k_obs`.
    pub alpha0: f64,
}

/// `theta0 = min{1/|D|, 1/|F|, (k - a) / ((k - a)|F| + |F_dC| |Psi|)}`.
pub fn theta0_bound(x: &Theta0Inputs) -> Result<f64> {
    check_norms(&[(x.d, "|D|"), (x.f, "|F|"), (x.f_pert, "|F_dC|"), (x.psi, "|Psi|")])?;
    if !(x.k_obs > 0.0) {
        return Err(Error::NotObservable {
            t0: x.t0,
            constant: x.k_obs,
        });
    }
    if !(x.alpha0 > 0.0 && x.alpha0 < x.k_obs) {
        return Err(Error::param(format!(
            "alpha0 = {} must lie in (0, {})",
            x.alpha0, x.k_obs
        )));
    }
    let gap = x.k_obs - x.alpha0;
    let third = gap / (gap * x.f + x.f_pert * x.psi);
    Ok(recip(x.d).min(recip(x.f)).min(third))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k0_arithmetic() {
        let x = K0Inputs {
            t0: 1.0,
            d: 0.0,
            f: 2.0,
            phi: 1.0,
            f_pert: 1.0,
            s0: 1.0,
        };
        assert!((k0_bound(&x).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let collapse = K0Inputs { f_pert: 0.0, ..x };
        assert!((k0_bound(&collapse).unwrap() - 0.5).abs() < 1e-15);
        let bad = K0Inputs { s0: 0.0, ..x };
        assert!(matches!(k0_bound(&bad), Err(Error::NotControllable { .. })));
    }

    #[test]
    fn theta0_arithmetic() {
        let x = Theta0Inputs {
            t0: 1.0,
            d: 0.0,
            f: 1.0,
            f_pert: 1.0,
            psi: 2.0,
            k_obs: 1.0,
            alpha0: 0.5,
        };
        assert!((theta0_bound(&x).unwrap() - 0.2).abs() < 1e-15);
        let collapse = Theta0Inputs { f_pert: 0.0, f: 4.0, ..x };
        assert!((theta0_bound(&collapse).unwrap() - 0.25).abs() < 1e-15);
        assert!(theta0_bound(&Theta0Inputs { alpha0: 1.0, ..x }).is_err());
        assert!(theta0_bound(&Theta0Inputs { alpha0: 0.0, ..x }).is_err());
    }

    #[test]
    fn all_zero_norms_give_infinite_radius() {
        let x = K0Inputs {
            t0: 1.0,
            d: 0.0,
            f: 0.0,
            phi: 1.0,
            f_pert: 0.0,
            s0: 1.0,
        };
        assert_eq!(k0_bound(&x).unwrap(), f64::INFINITY);
    }
}
