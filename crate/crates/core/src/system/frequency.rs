use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use super::realization::Realization;
use crate::error::{Error, Result};
use crate::linalg::{solve, spectral_abscissa, to_complex, Scalar};

/// `(lambda I - A)^{-1} rhs`.
pub fn resolvent_apply<T: Scalar>(
    a: &DMatrix<T>,
    lambda: Complex64,
    rhs: &DMatrix<Complex64>,
) -> Result<DMatrix<Complex64>> {
    let n = a.nrows();
    let shifted = DMatrix::<Complex64>::identity(n, n) * lambda - to_complex(a);
    solve(&shifted, rhs).ok_or(Error::Singular { lambda })
}

/// `G(lambda) = C (lambda I - A)^{-1} B + D`.
pub fn transfer<T: Scalar>(r: &Realization<T>, lambda: Complex64) -> Result<DMatrix<Complex64>> {
    if !(lambda.re.is_finite() && lambda.im.is_finite()) {
        return Err(Error::param("frequency must be finite"));
    }
    let x = resolvent_apply(r.a(), lambda, &to_complex(r.b()))?;
    Ok(to_complex(r.c()) * x + to_complex(r.d()))
}

/// Result of pushing a real frequency to infinity.
#[derive(Clone, Debug, Serialize)]
pub struct LimitEstimate {
    pub lambdas: Vec<f64>,
    /// Value at the largest frequency of the sweep.
    pub value: Vec<Complex64>,
    /// `|value(lambda_j) - limit|` along the sweep.
    pub residuals: Vec<f64>,
    /// Fitted exponent `q` in `residual ~ lambda^{-q}` over the sweep tail, when defined.
    pub rate: Option<f64>,
}

fn check_sweep(sweep: &[f64], abscissa: f64) -> Result<()> {
    if sweep.is_empty() {
        return Err(Error::param("empty frequency sweep"));
    }
    if sweep.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("frequency sweep must be strictly increasing"));
    }
    if let Some(&bad) = sweep.iter().find(|&&l| !(l.is_finite() && l > abscissa)) {
        return Err(Error::Singular {
            lambda: Complex64::new(bad, 0.0),
        });
    }
    Ok(())
}

fn fit_rate(lambdas: &[f64], residuals: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = lambdas
        .iter()
        .zip(residuals)
        .filter(|(_, &r)| r > 0.0 && r.is_finite())
        .map(|(&l, &r)| (l.ln(), r.ln()))
        .collect();
    let tail = &pts[pts.len().saturating_sub(3)..];
    if tail.len() < 2 {
        return None;
    }
    let n = tail.len() as f64;
    let mx = tail.iter().map(|p| p.0).sum::<f64>() / n;
    let my = tail.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = tail.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| -sxy / sxx)
}

/// Evaluates `G(lambda) u` along a real sweep and measures its approach to `D u`.
pub fn regularity_limit<T: Scalar>(
    r: &Realization<T>,
    sweep: &[f64],
    u: &DVector<T>,
) -> Result<LimitEstimate> {
    if u.len() != r.m() {
        return Err(Error::dim("input vector", r.m(), u.len()));
    }
    check_sweep(sweep, spectral_abscissa(r.a()))?;
    let uc = DMatrix::from_iterator(u.len(), 1, u.iter().map(|x| x.to_c64()));
    let du = to_complex(r.d()) * &uc;
    let mut residuals = Vec::with_capacity(sweep.len());
    let mut last = du.clone();
    for &l in sweep {
        last = transfer(r, Complex64::new(l, 0.0))? * &uc;
        residuals.push((&last - &du).norm());
    }
    Ok(LimitEstimate {
        lambdas: sweep.to_vec(),
        value: last.iter().copied().collect(),
        rate: fit_rate(sweep, &residuals),
        residuals,
    })
}

/// Evaluates `C lambda (lambda I - A)^{-1} x` along a real sweep; at finite
/// dimension the limit is `C x`.
pub fn lambda_extension<T: Scalar>(
    r: &Realization<T>,
    x: &DVector<T>,
    sweep: &[f64],
) -> Result<LimitEstimate> {
    if x.len() != r.n() {
        return Err(Error::dim("state vector", r.n(), x.len()));
    }
    check_sweep(sweep, spectral_abscissa(r.a()))?;
    let xc = DMatrix::from_iterator(x.len(), 1, x.iter().map(|v| v.to_c64()));
    let c = to_complex(r.c());
    let cx = &c * &xc;
    let mut residuals = Vec::with_capacity(sweep.len());
    let mut last = cx.clone();
    for &l in sweep {
        let lam = Complex64::new(l, 0.0);
        last = &c * resolvent_apply(r.a(), lam, &xc)? * lam;
        residuals.push((&last - &cx).norm());
    }
    Ok(LimitEstimate {
        lambdas: sweep.to_vec(),
        value: last.iter().copied().collect(),
        rate: fit_rate(sweep, &residuals),
        residuals,
    })
}

/// `{1, 2, 5, 10} + max(abscissa, 0) + 1` over every supplied generator.
pub fn identity_samples<T: Scalar>(generators: &[&DMatrix<T>]) -> Vec<f64> {
    let shift = generators
        .iter()
        .map(|a| spectral_abscissa(*a))
        .fold(0.0, f64::max)
        + 1.0;
    [1.0, 2.0, 5.0, 10.0].iter().map(|l| l + shift).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(a: f64, b: f64, c: f64, d: f64) -> Realization {
        Realization::new(
            DMatrix::from_element(1, 1, a),
            DMatrix::from_element(1, 1, b),
            DMatrix::from_element(1, 1, c),
            DMatrix::from_element(1, 1, d),
        )
        .unwrap()
    }

    #[test]
    fn scalar_resolvent() {
        let g = transfer(&scalar(-1.0, 1.0, 1.0, 0.0), Complex64::new(1.0, 0.0)).unwrap();
        assert!((g[(0, 0)] - Complex64::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn spectrum_is_reported() {
        let err = transfer(&scalar(2.0, 1.0, 1.0, 0.0), Complex64::new(2.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::Singular { lambda } if lambda.re == 2.0));
    }

    #[test]
    fn feedthrough_limit_closed_form() {
        let r = scalar(-1.0, 1.0, 1.0, 3.0);
        let sweep: Vec<f64> = (1..=6).map(|k| 10f64.powi(k)).collect();
        let est = regularity_limit(&r, &sweep, &DVector::from_element(1, 1.0)).unwrap();
        for (l, res) in sweep.iter().zip(&est.residuals) {
            assert!((res - 1.0 / (l + 1.0)).abs() < 1e-12);
        }
        assert!((est.rate.unwrap() - 1.0).abs() < 1e-4);
        assert!((est.value[0].re - 3.0).abs() < 2e-6);
    }

    #[test]
    fn sweep_validation() {
        let r = scalar(1.0, 1.0, 1.0, 0.0);
        let u = DVector::from_element(1, 1.0);
        assert!(regularity_limit(&r, &[0.5, 2.0], &u).is_err());
        assert!(regularity_limit(&r, &[3.0, 2.0], &u).is_err());
    }

    #[test]
    fn extension_of_zero_generator_is_exact() {
        let r = Realization::strictly_proper(
            DMatrix::<f64>::zeros(2, 2),
            DMatrix::zeros(2, 1),
            DMatrix::identity(2, 2),
        )
        .unwrap();
        let x = DVector::from_vec(vec![1.5, -2.0]);
        let est = lambda_extension(&r, &x, &[1.0, 10.0, 100.0]).unwrap();
        assert!(est.residuals.iter().all(|&e| e < 1e-14));
    }
}
