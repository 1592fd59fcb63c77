use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{block_diag_repeat, inverse, singular_values, Scalar};
use crate::system::{QuadrupleMaps, Realization, TimeGrid};

/// Output-to-input gain `k * Gamma` (`Gamma` is `m x p`).
#[derive(Clone, Debug, PartialEq)]
pub struct FeedbackGain<T: Scalar = f64> {
    gamma: DMatrix<T>,
    k: f64,
}

impl<T: Scalar> FeedbackGain<T> {
    pub fn new(gamma: DMatrix<T>) -> Result<Self> {
        Self::scaled(gamma, 1.0)
    }

    pub fn scaled(gamma: DMatrix<T>, k: f64) -> Result<Self> {
        if !(k.is_finite() && k >= 0.0) {
            return Err(Error::param(format!("gain scale must be finite and nonnegative, got {k}")));
        }
        crate::linalg::check_finite(&gamma, "Gamma")?;
        Ok(FeedbackGain { gamma, k })
    }

    /// `k I` on a `dim`-dimensional signal space.
    pub fn scaled_identity(k: f64, dim: usize) -> Result<Self> {
        Self::scaled(DMatrix::identity(dim, dim), k)
    }

    pub fn gamma(&self) -> &DMatrix<T> {
        &self.gamma
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// `k * Gamma`.
    pub fn effective(&self) -> DMatrix<T> {
        &self.gamma * T::from_re(self.k)
    }

    fn check_dims(&self, r: &Realization<T>) -> Result<()> {
        if self.gamma.shape() != (r.m(), r.p()) {
            return Err(Error::dim(
                "feedback gain",
                format!("{}x{}", r.m(), r.p()),
                format!("{}x{}", self.gamma.nrows(), self.gamma.ncols()),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AdmissibilityReport {
    pub admissible: bool,
    /// `sigma_min(I - F(t_end) Gamma)` on the grid.
    pub sigma_min: f64,
    /// `sigma_max / sigma_min` of the same operator.
    pub condition_number: f64,
    /// `sigma_min(I - D Gamma)`.
    pub feedthrough_sigma_min: f64,
    pub feedthrough_invertible: bool,
}

const ADMISSIBLE_REL: f64 = 1e-8;

/// Grid test of `I - F(t_end) Gamma` and of `I - D Gamma`.
pub fn admissible_feedback_check<T: Scalar>(
    r: &Realization<T>,
    fb: &FeedbackGain<T>,
    g: &TimeGrid,
) -> Result<AdmissibilityReport> {
    fb.check_dims(r)?;
    let gamma = fb.effective();
    let maps = QuadrupleMaps::assemble(r, g)?;
    let np = maps.io_map.nrows();
    let m = DMatrix::<T>::identity(np, np) - &maps.io_map * block_diag_repeat(&gamma, g.n_steps());
    let s = singular_values(&m);
    let (smax, smin) = (s[0], s[s.len() - 1]);

    let p = r.p();
    let dl = DMatrix::<T>::identity(p, p) - r.d() * &gamma;
    let sd = singular_values(&dl);
    let (dmax, dmin) = (sd[0], sd[sd.len() - 1]);
    let feedthrough_invertible = dmin > ADMISSIBLE_REL * dmax;

    Ok(AdmissibilityReport {
        admissible: smin > ADMISSIBLE_REL * smax && feedthrough_invertible,
        sigma_min: smin,
        condition_number: if smin > 0.0 { smax / smin } else { f64::INFINITY },
        feedthrough_sigma_min: dmin,
        feedthrough_invertible,
    })
}

/// `(A + B G (I - D G)^{-1} C, B (I - G D)^{-1}, (I - D G)^{-1} C, D (I - G D)^{-1})`
/// with `G = k Gamma`.
pub fn closed_loop<T: Scalar>(r: &Realization<T>, fb: &FeedbackGain<T>) -> Result<Realization<T>> {
    fb.check_dims(r)?;
    let g = fb.effective();
    let (m, p) = (r.m(), r.p());
    let left = inverse(&(DMatrix::<T>::identity(p, p) - r.d() * &g)).ok_or(Error::FeedthroughLoop)?;
    let right = inverse(&(DMatrix::<T>::identity(m, m) - &g * r.d())).ok_or(Error::FeedthroughLoop)?;
    let c_cl = &left * r.c();
    Realization::new(
        r.a() + r.b() * &g * &c_cl,
        r.b() * &right,
        c_cl,
        r.d() * &right,
    )
    .map(|cl| cl.with_labels(r.labels().clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rel_dev;
    use crate::system::transfer;
    use num_complex::Complex64;

    fn sample() -> Realization {
        Realization::new(
            DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, -0.3, -2.0]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.2, 1.0]),
            DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 0.0, 1.0]),
            DMatrix::from_row_slice(2, 2, &[0.1, 0.0, 0.05, 0.2]),
        )
        .unwrap()
    }

    #[test]
    fn zero_gain_is_identity_operator() {
        let r = sample();
        let g = TimeGrid::new(1.0, 10).unwrap();
        let rep = admissible_feedback_check(&r, &FeedbackGain::scaled_identity(0.0, 2).unwrap(), &g).unwrap();
        assert!(rep.admissible);
        assert!((rep.condition_number - 1.0).abs() < 1e-12);
        let cl = closed_loop(&r, &FeedbackGain::scaled_identity(0.0, 2).unwrap()).unwrap();
        assert_eq!(cl, r);
    }

    #[test]
    fn unit_feedthrough_is_not_admissible() {
        let r = Realization::new(
            DMatrix::from_element(1, 1, -1.0),
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 1),
            DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap();
        let g = TimeGrid::new(1.0, 4).unwrap();
        let rep = admissible_feedback_check(&r, &FeedbackGain::scaled_identity(1.0, 1).unwrap(), &g).unwrap();
        assert!(!rep.admissible);
        assert!(!rep.feedthrough_invertible);
        assert!(matches!(
            closed_loop(&r, &FeedbackGain::scaled_identity(1.0, 1).unwrap()),
            Err(Error::FeedthroughLoop)
        ));
    }

    #[test]
    fn strictly_proper_unit_feedback_collapses() {
        let r = Realization::strictly_proper(
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -2.0, -0.1]),
            DMatrix::identity(2, 2),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.3, 1.0]),
        )
        .unwrap();
        let cl = closed_loop(&r, &FeedbackGain::new(DMatrix::identity(2, 2)).unwrap()).unwrap();
        assert!(rel_dev(cl.a(), &(r.a() + r.b() * r.c())) < 1e-15);
        assert_eq!(cl.b(), r.b());
        assert_eq!(cl.c(), r.c());
        assert!(cl.d().norm() == 0.0);
    }

    #[test]
    fn closed_loop_transfer_matches_formula() {
        let r = sample();
        let gamma = DMatrix::from_row_slice(2, 2, &[0.3, -0.2, 0.1, 0.4]);
        let fb = FeedbackGain::new(gamma.clone()).unwrap();
        let cl = closed_loop(&r, &fb).unwrap();
        let gc = crate::linalg::to_complex(&gamma);
        for l in [1.5, 3.0, 10.0] {
            let lam = Complex64::new(l, 0.0);
            let g = transfer(&r, lam).unwrap();
            let expected = &g * inverse(&(DMatrix::identity(2, 2) - &gc * &g)).unwrap();
            assert!(rel_dev(&transfer(&cl, lam).unwrap(), &expected) < 1e-12);
        }
    }

    #[test]
    fn gain_dimension_checked() {
        let r = sample();
        let fb = FeedbackGain::new(DMatrix::<f64>::identity(3, 3)).unwrap();
        assert!(closed_loop(&r, &fb).is_err());
        assert!(FeedbackGain::scaled(DMatrix::<f64>::identity(2, 2), -1.0).is_err());
    }
}
