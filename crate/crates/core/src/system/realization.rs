use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_finite, check_shape, to_complex, Scalar};

/// Names of the state, input and output spaces, carried for reports only.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceLabels {
    pub state: String,
    pub input: String,
    pub output: String,
}

impl Default for SpaceLabels {
    fn default() -> Self {
        SpaceLabels {
            state: "X".into(),
            input: "U".into(),
            output: "Y".into(),
        }
    }
}

/// Dense generator `(A, B, C, D)` of a regular linear system.
///
/// At finite dimension the extrapolated generator coincides with `A`, the
/// Lambda-extension of `C` with `C` itself, and every `J^{A, A'}` factor with the
/// identity, so no separate types exist for them.
#[derive(Clone, Debug, PartialEq)]
pub struct Realization<T: Scalar = f64> {
    a: DMatrix<T>,
    b: DMatrix<T>,
    c: DMatrix<T>,
    d: DMatrix<T>,
    labels: SpaceLabels,
}

impl<T: Scalar> Realization<T> {
    pub fn new(a: DMatrix<T>, b: DMatrix<T>, c: DMatrix<T>, d: DMatrix<T>) -> Result<Self> {
        let n = a.nrows();
        check_shape(&a, n, n, "A")?;
        check_shape(&b, n, b.ncols(), "B")?;
        check_shape(&c, c.nrows(), n, "C")?;
        check_shape(&d, c.nrows(), b.ncols(), "D")?;
        check_finite(&a, "A")?;
        check_finite(&b, "B")?;
        check_finite(&c, "C")?;
        check_finite(&d, "D")?;
        Ok(Realization {
            a,
            b,
            c,
            d,
            labels: SpaceLabels::default(),
        })
    }

    /// `(A, B, C, 0)`.
    pub fn strictly_proper(a: DMatrix<T>, b: DMatrix<T>, c: DMatrix<T>) -> Result<Self> {
        let d = DMatrix::zeros(c.nrows(), b.ncols());
        Self::new(a, b, c, d)
    }

    pub fn with_labels(mut self, labels: SpaceLabels) -> Self {
        self.labels = labels;
        self
    }

    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<T> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<T> {
        &self.c
    }

    pub fn d(&self) -> &DMatrix<T> {
        &self.d
    }

    pub fn labels(&self) -> &SpaceLabels {
        &self.labels
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Input dimension.
    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    /// Output dimension.
    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    pub fn into_parts(self) -> (DMatrix<T>, DMatrix<T>, DMatrix<T>, DMatrix<T>) {
        (self.a, self.b, self.c, self.d)
    }

    pub fn to_complex(&self) -> Realization<Complex64> {
        Realization {
            a: to_complex(&self.a),
            b: to_complex(&self.b),
            c: to_complex(&self.c),
            d: to_complex(&self.d),
            labels: self.labels.clone(),
        }
    }

    /// Same `A` and `C`, different input channel.
    pub fn with_input(&self, b: DMatrix<T>, d: DMatrix<T>) -> Result<Self> {
        Self::new(self.a.clone(), b, self.c.clone(), d)
    }

    /// Same `A` and `B`, different output channel.
    pub fn with_output(&self, c: DMatrix<T>, d: DMatrix<T>) -> Result<Self> {
        Self::new(self.a.clone(), self.b.clone(), c, d)
    }

    pub(crate) fn check_same_a(&self, other: &Self, what: &'static str) -> Result<()> {
        same_matrix(&self.a, &other.a, what)
    }
}

/// Equality up to a relative `1e-12` in the Frobenius norm.
pub(crate) fn same_matrix<T: Scalar>(x: &DMatrix<T>, y: &DMatrix<T>, what: &'static str) -> Result<()> {
    if x.shape() != y.shape() {
        return Err(Error::dim(
            what,
            format!("{}x{}", x.nrows(), x.ncols()),
            format!("{}x{}", y.nrows(), y.ncols()),
        ));
    }
    let scale = x.norm().max(y.norm()).max(1.0);
    if (x - y).norm() > 1e-12 * scale {
        return Err(Error::param(format!("{what}: operators differ")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_inconsistent_shapes() {
        let a = DMatrix::<f64>::zeros(2, 2);
        let b = DMatrix::<f64>::zeros(3, 1);
        let c = DMatrix::<f64>::zeros(1, 2);
        let d = DMatrix::<f64>::zeros(1, 1);
        assert!(matches!(
            Realization::new(a.clone(), b, c.clone(), d.clone()),
            Err(Error::Dimension { what: "B", .. })
        ));
        let b = DMatrix::<f64>::zeros(2, 1);
        let d_bad = DMatrix::<f64>::zeros(2, 1);
        assert!(Realization::new(a, b, c, d_bad).is_err());
    }

    #[test]
    fn rejects_nan() {
        let mut a = DMatrix::<f64>::zeros(1, 1);
        a[(0, 0)] = f64::NAN;
        let r = Realization::new(
            a,
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 1),
        );
        assert!(matches!(r, Err(Error::NonFinite { what: "A" })));
    }

    #[test]
    fn dims_and_complex_copy() {
        let r = Realization::strictly_proper(
            DMatrix::<f64>::identity(3, 3),
            DMatrix::zeros(3, 2),
            DMatrix::zeros(4, 3),
        )
        .unwrap();
        assert_eq!((r.n(), r.m(), r.p()), (3, 2, 4));
        let rc = r.to_complex();
        assert_eq!(rc.a()[(1, 1)], Complex64::new(1.0, 0.0));
    }
}
