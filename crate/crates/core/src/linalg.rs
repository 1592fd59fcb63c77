//! Dense linear-algebra helpers shared by every module.
//!
//! Everything is generic over [`Scalar`], which is implemented for `f64` and
//! `Complex64`. Norms, singular values and tolerances are always real.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;
use std::fmt::Debug;

use crate::error::{Error, Result};

/// Field of matrix entries: real or complex double precision.
pub trait Scalar: ComplexField<RealField = f64> + Copy + Send + Sync + Debug + 'static {
    fn to_c64(self) -> Complex64;

    /// `None` when `z` cannot be represented (non-zero imaginary part for `f64`).
    fn from_c64(z: Complex64) -> Option<Self>;

    fn from_re(x: f64) -> Self {
        Self::from_real(x)
    }

    /// Eigenvalues of a square matrix, always reported as complex numbers.
    fn eigenvalues(m: &DMatrix<Self>) -> Vec<Complex64>;
}

impl Scalar for f64 {
    fn to_c64(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }

    fn from_c64(z: Complex64) -> Option<Self> {
        (z.im == 0.0).then_some(z.re)
    }

    fn eigenvalues(m: &DMatrix<Self>) -> Vec<Complex64> {
        if m.nrows() == 0 {
            return Vec::new();
        }
        balance(m).complex_eigenvalues().iter().copied().collect()
    }
}

impl Scalar for Complex64 {
    fn to_c64(self) -> Complex64 {
        self
    }

    fn from_c64(z: Complex64) -> Option<Self> {
        Some(z)
    }

    fn eigenvalues(m: &DMatrix<Self>) -> Vec<Complex64> {
        if m.nrows() == 0 {
            return Vec::new();
        }
        let (_, t) = balance(m).schur().unpack();
        t.diagonal().iter().copied().collect()
    }
}

/// Diagonal similarity `D^{-1} M D` with power-of-two scalings that equalize
/// row and column norms (Parlett-Reinsch). Leaves the spectrum unchanged and
/// shrinks eigenvalue errors of badly scaled generators.
pub fn balance<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    let n = m.nrows();
    let mut b = m.clone();
    let radix = 2.0f64;
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += b[(j, i)].modulus();
                    r += b[(i, j)].modulus();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let total = c + r;
            let mut f = 1.0;
            let (mut cc, mut rr) = (c, r);
            while cc < rr / radix {
                cc *= radix;
                rr /= radix;
                f *= radix;
            }
            while cc >= rr * radix {
                cc /= radix;
                rr *= radix;
                f /= radix;
            }
            if cc + rr < 0.95 * total {
                converged = false;
                let fi = T::from_re(f);
                let gi = T::from_re(1.0 / f);
                for j in 0..n {
                    b[(i, j)] *= gi;
                    b[(j, i)] *= fi;
                }
            }
        }
    }
    b
}

pub fn to_complex<T: Scalar>(m: &DMatrix<T>) -> DMatrix<Complex64> {
    m.map(|x| x.to_c64())
}

pub fn all_finite<T: Scalar>(m: &DMatrix<T>) -> bool {
    m.iter().all(|x| x.is_finite())
}

/// Matrix exponential (scaling and squaring with Pade approximants).
pub fn expm<T: Scalar>(a: &DMatrix<T>) -> DMatrix<T> {
    if a.nrows() == 0 {
        return a.clone();
    }
    a.exp()
}

/// Zero-order-hold pair `(e^{A dt}, int_0^dt e^{As} ds B)` from one exponential
/// of the augmented matrix `[[A, B], [0, 0]] dt`.
pub fn zoh<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>, dt: f64) -> (DMatrix<T>, DMatrix<T>) {
    let n = a.nrows();
    let m = b.ncols();
    let mut aug = DMatrix::<T>::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&(a * T::from_re(dt)));
    aug.view_mut((0, n), (n, m)).copy_from(&(b * T::from_re(dt)));
    let e = expm(&aug);
    (
        e.view((0, 0), (n, n)).into_owned(),
        e.view((0, n), (n, m)).into_owned(),
    )
}

/// Singular values in decreasing order.
pub fn singular_values<T: Scalar>(m: &DMatrix<T>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Spectral norm (largest singular value); zero for empty matrices.
pub fn norm2<T: Scalar>(m: &DMatrix<T>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Smallest singular value of `m` viewed as a map onto its row space, i.e. the
/// radius of surjectivity. Zero when `m` has more rows than columns.
pub fn surjectivity_radius<T: Scalar>(m: &DMatrix<T>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    if m.nrows() > m.ncols() {
        return 0.0;
    }
    singular_values(m).last().copied().unwrap_or(0.0)
}

/// Smallest singular value of `m` as an injective map (lower bound `|Mx| >= k|x|`).
pub fn injectivity_constant<T: Scalar>(m: &DMatrix<T>) -> f64 {
    if m.ncols() == 0 {
        return f64::INFINITY;
    }
    if m.ncols() > m.nrows() {
        return 0.0;
    }
    singular_values(m).last().copied().unwrap_or(0.0)
}

/// Relative Frobenius deviation `|a - b| / max(|a|, |b|)`; zero when both vanish.
pub fn rel_dev<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

/// LU solve that reports near-singular systems instead of returning garbage.
/// The pivot-ratio test is a cheap reciprocal-condition proxy.
pub fn solve<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> Option<DMatrix<T>> {
    if a.nrows() == 0 {
        return Some(DMatrix::zeros(0, b.ncols()));
    }
    let lu = a.clone().lu();
    let u = lu.u();
    let diag = u.diagonal();
    let max = diag.iter().map(|x| x.modulus()).fold(0.0, f64::max);
    let min = diag.iter().map(|x| x.modulus()).fold(f64::INFINITY, f64::min);
    if max == 0.0 || min <= 1e-14 * max {
        return None;
    }
    let x = lu.solve(b)?;
    all_finite(&x).then_some(x)
}

pub fn inverse<T: Scalar>(a: &DMatrix<T>) -> Option<DMatrix<T>> {
    solve(a, &DMatrix::identity(a.nrows(), a.nrows()))
}

/// Largest real part of the spectrum.
pub fn spectral_abscissa<T: Scalar>(a: &DMatrix<T>) -> f64 {
    T::eigenvalues(a)
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Orthonormal basis (columns) of the null space of `g`, with rank decided
/// relative to the largest singular value.
pub fn kernel_basis<T: Scalar>(g: &DMatrix<T>, rel_tol: f64) -> DMatrix<T> {
    let n = g.ncols();
    if g.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    let gram = g.adjoint() * g;
    let eig = gram.symmetric_eigen();
    let max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let cols: Vec<DVector<T>> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| l <= rel_tol * rel_tol * max.max(f64::MIN_POSITIVE))
        .map(|(j, _)| eig.eigenvectors.column(j).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Numerical rank relative to the largest singular value.
pub fn rank<T: Scalar>(m: &DMatrix<T>, rel_tol: f64) -> usize {
    let s = singular_values(m);
    let max = s.first().copied().unwrap_or(0.0);
    s.iter().filter(|&&x| x > rel_tol * max).count()
}

/// Block-diagonal repetition of `block`, `count` times.
pub fn block_diag_repeat<T: Scalar>(block: &DMatrix<T>, count: usize) -> DMatrix<T> {
    let (r, c) = block.shape();
    let mut out = DMatrix::zeros(r * count, c * count);
    for k in 0..count {
        out.view_mut((k * r, k * c), (r, c)).copy_from(block);
    }
    out
}

pub(crate) fn check_finite<T: Scalar>(m: &DMatrix<T>, what: &'static str) -> Result<()> {
    if all_finite(m) {
        Ok(())
    } else {
        Err(Error::NonFinite { what })
    }
}

pub(crate) fn check_shape<T: Scalar>(
    m: &DMatrix<T>,
    rows: usize,
    cols: usize,
    what: &'static str,
) -> Result<()> {
    if m.shape() == (rows, cols) {
        Ok(())
    } else {
        Err(Error::dim(
            what,
            format!("{rows}x{cols}"),
            format!("{}x{}", m.nrows(), m.ncols()),
        ))
    }
}
