//! Block-diagram builders: series, parallel and the loop inverse.
//!
//! They realize composite input-output maps as one augmented LTI system, so a
//! composite can be discretized exactly under zero-order hold.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{inverse, Scalar};
use crate::system::Realization;

/// `y = second(first(u))`, state `[x_first; x_second]`.
pub fn series<T: Scalar>(first: &Realization<T>, second: &Realization<T>) -> Result<Realization<T>> {
    if first.p() != second.m() {
        return Err(Error::dim("series connection", first.p(), second.m()));
    }
    let (n1, n2) = (first.n(), second.n());
    let mut a = DMatrix::zeros(n1 + n2, n1 + n2);
    a.view_mut((0, 0), (n1, n1)).copy_from(first.a());
    a.view_mut((n1, n1), (n2, n2)).copy_from(second.a());
    a.view_mut((n1, 0), (n2, n1))
        .copy_from(&(second.b() * first.c()));
    let mut b = DMatrix::zeros(n1 + n2, first.m());
    b.view_mut((0, 0), (n1, first.m())).copy_from(first.b());
    b.view_mut((n1, 0), (n2, first.m()))
        .copy_from(&(second.b() * first.d()));
    let mut c = DMatrix::zeros(second.p(), n1 + n2);
    c.view_mut((0, 0), (second.p(), n1))
        .copy_from(&(second.d() * first.c()));
    c.view_mut((0, n1), (second.p(), n2)).copy_from(second.c());
    Realization::new(a, b, c, second.d() * first.d())
}

/// `y = left(u) + right(u)`, state `[x_left; x_right]`.
pub fn parallel<T: Scalar>(left: &Realization<T>, right: &Realization<T>) -> Result<Realization<T>> {
    if left.m() != right.m() || left.p() != right.p() {
        return Err(Error::dim(
            "parallel connection",
            format!("{}x{}", left.p(), left.m()),
            format!("{}x{}", right.p(), right.m()),
        ));
    }
    let (n1, n2, m, p) = (left.n(), right.n(), left.m(), left.p());
    let mut a = DMatrix::zeros(n1 + n2, n1 + n2);
    a.view_mut((0, 0), (n1, n1)).copy_from(left.a());
    a.view_mut((n1, n1), (n2, n2)).copy_from(right.a());
    let mut b = DMatrix::zeros(n1 + n2, m);
    b.view_mut((0, 0), (n1, m)).copy_from(left.b());
    b.view_mut((n1, 0), (n2, m)).copy_from(right.b());
    let mut c = DMatrix::zeros(p, n1 + n2);
    c.view_mut((0, 0), (p, n1)).copy_from(left.c());
    c.view_mut((0, n1), (p, n2)).copy_from(right.c());
    Realization::new(a, b, c, left.d() + right.d())
}

/// Realization of `(I - F)^{-1}` for a square system: the solution `z` of
/// `z = w + C x + D z`, `x' = A x + B z`.
pub fn loop_inverse<T: Scalar>(r: &Realization<T>) -> Result<Realization<T>> {
    if r.m() != r.p() {
        return Err(Error::dim("loop inverse needs a square system", r.m(), r.p()));
    }
    let m = r.m();
    let s = inverse(&(DMatrix::<T>::identity(m, m) - r.d())).ok_or(Error::FeedthroughLoop)?;
    let sc = &s * r.c();
    Realization::new(r.a() + r.b() * &sc, r.b() * &s, sc, s)
}

/// `(A, B, I, 0)`: the state itself as output, so the output at `t` is `Phi(t) u`.
pub fn state_readout<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<Realization<T>> {
    let n = a.nrows();
    Realization::strictly_proper(a.clone(), b.clone(), DMatrix::identity(n, n))
}

/// `(A, 0, C, 0)` with `m` dead inputs: a free response `Psi x0` as a block.
pub fn free_response<T: Scalar>(a: &DMatrix<T>, c: &DMatrix<T>, m: usize) -> Result<Realization<T>> {
    Realization::strictly_proper(a.clone(), DMatrix::zeros(a.nrows(), m), c.clone())
}
