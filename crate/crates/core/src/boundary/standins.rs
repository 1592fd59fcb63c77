//! Small boundary control systems with known limits, used as reference cases.

use nalgebra::DMatrix;
use serde::Serialize;

use super::triple::BoundaryTriple;
use crate::error::{Error, Result};

fn check_m(m: usize) -> Result<()> {
    if m < 3 {
        return Err(Error::param("need at least 3 interior nodes"));
    }
    Ok(())
}

/// Second-difference rows for interior nodes `1..=m` on `[0, 1]` with
/// coordinates `(z_1..z_m, z_{m+1}, z_0)`.
fn laplacian_rows(m: usize) -> DMatrix<f64> {
    let h = 1.0 / (m as f64 + 1.0);
    let h2 = h * h;
    let right = m;
    let left = m + 1;
    let mut l = DMatrix::zeros(m, m + 2);
    for i in 0..m {
        l[(i, i)] = -2.0 / h2;
        let prev = if i == 0 { left } else { i - 1 };
        let next = if i + 1 == m { right } else { i + 1 };
        l[(i, prev)] += 1.0 / h2;
        l[(i, next)] += 1.0 / h2;
    }
    l
}

fn selector(rows: usize, cols: usize, at: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(rows, cols);
    s[(0, at)] = 1.0;
    s
}

/// Heat equation on `(0, 1)`, input is the value at `x = 1`, zero value at
/// `x = 0`, output `K` is the value at `x = 1`.
pub fn laplacian_dirichlet(m: usize) -> Result<BoundaryTriple> {
    check_m(m)?;
    let ext = m + 2;
    let g = selector(1, ext, m);
    BoundaryTriple::from_parts(laplacian_rows(m), g.clone(), Some(selector(1, ext, m + 1)), g, None)
}

/// Heat equation with input value at `x = 1`, zero flux at `x = 0`, output
/// the value at `x = 0`. The Dirichlet profile is close to
/// `cosh(sqrt(lambda) x) / cosh(sqrt(lambda))`.
pub fn laplacian_neumann_left(m: usize) -> Result<BoundaryTriple> {
    check_m(m)?;
    let ext = m + 2;
    let h = 1.0 / (m as f64 + 1.0);
    let mut flux = DMatrix::zeros(1, ext);
    flux[(0, 0)] = 1.0 / h;
    flux[(0, m + 1)] = -1.0 / h;
    BoundaryTriple::from_parts(laplacian_rows(m), selector(1, ext, m), Some(flux), selector(1, ext, m + 1), None)
}

/// Coefficients of the two-trace wave stand-in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WaveTraces {
    pub c1: f64,
    pub c2: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Default for WaveTraces {
    fn default() -> Self {
        WaveTraces { c1: 0.3, c2: 0.5, d1: 0.7, d2: -0.2 }
    }
}

/// String `w_tt = w_xx` on `(0, 1)` with displacement inputs at both ends.
///
/// Coordinates are `(w_1..w_m, v_1..v_m, w_{m+1}, w_0)`. `G` reads `w(1)`,
/// `G2` reads `w(0)`. `K = c1 w(1) + c2 w(0) + v(1/2)` and
/// `W = d1 w(1) + d2 w(0) + v(1/2)`, so the exact limits are `c1, c2, d1, d2`
/// (the midpoint velocity of the Dirichlet profile decays exponentially).
pub fn wave(m: usize, tr: WaveTraces) -> Result<BoundaryTriple> {
    check_m(m)?;
    let n = 2 * m;
    let ext = n + 2;
    let right = n;
    let left = n + 1;
    let lap = laplacian_rows(m);
    let mut l = DMatrix::zeros(n, ext);
    for i in 0..m {
        l[(i, m + i)] = 1.0;
        for j in 0..m {
            l[(m + i, j)] = lap[(i, j)];
        }
        l[(m + i, right)] = lap[(i, m)];
        l[(m + i, left)] = lap[(i, m + 1)];
    }
    let mid = m + m / 2;
    let mut k = DMatrix::zeros(1, ext);
    k[(0, right)] = tr.c1;
    k[(0, left)] = tr.c2;
    k[(0, mid)] = 1.0;
    let mut w = DMatrix::zeros(1, ext);
    w[(0, right)] = tr.d1;
    w[(0, left)] = tr.d2;
    w[(0, mid)] = 1.0;
    BoundaryTriple::from_parts(l, selector(1, ext, right), Some(selector(1, ext, left)), k, Some(w))
}
