use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_finite, check_shape, inverse, rank, rel_dev, solve, spectral_abscissa};
use crate::system::Realization;

const RANK_TOL: f64 = 1e-12;

/// Discretized boundary control system `z' = L z` (interior rows), `G z = u`,
/// `y = K z`, on extended coordinates `z = (x, beta)`.
///
/// The first `n` coordinates are the interior state `x`; the trailing `b`
/// coordinates are boundary values. `L` is `n x (n + b)`: it gives `x'` only,
/// boundary values carry no dynamics of their own. `G` (and optionally `G2`)
/// are trace maps whose stacked restriction to the boundary block must be
/// invertible, so every boundary value is fixed by the traces and the interior.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTriple {
    l: DMatrix<f64>,
    g: DMatrix<f64>,
    g2: Option<DMatrix<f64>>,
    k: DMatrix<f64>,
    w: Option<DMatrix<f64>>,
}

/// Splitting `z = E x + F G_all z` of extended coordinates.
#[derive(Clone, Debug)]
pub struct Lifting {
    /// `[I; -G_beta^{-1} G_x]`, embeds the interior state into `ker G_all`.
    pub embed: DMatrix<f64>,
    /// `[0; G_beta^{-1}]`, lifts boundary data with zero interior part.
    pub lift: DMatrix<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Restriction {
    /// `L` restricted to `ker G_all`, in interior coordinates.
    #[serde(skip)]
    pub a: DMatrix<f64>,
    #[serde(skip)]
    pub embed: DMatrix<f64>,
    /// Orthonormal basis of `ker G_all`.
    #[serde(skip)]
    pub kernel: DMatrix<f64>,
    pub kernel_dim: usize,
    pub spectral_abscissa: f64,
}

#[derive(Clone, Debug)]
pub struct DirichletMap {
    pub lambda: f64,
    /// `(n + b) x b1`: boundary input through `G` to extended state.
    pub matrix: DMatrix<f64>,
    /// `|(lambda - L) D|` relative to `|D|`.
    pub interior_residual: f64,
    /// `|G D - I|`.
    pub trace_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryRealizationReport {
    #[serde(skip)]
    pub realization: Realization,
    /// `K F`: the finite-dimensional feedthrough (`lambda -> inf` limit of `K D_lambda`).
    #[serde(skip)]
    pub discrete_feedthrough: DMatrix<f64>,
    pub shifts: [f64; 2],
    /// `|B_lambda - B_lambda'| / |B_lambda|`.
    pub shift_deviation: f64,
    /// `|B_lambda - L F| / |L F|`.
    pub lift_deviation: f64,
}

#[derive(Serialize, Deserialize)]
struct TripleDoc {
    #[serde(rename = "L")]
    l: Vec<Vec<f64>>,
    #[serde(rename = "G")]
    g: Vec<Vec<f64>>,
    #[serde(rename = "G2", default, skip_serializing_if = "Option::is_none")]
    g2: Option<Vec<Vec<f64>>>,
    #[serde(rename = "K")]
    k: Vec<Vec<f64>>,
    #[serde(rename = "W", default, skip_serializing_if = "Option::is_none")]
    w: Option<Vec<Vec<f64>>>,
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>], what: &'static str) -> Result<DMatrix<f64>> {
    let cols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::dim(what, "rectangular rows", "ragged rows"));
    }
    Ok(DMatrix::from_row_iterator(rows.len(), cols, rows.iter().flatten().copied()))
}

impl BoundaryTriple {
    pub fn new(l: DMatrix<f64>, g: DMatrix<f64>, k: DMatrix<f64>) -> Result<Self> {
        Self::build(l, g, None, k, None)
    }

    pub fn with_w(self, w: DMatrix<f64>) -> Result<Self> {
        Self::build(self.l, self.g, self.g2, self.k, Some(w))
    }

    pub fn with_k(self, k: DMatrix<f64>) -> Result<Self> {
        Self::build(self.l, self.g, self.g2, k, self.w)
    }

    /// All traces at once; needed whenever `G2` is present, since the boundary
    /// block size is fixed by `G` and `G2` together.
    pub fn from_parts(
        l: DMatrix<f64>,
        g: DMatrix<f64>,
        g2: Option<DMatrix<f64>>,
        k: DMatrix<f64>,
        w: Option<DMatrix<f64>>,
    ) -> Result<Self> {
        Self::build(l, g, g2, k, w)
    }

    fn build(
        l: DMatrix<f64>,
        g: DMatrix<f64>,
        g2: Option<DMatrix<f64>>,
        k: DMatrix<f64>,
        w: Option<DMatrix<f64>>,
    ) -> Result<Self> {
        let n = l.nrows();
        let b = g.nrows() + g2.as_ref().map_or(0, |m| m.nrows());
        let ext = n + b;
        check_shape(&l, n, ext, "L")?;
        check_shape(&g, g.nrows(), ext, "G")?;
        if let Some(g2) = &g2 {
            check_shape(g2, g2.nrows(), ext, "G2")?;
            check_finite(g2, "G2")?;
        }
        check_shape(&k, k.nrows(), ext, "K")?;
        if let Some(w) = &w {
            check_shape(w, w.nrows(), ext, "W")?;
            check_finite(w, "W")?;
        }
        check_finite(&l, "L")?;
        check_finite(&g, "G")?;
        check_finite(&k, "K")?;
        let t = BoundaryTriple { l, g, g2, k, w };
        let gall = t.traces();
        if rank(&gall, RANK_TOL) < b {
            return Err(Error::RankDeficient { what: "stacked trace map" });
        }
        t.lifting()?;
        Ok(t)
    }

    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }
    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }
    pub fn g2(&self) -> Option<&DMatrix<f64>> {
        self.g2.as_ref()
    }
    pub fn k(&self) -> &DMatrix<f64> {
        &self.k
    }
    pub fn w(&self) -> Option<&DMatrix<f64>> {
        self.w.as_ref()
    }

    /// Interior dimension `n`.
    pub fn n(&self) -> usize {
        self.l.nrows()
    }

    /// Rows of `G` (the input channel).
    pub fn b1(&self) -> usize {
        self.g.nrows()
    }

    /// Rows of `G2`.
    pub fn b2(&self) -> usize {
        self.g2.as_ref().map_or(0, |m| m.nrows())
    }

    pub fn ext_dim(&self) -> usize {
        self.l.ncols()
    }

    /// `[G; G2]`.
    pub fn traces(&self) -> DMatrix<f64> {
        match &self.g2 {
            None => self.g.clone(),
            Some(g2) => {
                let mut s = DMatrix::zeros(self.g.nrows() + g2.nrows(), self.ext_dim());
                s.view_mut((0, 0), self.g.shape()).copy_from(&self.g);
                s.view_mut((self.g.nrows(), 0), g2.shape()).copy_from(g2);
                s
            }
        }
    }

    pub fn lifting(&self) -> Result<Lifting> {
        let n = self.n();
        let b = self.b1() + self.b2();
        let gall = self.traces();
        let gx = gall.view((0, 0), (b, n)).into_owned();
        let gb = gall.view((0, n), (b, b)).into_owned();
        let gbi = inverse(&gb).ok_or(Error::RankDeficient {
            what: "trace map restricted to boundary coordinates",
        })?;
        let mut embed = DMatrix::zeros(n + b, n);
        embed.view_mut((0, 0), (n, n)).fill_with_identity();
        embed.view_mut((n, 0), (b, n)).copy_from(&(-&gbi * gx));
        let mut lift = DMatrix::zeros(n + b, b);
        lift.view_mut((n, 0), (b, b)).copy_from(&gbi);
        Ok(Lifting { embed, lift })
    }

    /// Interior projection `P_X z = x`.
    pub fn interior(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        z.rows(0, self.n()).into_owned()
    }

    /// Triple with `G` replaced by `G - K_fb` (boundary feedback `G z = K_fb z + u`).
    pub fn with_feedback(&self, k_fb: &DMatrix<f64>) -> Result<Self> {
        check_shape(k_fb, self.b1(), self.ext_dim(), "feedback trace")?;
        Self::build(self.l.clone(), &self.g - k_fb, self.g2.clone(), self.k.clone(), self.w.clone())
    }

    /// Same system with `G` and `G2` swapped, so the input enters through `G2`
    /// while `G z = 0`.
    pub fn swapped(&self) -> Result<Self> {
        let g2 = self.g2.clone().ok_or_else(|| Error::param("triple has no second trace"))?;
        // Boundary coordinates keep their order; only the trace rows swap.
        Self::build(self.l.clone(), g2, Some(self.g.clone()), self.k.clone(), self.w.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&TripleDoc {
            l: to_rows(&self.l),
            g: to_rows(&self.g),
            g2: self.g2.as_ref().map(to_rows),
            k: to_rows(&self.k),
            w: self.w.as_ref().map(to_rows),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: TripleDoc = serde_json::from_str(s)?;
        Self::build(
            from_rows(&doc.l, "L")?,
            from_rows(&doc.g, "G")?,
            doc.g2.as_deref().map(|r| from_rows(r, "G2")).transpose()?,
            from_rows(&doc.k, "K")?,
            doc.w.as_deref().map(|r| from_rows(r, "W")).transpose()?,
        )
    }
}

/// `A = L|_{ker G_all}` in interior coordinates.
pub fn restrict_generator(bt: &BoundaryTriple) -> Result<Restriction> {
    let lift = bt.lifting()?;
    let a = bt.l() * &lift.embed;
    let kernel = lift.embed.clone().qr().q();
    Ok(Restriction {
        spectral_abscissa: spectral_abscissa(&a),
        kernel_dim: kernel.ncols(),
        a,
        embed: lift.embed,
        kernel,
    })
}

/// Solves `(lambda [I 0] - L) z = 0`, `G z = u`, `G2 z = 0` for each input basis vector.
pub fn dirichlet_map(bt: &BoundaryTriple, lambda: f64) -> Result<DirichletMap> {
    dirichlet_map_all(bt, lambda).map(|d| {
        let cols = d.matrix.columns(0, bt.b1()).into_owned();
        let scale = cols.norm().max(f64::MIN_POSITIVE);
        let n = bt.n();
        let mut shifted = -bt.l().clone();
        for i in 0..n {
            shifted[(i, i)] += lambda;
        }
        let g_res = bt.g() * &cols - DMatrix::identity(bt.b1(), bt.b1());
        DirichletMap {
            lambda,
            interior_residual: (shifted * &cols).norm() / scale,
            trace_residual: g_res.norm(),
            matrix: cols,
        }
    })
}

/// As [`dirichlet_map`] but with all boundary inputs `[G; G2] z = u`.
pub fn dirichlet_map_all(bt: &BoundaryTriple, lambda: f64) -> Result<DirichletMap> {
    if !lambda.is_finite() {
        return Err(Error::param("shift must be finite"));
    }
    let n = bt.n();
    let b = bt.b1() + bt.b2();
    let ext = n + b;
    let mut sys = DMatrix::zeros(ext, ext);
    sys.view_mut((0, 0), (n, ext)).copy_from(&(-bt.l()));
    for i in 0..n {
        sys[(i, i)] += lambda;
    }
    sys.view_mut((n, 0), (b, ext)).copy_from(&bt.traces());
    let mut rhs = DMatrix::zeros(ext, b);
    rhs.view_mut((n, 0), (b, b)).fill_with_identity();
    let d = solve(&sys, &rhs).ok_or(Error::Singular {
        lambda: num_complex::Complex64::new(lambda, 0.0),
    })?;
    Ok(DirichletMap {
        lambda,
        interior_residual: 0.0,
        trace_residual: 0.0,
        matrix: d,
    })
}

/// `B = (lambda - A) P_X D_lambda` at `lambda` and at `lambda + 1`, together
/// with `C = K E` and the discrete feedthrough `K F`.
pub fn control_operator_from_triple(bt: &BoundaryTriple, lambda: f64) -> Result<BoundaryRealizationReport> {
    let res = restrict_generator(bt)?;
    let lift = bt.lifting()?;
    let b_at = |l: f64| -> Result<DMatrix<f64>> {
        let d = dirichlet_map(bt, l)?;
        let n = bt.n();
        let shifted = DMatrix::identity(n, n) * l - &res.a;
        Ok(shifted * bt.interior(&d.matrix))
    };
    let l2 = lambda + 1.0;
    let b1 = b_at(lambda)?;
    let b2 = b_at(l2)?;
    let b_lift = bt.l() * lift.lift.columns(0, bt.b1());
    let scale = b1.norm().max(f64::MIN_POSITIVE);
    let c = bt.k() * &lift.embed;
    let kf = bt.k() * lift.lift.columns(0, bt.b1());
    let realization = Realization::new(res.a, b1.clone(), c, kf.clone())?;
    Ok(BoundaryRealizationReport {
        realization,
        discrete_feedthrough: kf,
        shifts: [lambda, l2],
        shift_deviation: (&b1 - &b2).norm() / scale,
        lift_deviation: rel_dev(&b1, &b_lift),
    })
}

/// Realization with input through `G` (and `G2 z = 0`) and output `K`, built
/// from the lifting directly.
pub fn realization_of(bt: &BoundaryTriple) -> Result<Realization> {
    let lift = bt.lifting()?;
    let f1 = lift.lift.columns(0, bt.b1()).into_owned();
    Realization::new(bt.l() * &lift.embed, bt.l() * &f1, bt.k() * &lift.embed, bt.k() * &f1)
}

/// Splits `z` as `z0 + D_lambda G_all z` with `z0 in ker G_all`; returns `|G_all z0| / |z|`.
pub fn decomposition_residual(bt: &BoundaryTriple, lambda: f64, z: &DVector<f64>) -> Result<f64> {
    let d = dirichlet_map_all(bt, lambda)?;
    let gz = bt.traces() * z;
    let z0 = z - &d.matrix * gz;
    Ok((bt.traces() * z0).norm() / z.norm().max(f64::MIN_POSITIVE))
}

/// `|K z - (K E P_X z + K F G_all z)| / |K z|`: the output decomposition into
/// the kernel part and the feedthrough part.
pub fn output_decomposition_residual(bt: &BoundaryTriple, out: &DMatrix<f64>, z: &DVector<f64>) -> Result<f64> {
    let lift = bt.lifting()?;
    let x = z.rows(0, bt.n()).into_owned();
    let recon = out * (&lift.embed * x + &lift.lift * (bt.traces() * z));
    let direct = out * z;
    Ok((direct.clone() - recon).norm() / direct.norm().max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 3 extended coordinates, last one is the boundary value.
    fn toy() -> BoundaryTriple {
        let l = DMatrix::from_row_slice(2, 3, &[0.0, 1.0, 0.0, -1.0, -0.5, 1.0]);
        let g = DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 1.0]);
        let k = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
        BoundaryTriple::new(l, g, k).unwrap()
    }

    #[test]
    fn selector_trace_gives_leading_block() {
        let bt = toy();
        let r = restrict_generator(&bt).unwrap();
        assert_eq!(r.a, bt.l().columns(0, 2).into_owned());
        assert_eq!(r.kernel_dim, 2);
    }

    #[test]
    fn rank_deficient_trace_refused() {
        let l = DMatrix::zeros(2, 4);
        let g = DMatrix::from_row_slice(2, 4, &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 2.0, 2.0]);
        let k = DMatrix::zeros(1, 4);
        assert!(matches!(BoundaryTriple::new(l, g, k), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn dirichlet_constraints_and_shift_independence() {
        let bt = toy();
        let d = dirichlet_map(&bt, 1.0).unwrap();
        assert!(d.interior_residual < 1e-14);
        assert!(d.trace_residual < 1e-14);
        let rep = control_operator_from_triple(&bt, 1.0).unwrap();
        assert!(rep.shift_deviation < 1e-12);
        assert!(rep.lift_deviation < 1e-12);
    }

    #[test]
    fn k_equal_g_output_vanishes_on_kernel() {
        let bt = toy().with_k(DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 1.0])).unwrap();
        let rep = control_operator_from_triple(&bt, 2.0).unwrap();
        assert!(rep.realization.c().norm() == 0.0);
        assert!((rep.discrete_feedthrough[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let bt = toy().with_w(DMatrix::from_row_slice(1, 3, &[0.0, 1.0, 0.0])).unwrap();
        let back = BoundaryTriple::from_json(&bt.to_json().unwrap()).unwrap();
        assert_eq!(back, bt);
    }
}
