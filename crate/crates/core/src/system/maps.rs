use nalgebra::{DMatrix, DVector};

use super::grid::{Signal, TimeGrid};
use super::realization::Realization;
use crate::error::{Error, Result};
use crate::linalg::{check_finite, expm, zoh, Scalar};

/// `e^{A dt}`.
pub fn semigroup_step<T: Scalar>(r: &Realization<T>, dt: f64) -> Result<DMatrix<T>> {
    if !(dt.is_finite() && dt >= 0.0) {
        return Err(Error::param(format!("semigroup step needs dt >= 0, got {dt}")));
    }
    let e = expm(&(r.a() * T::from_re(dt)));
    check_finite(&e, "e^{A dt}")?;
    Ok(e)
}

/// One-step zero-order-hold discretization `x_{k+1} = E x_k + G u_k` of a realization.
#[derive(Clone, Debug)]
pub struct Discretization<T: Scalar = f64> {
    pub dt: f64,
    pub e: DMatrix<T>,
    pub gamma: DMatrix<T>,
}

impl<T: Scalar> Discretization<T> {
    pub fn new(r: &Realization<T>, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::param(format!("step must be positive, got {dt}")));
        }
        let (e, gamma) = zoh(r.a(), r.b(), dt);
        check_finite(&e, "e^{A dt}")?;
        check_finite(&gamma, "hold integral")?;
        Ok(Discretization { dt, e, gamma })
    }
}

fn check_signal<T: Scalar>(u: &Signal<T>, g: &TimeGrid, dim: usize) -> Result<()> {
    if u.dim() != dim {
        return Err(Error::dim("input dimension", dim, u.dim()));
    }
    if u.grid().n_steps() != g.n_steps() || (u.grid().dt() - g.dt()).abs() > 1e-12 * g.dt() {
        return Err(Error::param("signal is not defined on the requested grid"));
    }
    Ok(())
}

/// State trajectory `x(t_k) = Phi(t_k) u` from zero initial state.
pub fn input_map<T: Scalar>(r: &Realization<T>, g: &TimeGrid, u: &Signal<T>) -> Result<Signal<T>> {
    check_signal(u, g, r.m())?;
    let disc = Discretization::new(r, g.dt())?;
    Ok(propagate(&disc, &DVector::zeros(r.n()), u))
}

/// State trajectory from `x0` under input `u`.
pub fn trajectory<T: Scalar>(
    r: &Realization<T>,
    g: &TimeGrid,
    x0: &DVector<T>,
    u: &Signal<T>,
) -> Result<Signal<T>> {
    check_signal(u, g, r.m())?;
    if x0.len() != r.n() {
        return Err(Error::dim("initial state", r.n(), x0.len()));
    }
    let disc = Discretization::new(r, g.dt())?;
    Ok(propagate(&disc, x0, u))
}

pub(crate) fn propagate<T: Scalar>(disc: &Discretization<T>, x0: &DVector<T>, u: &Signal<T>) -> Signal<T> {
    let steps = u.grid().n_steps();
    let mut xs = Vec::with_capacity(steps + 1);
    let mut x = x0.clone();
    xs.push(x.clone());
    for k in 0..steps {
        x = &disc.e * &x + &disc.gamma * u.at(k);
        xs.push(x.clone());
    }
    Signal::from_parts_unchecked(*u.grid(), xs)
}

/// `y(t_k) = C e^{A t_k} x0`.
pub fn output_map<T: Scalar>(r: &Realization<T>, g: &TimeGrid, x0: &DVector<T>) -> Result<Signal<T>> {
    if x0.len() != r.n() {
        return Err(Error::dim("initial state", r.n(), x0.len()));
    }
    let e = semigroup_step(r, g.dt())?;
    let mut x = x0.clone();
    let mut ys = Vec::with_capacity(g.n_steps() + 1);
    for k in 0..=g.n_steps() {
        if k > 0 {
            x = &e * &x;
        }
        ys.push(r.c() * &x);
    }
    Ok(Signal::from_parts_unchecked(*g, ys))
}

/// `y(t_k) = C x(t_k) + D u(t_k)` from zero initial state.
pub fn io_map<T: Scalar>(r: &Realization<T>, g: &TimeGrid, u: &Signal<T>) -> Result<Signal<T>> {
    let x = input_map(r, g, u)?;
    let ys = x
        .values()
        .iter()
        .zip(u.values())
        .map(|(x, u)| r.c() * x + r.d() * u)
        .collect();
    Ok(Signal::from_parts_unchecked(*g, ys))
}

/// Matrix forms of the four maps on a grid of `N` steps.
///
/// * `input_map` is `n x N m`: block column `j` is `E^{N-1-j} G`, so that
///   `Phi(t_N) u = input_map * [u_0; ...; u_{N-1}]`.
/// * `output_map` is `N p x n`: block row `k` is `C E^k`.
/// * `io_map` is `N p x N m`: block `(k, j)` is `D` on the diagonal and
///   `C E^{k-1-j} G` below it.
///
/// These are the raw (unweighted) coefficient maps; `weighted_*` rescale them
/// to discrete L2 geometry.
#[derive(Clone, Debug)]
pub struct QuadrupleMaps<T: Scalar = f64> {
    pub grid: TimeGrid,
    pub semigroup_samples: Vec<DMatrix<T>>,
    pub input_map: DMatrix<T>,
    pub output_map: DMatrix<T>,
    pub io_map: DMatrix<T>,
    m: usize,
    p: usize,
}

impl<T: Scalar> QuadrupleMaps<T> {
    pub fn assemble(r: &Realization<T>, g: &TimeGrid) -> Result<Self> {
        let (n, m, p) = (r.n(), r.m(), r.p());
        let steps = g.n_steps();
        let disc = Discretization::new(r, g.dt())?;

        let mut powers = Vec::with_capacity(steps + 1);
        powers.push(DMatrix::<T>::identity(n, n));
        for k in 1..=steps {
            let next = &disc.e * &powers[k - 1];
            powers.push(next);
        }

        // Markov-like blocks C E^i G, i = 0..steps-2, shared by the io map.
        let eg: Vec<DMatrix<T>> = powers[..steps].iter().map(|pk| pk * &disc.gamma).collect();

        let mut input_map = DMatrix::zeros(n, steps * m);
        for j in 0..steps {
            input_map
                .view_mut((0, j * m), (n, m))
                .copy_from(&eg[steps - 1 - j]);
        }

        let mut output_map = DMatrix::zeros(steps * p, n);
        for k in 0..steps {
            output_map
                .view_mut((k * p, 0), (p, n))
                .copy_from(&(r.c() * &powers[k]));
        }

        let markov: Vec<DMatrix<T>> = eg.iter().map(|x| r.c() * x).collect();
        let mut io_map = DMatrix::zeros(steps * p, steps * m);
        for k in 0..steps {
            io_map.view_mut((k * p, k * m), (p, m)).copy_from(r.d());
            for j in 0..k {
                io_map
                    .view_mut((k * p, j * m), (p, m))
                    .copy_from(&markov[k - 1 - j]);
            }
        }

        Ok(QuadrupleMaps {
            grid: *g,
            semigroup_samples: powers,
            input_map,
            output_map,
            io_map,
            m,
            p,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.m
    }

    pub fn output_dim(&self) -> usize {
        self.p
    }

    /// `Phi(t_N)` as an operator on discrete L2 (isometric coefficient scaling).
    pub fn weighted_input_map(&self) -> DMatrix<T> {
        &self.input_map * T::from_re(1.0 / self.grid.dt().sqrt())
    }

    /// `Psi(t_N)` into discrete L2.
    pub fn weighted_output_map(&self) -> DMatrix<T> {
        &self.output_map * T::from_re(self.grid.dt().sqrt())
    }

    /// `F(t_N)` between discrete L2 spaces (the weights cancel).
    pub fn weighted_io_map(&self) -> DMatrix<T> {
        self.io_map.clone()
    }

    /// Largest deviation from block-Toeplitz structure, relative to the largest block.
    pub fn toeplitz_defect(&self) -> f64 {
        let steps = self.grid.n_steps();
        let (m, p) = (self.m, self.p);
        let block = |k: usize, j: usize| self.io_map.view((k * p, j * m), (p, m)).into_owned();
        let scale = self.io_map.camax().max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for k in 0..steps {
            for j in 0..steps {
                let b = block(k, j);
                let dev = if j > k {
                    b.camax()
                } else {
                    (b - block(k - j, 0)).camax()
                };
                worst = worst.max(dev);
            }
        }
        worst / scale
    }

    /// Stack signal samples `0..N-1` into one coefficient vector.
    pub fn stack(u: &Signal<T>) -> DVector<T> {
        let steps = u.grid().n_steps();
        let dim = u.dim();
        let mut out = DVector::zeros(steps * dim);
        for k in 0..steps {
            out.rows_mut(k * dim, dim).copy_from(u.at(k));
        }
        out
    }
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
    fn semigroup_oracles() {
        let r = Realization::strictly_proper(
            DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0]),
            DMatrix::zeros(2, 1),
            DMatrix::zeros(1, 2),
        )
        .unwrap();
        let e = semigroup_step(&r, 1.0).unwrap();
        assert!((e[(0, 0)] - (-1.0f64).exp()).abs() < 1e-15);
        assert!((e[(1, 1)] - (-2.0f64).exp()).abs() < 1e-15);

        let nil = Realization::strictly_proper(
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            DMatrix::zeros(2, 1),
            DMatrix::zeros(1, 2),
        )
        .unwrap();
        let e = semigroup_step(&nil, 0.7).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, 0.7, 0.0, 1.0]);
        assert!((e - expected).norm() < 1e-15);
        assert!(semigroup_step(&nil, -1.0).is_err());
    }

    #[test]
    fn integrator_input_map() {
        let r = scalar(0.0, 1.0, 1.0, 0.0);
        let g = TimeGrid::new(1.0, 10).unwrap();
        let u = Signal::constant(g, DVector::from_element(1, 1.0));
        let x = input_map(&r, &g, &u).unwrap();
        assert!((x.last()[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn decay_closed_forms() {
        let r = scalar(-1.0, 1.0, 1.0, 0.0);
        let g = TimeGrid::new(2.0, 16).unwrap();
        let u = Signal::constant(g, DVector::from_element(1, 1.0));
        let y = io_map(&r, &g, &u).unwrap();
        for (k, t) in g.times().enumerate() {
            assert!((y.at(k)[0] - (1.0 - (-t).exp())).abs() < 1e-14);
        }
        let r2 = scalar(-1.0, 0.0, 2.0, 0.0);
        let y = output_map(&r2, &g, &DVector::from_element(1, 1.0)).unwrap();
        for (k, t) in g.times().enumerate() {
            assert!((y.at(k)[0] - 2.0 * (-t).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn pure_feedthrough_and_dimension_errors() {
        let r = Realization::new(
            DMatrix::<f64>::zeros(1, 1),
            DMatrix::zeros(1, 2),
            DMatrix::zeros(2, 1),
            DMatrix::identity(2, 2),
        )
        .unwrap();
        let g = TimeGrid::new(1.0, 5).unwrap();
        let u = Signal::from_fn(g, |t| DVector::from_vec(vec![t, -t])).unwrap();
        let y = io_map(&r, &g, &u).unwrap();
        assert_eq!(y, u);
        let bad = Signal::<f64>::zeros(g, 3);
        assert!(input_map(&r, &g, &bad).is_err());
        assert!(output_map(&r, &g, &DVector::zeros(4)).is_err());
    }

    #[test]
    fn matrices_match_recursions() {
        let r = Realization::new(
            DMatrix::from_row_slice(2, 2, &[-0.3, 1.0, -1.0, -0.2]),
            DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.5]),
            DMatrix::from_element(1, 1, 0.25),
        )
        .unwrap();
        let g = TimeGrid::new(1.5, 12).unwrap();
        let u = Signal::from_fn(g, |t| DVector::from_element(1, (3.0 * t).sin())).unwrap();
        let q = QuadrupleMaps::assemble(&r, &g).unwrap();
        let coeffs = QuadrupleMaps::stack(&u);
        let x = input_map(&r, &g, &u).unwrap();
        assert!((&q.input_map * &coeffs - x.last()).norm() < 1e-13);
        let y = io_map(&r, &g, &u).unwrap();
        let yv = &q.io_map * &coeffs;
        for k in 0..g.n_steps() {
            assert!((yv[k] - y.at(k)[0]).abs() < 1e-13);
        }
        assert!(q.toeplitz_defect() < 1e-15);
        assert_eq!(q.semigroup_samples[0], DMatrix::identity(2, 2));
    }
}
