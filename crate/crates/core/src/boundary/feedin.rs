use nalgebra::DMatrix;
use serde::Serialize;

use super::feedthrough::{channel_feedthrough, InputTrace, ShiftSweep};
use super::triple::BoundaryTriple;
use crate::error::{Error, Result};
use crate::linalg::{inverse, rel_dev};
use crate::system::Realization;

/// Boundary feedback `G z = Q z` folded into a realization, next to the
/// realization obtained by restricting to the closed-loop trace `G - Q`.
#[derive(Clone, Debug, Serialize)]
pub struct FeedInReport {
    /// `(A^I, B^I, C^I, D^I)` from the open-loop pieces.
    #[serde(skip)]
    pub composite: Realization,
    /// Same system restricted directly to `ker [G - Q; G2]`.
    #[serde(skip)]
    pub direct: Realization,
    /// `[[Q1, Q2], [W1, W2]]`: open-loop feedthrough of the stacked system
    /// with inputs through `G`, `G2` and outputs `Q`, `W`.
    #[serde(serialize_with = "crate::boundary::ser_matrix")]
    pub stacked_feedthrough: DMatrix<f64>,
    pub generator_deviation: f64,
    pub input_deviation: f64,
    pub output_deviation: f64,
    pub feedthrough_deviation: f64,
}

impl FeedInReport {
    pub fn max_deviation(&self) -> f64 {
        self.generator_deviation
            .max(self.input_deviation)
            .max(self.output_deviation)
            .max(self.feedthrough_deviation)
    }
}

fn compose(bt: &BoundaryTriple, q: &DMatrix<f64>, out: &DMatrix<f64>) -> Result<FeedInReport> {
    let n = bt.n();
    let b1 = bt.b1();
    let b2 = bt.b2();
    if q.nrows() != b1 || q.ncols() != bt.ext_dim() {
        return Err(Error::dim("feedback trace", format!("{b1} x {}", bt.ext_dim()), format!("{:?}", q.shape())));
    }
    let lift = bt.lifting()?;
    let f1 = lift.lift.columns(0, b1);
    let f2 = lift.lift.columns(b1, b2);
    let a = bt.l() * &lift.embed;
    let bb1 = bt.l() * f1;
    let bb2 = bt.l() * f2;
    let cq = q * &lift.embed;
    let q1 = q * f1;
    let q2 = q * f2;
    let cw = out * &lift.embed;
    let w1 = out * f1;
    let w2 = out * f2;

    let loop_inv = inverse(&(DMatrix::identity(b1, b1) - &q1)).ok_or(Error::FeedthroughLoop)?;
    let composite = Realization::new(
        &a + &bb1 * &loop_inv * &cq,
        &bb2 + &bb1 * &loop_inv * &q2,
        &cw + &w1 * &loop_inv * &cq,
        &w2 + &w1 * &loop_inv * &q2,
    )?;

    let closed = bt.with_feedback(q)?;
    let cl = closed.lifting()?;
    let cf2 = cl.lift.columns(b1, b2);
    let direct = Realization::new(closed.l() * &cl.embed, closed.l() * cf2, out * &cl.embed, out * cf2)?;

    let mut stacked = DMatrix::zeros(b1 + out.nrows(), b1 + b2);
    stacked.view_mut((0, 0), (b1, b1)).copy_from(&q1);
    stacked.view_mut((0, b1), (b1, b2)).copy_from(&q2);
    stacked.view_mut((b1, 0), (out.nrows(), b1)).copy_from(&w1);
    stacked.view_mut((b1, b1), (out.nrows(), b2)).copy_from(&w2);
    debug_assert_eq!(composite.n(), n);

    Ok(FeedInReport {
        generator_deviation: rel_dev(composite.a(), direct.a()),
        input_deviation: rel_dev(composite.b(), direct.b()),
        output_deviation: rel_dev(composite.c(), direct.c()),
        feedthrough_deviation: rel_dev(composite.d(), direct.d()),
        stacked_feedthrough: stacked,
        composite,
        direct,
    })
}

/// Boundary feedback `G z = K z`, input through `G2`, no output.
pub fn feed_in_control(bt: &BoundaryTriple) -> Result<FeedInReport> {
    compose(bt, bt.k(), &DMatrix::zeros(0, bt.ext_dim()))
}

/// Boundary feedback `G z = Q z`, output `K`; `G2` (if any) stays homogeneous
/// and the input part of the report is empty when it is absent.
pub fn feed_in_observe(bt: &BoundaryTriple, q: &DMatrix<f64>) -> Result<FeedInReport> {
    compose(bt, q, bt.k())
}

/// Boundary feedback `G z = K z`, input through `G2`, output `W`.
pub fn feed_in_full(bt: &BoundaryTriple) -> Result<FeedInReport> {
    let w = bt.w().ok_or_else(|| Error::param("triple has no W trace"))?;
    compose(bt, bt.k(), w)
}

/// Feedthrough of the closed-loop system predicted from extrapolated
/// open-loop limits, against the extrapolated limit of the closed loop itself.
#[derive(Clone, Debug, Serialize)]
pub struct LimitCheck {
    #[serde(serialize_with = "crate::boundary::ser_matrix")]
    pub predicted: DMatrix<f64>,
    #[serde(serialize_with = "crate::boundary::ser_matrix")]
    pub observed: DMatrix<f64>,
    pub deviation: f64,
    pub converged: bool,
}

pub fn feed_in_limit_check(bt: &BoundaryTriple, sweep: ShiftSweep) -> Result<LimitCheck> {
    let w = bt.w().ok_or_else(|| Error::param("triple has no W trace"))?;
    let k1 = channel_feedthrough(bt, bt.k(), InputTrace::G, sweep)?;
    let k2 = channel_feedthrough(bt, bt.k(), InputTrace::G2, sweep)?;
    let w1 = channel_feedthrough(bt, w, InputTrace::G, sweep)?;
    let w2 = channel_feedthrough(bt, w, InputTrace::G2, sweep)?;
    let b1 = bt.b1();
    let loop_inv = inverse(&(DMatrix::identity(b1, b1) - &k1.k_bar)).ok_or(Error::FeedthroughLoop)?;
    let predicted = &w2.k_bar + &w1.k_bar * loop_inv * &k2.k_bar;
    let closed = bt.with_feedback(bt.k())?;
    let direct = channel_feedthrough(&closed, w, InputTrace::G2, sweep)?;
    Ok(LimitCheck {
        deviation: (&predicted - &direct.k_bar).norm() / (1.0 + predicted.norm()),
        converged: [&k1, &k2, &w1, &w2, &direct].iter().all(|e| e.converged),
        predicted,
        observed: direct.k_bar,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::standins::{wave, WaveTraces};

    #[test]
    fn wave_composite_matches_direct_restriction() {
        let bt = wave(16, WaveTraces::default()).unwrap();
        let rep = feed_in_full(&bt).unwrap();
        assert!(rep.max_deviation() < 1e-12, "{rep:?}");
        let tr = WaveTraces::default();
        let formula = tr.d1 * tr.c2 / (1.0 - tr.c1) + tr.d2;
        assert!((rep.composite.d()[(0, 0)] - formula).abs() < 1e-12);
    }

    #[test]
    fn unit_loop_gain_is_rejected() {
        let bt = wave(8, WaveTraces { c1: 1.0, ..WaveTraces::default() }).unwrap();
        assert!(feed_in_full(&bt).is_err());
    }
}
