//! Closed-form transfer functions of the clamped beam with shear input at the tip.
//!
//! With `t = sqrt(s/2)`:
//!
//! * `H(s)`, shear to tip slope `w_x(1)`:
//!   `(2 sh ch sin cos - (ch sin + sh cos)^2) / (2 t^2 (ch^2 + cos^2))`.
//! * `H1(s)`, shear to root curvature `w_xx(0)`:
//!   `-(ch sin + sh cos) / (t (ch^2 + cos^2))`.
//!
//! For `t > 20` both are evaluated with the hyperbolic factors divided out
//! (`tanh` and `sech` only), so no `cosh` overflows.

use crate::error::{Error, Result};

/// Switch to the factored forms above this `t`.
const STABLE_T: f64 = 20.0;

fn half_root(s: f64) -> Result<f64> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::param(format!("transfer functions need s > 0, got {s}")));
    }
    Ok((s / 2.0).sqrt())
}

pub fn beam_transfer_h(s: f64) -> Result<f64> {
    let t = half_root(s)?;
    Ok(if t <= STABLE_T { h_direct(t) } else { h_factored(t) })
}

pub fn beam_transfer_h1(s: f64) -> Result<f64> {
    let t = half_root(s)?;
    Ok(if t <= STABLE_T { h1_direct(t) } else { h1_factored(t) })
}

fn h_direct(t: f64) -> f64 {
    let (sn, cs) = t.sin_cos();
    let (sh, ch) = (t.sinh(), t.cosh());
    let mix = ch * sn + sh * cs;
    (2.0 * sh * ch * sn * cs - mix * mix) / (2.0 * t * t * (ch * ch + cs * cs))
}

fn h_factored(t: f64) -> f64 {
    let (sn, cs) = t.sin_cos();
    let th = t.tanh();
    let sech = sech(t);
    let mix = sn + th * cs;
    (2.0 * th * sn * cs - mix * mix) / (2.0 * t * t * (1.0 + cs * cs * sech * sech))
}

fn h1_direct(t: f64) -> f64 {
    let (sn, cs) = t.sin_cos();
    let (sh, ch) = (t.sinh(), t.cosh());
    -(ch * sn + sh * cs) / (t * (ch * ch + cs * cs))
}

fn h1_factored(t: f64) -> f64 {
    let (sn, cs) = t.sin_cos();
    let sech = sech(t);
    -(sn + t.tanh() * cs) * sech / (t * (1.0 + cs * cs * sech * sech))
}

/// `|H1(s)| t cosh(t)`, computed without forming `cosh`.
pub fn beam_transfer_h1_scaled(s: f64) -> Result<f64> {
    let t = half_root(s)?;
    let (sn, cs) = t.sin_cos();
    let sech = sech(t);
    Ok((sn + t.tanh() * cs).abs() / (1.0 + cs * cs * sech * sech))
}

fn sech(t: f64) -> f64 {
    let e = (-t).exp();
    2.0 * e / (1.0 + e * e)
}
