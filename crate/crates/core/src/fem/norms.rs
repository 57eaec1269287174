//! Discrete norms evaluated by cell quadrature.

use super::{deformation_tensor, frobenius, Discretization, Field, SpaceKind};
use crate::error::{Error, Result};

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::invalid(format!("norm exponent must be finite and at least 1, got {p}")));
    }
    Ok(())
}

/// Gradient seminorm `(∫|∇u|^p)^{1/p}` of a field on any of the spaces.
pub fn norm_w1p(disc: &Discretization, u: &Field, p: f64) -> Result<f64> {
    match u.kind {
        SpaceKind::Velocity => velocity_w1p(disc, &u.values, p),
        _ => scalar_w1p(disc, &u.values, p),
    }
}

/// `(∫|∇v|^p)^{1/p}` with the Frobenius norm of the velocity gradient.
pub fn velocity_w1p(disc: &Discretization, v: &[f64], p: f64) -> Result<f64> {
    check_p(p)?;
    let mut acc = 0.0;
    for c in 0..disc.n_cells() {
        for q in 0..disc.n_qp() {
            let (_, g) = disc.velocity_at_qp(v, c, q);
            acc += disc.cells[c].qp[q].w * frobenius(&g).powf(p);
        }
    }
    Ok(acc.powf(1.0 / p))
}

pub fn scalar_w1p(disc: &Discretization, u: &[f64], p: f64) -> Result<f64> {
    check_p(p)?;
    let mut acc = 0.0;
    for c in 0..disc.n_cells() {
        let g = disc.scalar_grad(u, c);
        let m = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        acc += disc.cells[c].volume * m.powf(p);
    }
    Ok(acc.powf(1.0 / p))
}

/// `(∫|D(v)|^p)^{1/p}`.
pub fn strain_norm(disc: &Discretization, v: &[f64], p: f64) -> Result<f64> {
    check_p(p)?;
    let mut acc = 0.0;
    for c in 0..disc.n_cells() {
        for q in 0..disc.n_qp() {
            let (_, g) = disc.velocity_at_qp(v, c, q);
            acc += disc.cells[c].qp[q].w * frobenius(&deformation_tensor(&g)).powf(p);
        }
    }
    Ok(acc.powf(1.0 / p))
}

/// `(∫|u|^p)^{1/p}` for a linear scalar field.
pub fn scalar_lp(disc: &Discretization, u: &[f64], p: f64) -> Result<f64> {
    check_p(p)?;
    let mut acc = 0.0;
    for c in 0..disc.n_cells() {
        for q in 0..disc.n_qp() {
            let val = disc.scalar_at(u, c, disc.p1_values_at(q));
            acc += disc.cells[c].qp[q].w * val.abs().powf(p);
        }
    }
    Ok(acc.powf(1.0 / p))
}

/// `(∫|v|^p)^{1/p}` for a velocity field.
pub fn velocity_lp(disc: &Discretization, v: &[f64], p: f64) -> Result<f64> {
    check_p(p)?;
    let mut acc = 0.0;
    for c in 0..disc.n_cells() {
        for q in 0..disc.n_qp() {
            let (val, _) = disc.velocity_at_qp(v, c, q);
            let m = (val[0] * val[0] + val[1] * val[1] + val[2] * val[2]).sqrt();
            acc += disc.cells[c].qp[q].w * m.powf(p);
        }
    }
    Ok(acc.powf(1.0 / p))
}

/// `∫|D(u)|² / ∫|∇u|²`.
pub fn korn_ratio(disc: &Discretization, u: &[f64]) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for c in 0..disc.n_cells() {
        for q in 0..disc.n_qp() {
            let w = disc.cells[c].qp[q].w;
            let (_, g) = disc.velocity_at_qp(u, c, q);
            num += w * frobenius(&deformation_tensor(&g)).powi(2);
            den += w * frobenius(&g).powi(2);
        }
    }
    if den == 0.0 {
        return Err(Error::invalid("Korn ratio of a field with zero gradient"));
    }
    Ok(num / den)
}
