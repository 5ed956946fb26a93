//! Closed-form results for the single-DOF corner-cut element.
//!
//! A linear element on `[0, 1]^d` with all DOFs on the faces `x_i = 0`
//! constrained keeps the single basis function `N = x_1 ... x_d`. Its
//! physical part is `[0, chi]^d`, the rest is scaled by `alpha`.
//!
//! Critical time steps always use `2 / sqrt(lambda)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleDofResult {
    pub chi: f64,
    pub alpha: f64,
    pub dim: usize,
    pub mass: f64,
    pub stiffness: f64,
    pub lambda: f64,
    pub dt_crit: f64,
}

fn check(chi: f64, alpha: f64, dim: usize) -> Result<()> {
    if !(0.0..=1.0).contains(&chi) {
        return Err(Error::invalid(format!(
            "cut parameter must lie in [0, 1], got {chi}"
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    Ok(())
}

/// `((1 - alpha) chi^(3d) + alpha) / 3^d`
pub fn single_dof_mass(chi: f64, alpha: f64, dim: usize) -> f64 {
    let d = dim as i32;
    ((1.0 - alpha) * chi.powi(3 * d) + alpha) / 3f64.powi(d)
}

/// `d / 3^(d-1) ((1 - alpha) chi^(3d-2) + alpha)`
pub fn single_dof_stiffness(chi: f64, alpha: f64, dim: usize) -> f64 {
    let d = dim as i32;
    dim as f64 / 3f64.powi(d - 1) * ((1.0 - alpha) * chi.powi(3 * d - 2) + alpha)
}

/// `3d ((1 - alpha) chi^(3d-2) + alpha) / ((1 - alpha) chi^(3d) + alpha)`
pub fn single_dof_lambda(chi: f64, alpha: f64, dim: usize) -> f64 {
    let d = dim as i32;
    3.0 * dim as f64 * ((1.0 - alpha) * chi.powi(3 * d - 2) + alpha)
        / ((1.0 - alpha) * chi.powi(3 * d) + alpha)
}

pub fn single_dof(chi: f64, alpha: f64, dim: usize) -> Result<SingleDofResult> {
    check(chi, alpha, dim)?;
    if chi == 0.0 && alpha == 0.0 {
        return Err(Error::invalid("chi = alpha = 0 leaves the system without mass"));
    }
    let lambda = single_dof_lambda(chi, alpha, dim);
    Ok(SingleDofResult {
        chi,
        alpha,
        dim,
        mass: single_dof_mass(chi, alpha, dim),
        stiffness: single_dof_stiffness(chi, alpha, dim),
        lambda,
        dt_crit: 2.0 / lambda.sqrt(),
    })
}

/// Eigenvalue without stabilization, `3d / chi^2`.
pub fn unstabilized_lambda(chi: f64, dim: usize) -> Result<f64> {
    if !(chi > 0.0 && chi <= 1.0) {
        return Err(Error::invalid(format!(
            "cut parameter must lie in (0, 1], got {chi}"
        )));
    }
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    Ok(3.0 * dim as f64 / (chi * chi))
}

/// `d lambda / d chi` in the factored form whose zeros give the worst cut.
pub fn lambda_chi_derivative(chi: f64, alpha: f64, dim: usize) -> f64 {
    let d = dim as f64;
    let c3d = chi.powi(3 * dim as i32);
    let num = 3.0
        * chi.powi(3 * dim as i32 - 3)
        * d
        * (alpha - 1.0)
        * (3.0 * alpha * chi * chi * d - 2.0 * alpha * c3d - 3.0 * alpha * d + 2.0 * alpha + 2.0 * c3d);
    let den = -alpha * c3d + alpha + c3d;
    num / (den * den)
}

/// Asymptotic maximizer of the eigenvalue, `(alpha (3d - 2) / 2)^(1 / 3d)`.
pub fn stationary_chi(alpha: f64, dim: usize) -> f64 {
    let d = dim as f64;
    (alpha * (3.0 * d - 2.0) / 2.0).powf(1.0 / (3.0 * d))
}

/// `2 ((3d - 2) / 2)^(1 - 2 / 3d)`
pub fn c_lambda(dim: usize) -> f64 {
    let d = dim as f64;
    2.0 * ((3.0 * d - 2.0) / 2.0).powf(1.0 - 2.0 / (3.0 * d))
}

/// Small-alpha estimate of the minimum critical time step over all cuts.
pub fn asymptotic_dt_min(alpha: f64, dim: usize) -> f64 {
    2.0 / c_lambda(dim).sqrt() * alpha.powf(1.0 / (3.0 * dim as f64))
}

/// Smallest critical time step over the sampled cut parameters.
pub fn min_dt_over_chi(alpha: f64, dim: usize, chis: &[f64]) -> Result<f64> {
    let mut best = f64::INFINITY;
    for &chi in chis {
        best = best.min(single_dof(chi, alpha, dim)?.dt_crit);
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::invalid("empty cut parameter sample"))
    }
}
