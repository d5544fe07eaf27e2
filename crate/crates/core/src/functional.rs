//! The characteristic functional `U(z) = (R+z)^g U(phi^-1(z+R), z)` of a
//! computed solution and the explicit lower bound `U >= K eps |u0 + u1|_1`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fd::{transverse_integral_of, ModelParams};
use crate::field::SpaceTimeField;
use crate::kernel::{phi_inverse, KernelConstants};

/// `U` sampled along the characteristic `phi(t) - z = R`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharacteristicTrace {
    pub zs: Vec<f64>,
    pub times: Vec<f64>,
    pub u_values: Vec<f64>,
    /// `K eps |u0 + u1|_1 (R + z)^(-g)`, the lower bound on the data part `J`.
    pub j_lower: Vec<f64>,
}

/// Transverse integral of the data, `|u0 + u1|_{L1(R^n)}` for nonnegative data.
pub fn data_l1_norm(params: &ModelParams) -> Result<f64> {
    Ok(params.u0.l1_norm(params.n)? + params.u1.l1_norm(params.n)?)
}

/// `K(R, l) = min{2^(2(g-1)) a_l R^(g-1), 2^(-2g) b_l R^(-g)}`.
#[allow(non_snake_case)]
pub fn K_constant(ell: f64, radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::domain("K_constant", format!("need R > 0, got {radius}")));
    }
    let k = KernelConstants::new(ell, None)?;
    let g = k.gamma;
    let first = 2f64.powf(2.0 * (g - 1.0)) * k.a_ell * radius.powf(g - 1.0);
    let second = 2f64.powf(-2.0 * g) * k.b_ell * radius.powf(-g);
    Ok(first.min(second))
}

#[allow(non_snake_case)]
pub fn evaluate_U(field: &SpaceTimeField, params: &ModelParams, zs: &[f64]) -> Result<CharacteristicTrace> {
    params.validate()?;
    let r = params.radius;
    let g = KernelConstants::new(params.ell, None)?.gamma;
    let bound = K_constant(params.ell, r)? * params.eps * data_l1_norm(params)?;
    let mut trace = CharacteristicTrace {
        zs: zs.to_vec(),
        times: Vec::with_capacity(zs.len()),
        u_values: Vec::with_capacity(zs.len()),
        j_lower: Vec::with_capacity(zs.len()),
    };
    for &z in zs {
        if !(z >= r) {
            return Err(Error::domain("evaluate_U", format!("need z >= R = {r}, got {z}")));
        }
        let t = phi_inverse(params.ell, z + r)?;
        let slice = field.slice_at(t)?;
        let transverse = transverse_integral_of(field, &slice, z, params.n)?;
        trace.times.push(t);
        trace.u_values.push((r + z).powf(g) * transverse);
        trace.j_lower.push(bound * (r + z).powf(-g));
    }
    Ok(trace)
}

/// Outcome of checking `U(z) >= K eps |u0 + u1|_1` along a trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataTermReport {
    pub bound: f64,
    /// `U(z) - bound` per z.
    pub margins: Vec<f64>,
    pub min_margin: f64,
    pub worst_z: f64,
    /// Whether every margin is `>= -tolerance`.
    pub holds: bool,
    /// Whether the margins increase strictly along the trace.
    pub margin_increasing: bool,
    pub tolerance: f64,
}

/// Checks the explicit-constant part of the lower bound, allowing a
/// violation of at most `tolerance` (grid error).
pub fn check_data_term_bound(trace: &CharacteristicTrace, params: &ModelParams, tolerance: f64) -> Result<DataTermReport> {
    let bound = K_constant(params.ell, params.radius)? * params.eps * data_l1_norm(params)?;
    let margins: Vec<f64> = trace.u_values.iter().map(|u| u - bound).collect();
    let (worst_z, min_margin) = trace
        .zs
        .iter()
        .zip(&margins)
        .fold((f64::NAN, f64::INFINITY), |acc, (z, m)| if *m < acc.1 { (*z, *m) } else { acc });
    Ok(DataTermReport {
        bound,
        holds: margins.iter().all(|m| *m >= -tolerance),
        margin_increasing: margins.windows(2).all(|w| w[1] > w[0]),
        margins,
        min_margin,
        worst_z,
        tolerance,
    })
}
