//! `F(g, g; 1; z)` for `0 < g < 1/2`, `0 <= z < 1`.
//!
//! Power series up to [`CROSSOVER`], connection formula in `1 - z` above it.
//! The connection formula is valid because `1 - 2g` is never an integer on
//! this parameter range.

use super::gamma::gamma_unchecked;
use crate::error::{Error, Result};

/// Switch point between the two evaluation branches.
pub const CROSSOVER: f64 = 0.75;

const MAX_TERMS: usize = 20_000;

/// Gauss series `sum (a)_k (b)_k / ((c)_k k!) z^k` for `|z| < 1`.
pub fn hyp2f1_series(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if c <= 0.0 && c == c.floor() {
        return Err(Error::domain("hyp2f1_series", format!("c = {c} is a pole")));
    }
    if !(z.abs() < 1.0) {
        return Err(Error::domain("hyp2f1_series", format!("|z| = {} >= 1", z.abs())));
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * z;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence {
        what: "hyp2f1_series",
        estimate: sum,
        error: term.abs(),
    })
}

/// Gamma-ratio coefficients of the connection formula at `z = 1`.
#[derive(Debug, Clone, Copy)]
pub struct ConnectionCoefficients {
    /// `Gamma(1 - 2g) / Gamma(1 - g)^2`, also the limit `F(g, g; 1; 1-)`.
    pub regular: f64,
    /// `Gamma(2g - 1) / Gamma(g)^2`, multiplies `(1 - z)^(1 - 2g)`.
    pub singular: f64,
}

impl ConnectionCoefficients {
    pub fn new(gamma: f64) -> Self {
        let g1 = gamma_unchecked(1.0 - gamma);
        let g0 = gamma_unchecked(gamma);
        Self {
            regular: gamma_unchecked(1.0 - 2.0 * gamma) / (g1 * g1),
            singular: gamma_unchecked(2.0 * gamma - 1.0) / (g0 * g0),
        }
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 0.5) {
        return Err(Error::domain(
            "hyp2f1_diag",
            format!("gamma must lie in (0, 1/2), got {gamma}"),
        ));
    }
    Ok(())
}

/// `F(g, g; 1; z)` on `[0, 1)`.
pub fn hyp2f1_diag(gamma: f64, z: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if !(0.0..1.0).contains(&z) {
        return Err(Error::domain(
            "hyp2f1_diag",
            format!("z must lie in [0, 1), got {z}"),
        ));
    }
    Ok(if z <= CROSSOVER {
        diag_series(gamma, z)
    } else {
        diag_connection(gamma, &ConnectionCoefficients::new(gamma), 1.0 - z)
    })
}

/// The finite limit `F(g, g; 1; 1-) = Gamma(1 - 2g) / Gamma(1 - g)^2`.
pub fn hyp2f1_diag_at_one(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(ConnectionCoefficients::new(gamma).regular)
}

pub(crate) fn diag_series(gamma: f64, z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        let r = (gamma + k) / (k + 1.0);
        term *= r * r * z;
        sum += term;
        k += 1.0;
        if term <= 1e-17 * sum || k > MAX_TERMS as f64 {
            return sum;
        }
    }
}

/// Connection-formula branch in terms of `w = 1 - z`.
pub(crate) fn diag_connection(gamma: f64, cc: &ConnectionCoefficients, w: f64) -> f64 {
    let f1 = small_series(gamma, gamma, 2.0 * gamma, w);
    let f2 = small_series(1.0 - gamma, 1.0 - gamma, 2.0 - 2.0 * gamma, w);
    cc.regular * f1 + w.powf(1.0 - 2.0 * gamma) * cc.singular * f2
}

/// Series for small `w` (`w <= 1/4` in practice); all parameters positive.
fn small_series(a: f64, b: f64, c: f64, w: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * w;
        sum += term;
        k += 1.0;
        if term.abs() <= 1e-17 * sum.abs() || k > MAX_TERMS as f64 {
            return sum;
        }
    }
}

/// Both branches evaluated at the same point, for continuity checks.
pub fn branch_values(gamma: f64, z: f64) -> (f64, f64) {
    (
        diag_series(gamma, z),
        diag_connection(gamma, &ConnectionCoefficients::new(gamma), 1.0 - z),
    )
}
