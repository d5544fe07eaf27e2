//! Geometry of the curved light cone and the hypergeometric kernel of the
//! one-dimensional representation formula.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::{gamma_fn, ConnectionCoefficients};
use crate::special::hyp2f1_internal::{diag_connection, diag_series};
use crate::special::CROSSOVER;

fn check_ell(what: &'static str, ell: f64) -> Result<()> {
    if !(ell.is_finite() && ell > 0.0) {
        return Err(Error::domain(what, format!("ell must be > 0, got {ell}")));
    }
    Ok(())
}

/// Cone radius `phi(tau) = tau^(l+1) / (l+1)`.
pub fn phi(ell: f64, tau: f64) -> Result<f64> {
    check_ell("phi", ell)?;
    if !(tau >= 0.0) {
        return Err(Error::domain("phi", format!("tau must be >= 0, got {tau}")));
    }
    Ok(phi_unchecked(ell, tau))
}

#[inline]
pub(crate) fn phi_unchecked(ell: f64, tau: f64) -> f64 {
    tau.powf(ell + 1.0) / (ell + 1.0)
}

/// Inverse of [`phi`]: `((l+1) s)^(1/(l+1))`.
pub fn phi_inverse(ell: f64, s: f64) -> Result<f64> {
    check_ell("phi_inverse", ell)?;
    if !(s >= 0.0) {
        return Err(Error::domain("phi_inverse", format!("s must be >= 0, got {s}")));
    }
    Ok(phi_inverse_unchecked(ell, s))
}

#[inline]
pub(crate) fn phi_inverse_unchecked(ell: f64, s: f64) -> f64 {
    ((ell + 1.0) * s).powf(1.0 / (ell + 1.0))
}

/// Constants derived from `ell` (and optionally `p`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelConstants {
    pub ell: f64,
    /// `ell / (2 (ell + 1))`, in `(0, 1/2)`.
    pub gamma: f64,
    /// `2^(1-2g) Gamma(2g) / Gamma(g)^2`.
    pub a_ell: f64,
    /// `2^(2g-1) (l+1)^(1-2g) Gamma(2-2g) / Gamma(1-g)^2`.
    pub b_ell: f64,
    /// `2^(2g-1) (l+1)^(-2g)`.
    pub c_ell: f64,
    /// `ell / (ell + 1) = 2 g`.
    pub mu_ell: f64,
    /// `(l+1)^(mu (p-2))`, present when `p` was supplied.
    pub c_ell_p: Option<f64>,
}

impl KernelConstants {
    pub fn new(ell: f64, p: Option<f64>) -> Result<Self> {
        check_ell("KernelConstants", ell)?;
        if let Some(p) = p {
            if !(p > 1.0) {
                return Err(Error::domain("KernelConstants", format!("p must be > 1, got {p}")));
            }
        }
        let g = ell / (2.0 * (ell + 1.0));
        let mu = ell / (ell + 1.0);
        let a_ell = 2f64.powf(1.0 - 2.0 * g) * gamma_fn(2.0 * g)? / gamma_fn(g)?.powi(2);
        let b_ell = 2f64.powf(2.0 * g - 1.0) * (ell + 1.0).powf(1.0 - 2.0 * g)
            * gamma_fn(2.0 - 2.0 * g)?
            / gamma_fn(1.0 - g)?.powi(2);
        let c_ell = 2f64.powf(2.0 * g - 1.0) * (ell + 1.0).powf(-2.0 * g);
        Ok(Self {
            ell,
            gamma: g,
            a_ell,
            b_ell,
            c_ell,
            mu_ell: mu,
            c_ell_p: p.map(|p| (ell + 1.0).powf(mu * (p - 2.0))),
        })
    }
}

/// Shorthand for [`KernelConstants::new`].
pub fn constants(ell: f64, p: Option<f64>) -> Result<KernelConstants> {
    KernelConstants::new(ell, p)
}

/// A point of the half space `t >= 0` together with its cone radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConePoint {
    pub t: f64,
    pub x: f64,
    pub radius: f64,
}

impl ConePoint {
    pub fn new(ell: f64, t: f64, x: f64) -> Result<Self> {
        Ok(Self {
            t,
            x,
            radius: phi(ell, t)?,
        })
    }
}

/// Pre-computed kernel evaluator for a fixed `ell`.
#[derive(Debug, Clone, Copy)]
pub struct Kernel {
    pub constants: KernelConstants,
    connection: ConnectionCoefficients,
}

/// Relative slack accepted on the dependence-region boundary.
const BOUNDARY_SLACK: f64 = 1e-12;

impl Kernel {
    pub fn new(ell: f64) -> Result<Self> {
        let constants = KernelConstants::new(ell, None)?;
        Ok(Self {
            connection: ConnectionCoefficients::new(constants.gamma),
            constants,
        })
    }

    /// `E` in terms of the cone radii `big_a = phi(t)`, `big_b = phi(b)` and
    /// the offset `d = y - x`. Requires `0 <= big_b <= big_a`, `|d| <= big_a - big_b`.
    pub fn eval_radii(&self, big_a: f64, big_b: f64, d: f64) -> Result<f64> {
        let d = d.abs();
        let reach = big_a - big_b;
        let tol = BOUNDARY_SLACK * big_a.max(f64::MIN_POSITIVE);
        if !(big_b >= 0.0) || reach < -tol || d > reach + tol {
            return Err(Error::domain(
                "kernel_E",
                format!("point outside the dependence region: phi(t) = {big_a}, phi(b) = {big_b}, |y - x| = {d}"),
            ));
        }
        if big_a == 0.0 {
            return Err(Error::domain("kernel_E", "degenerate denominator at t = b = 0, y = x"));
        }
        let d = d.min(reach.max(0.0));
        Ok(self.eval_radii_unchecked(big_a, big_b, d))
    }

    /// Same as [`Kernel::eval_radii`] without domain checks; `d >= 0`.
    #[inline]
    pub(crate) fn eval_radii_unchecked(&self, big_a: f64, big_b: f64, d: f64) -> f64 {
        self.eval_parts(big_a, big_b, big_a + big_b - d, big_a + big_b + d, big_a - big_b - d, big_a - big_b + d)
    }

    /// `E` at offset `d = (A - B)(1 - sigma)`, with the distances to the cone
    /// edge formed from `sigma` directly so that they keep full precision
    /// when `d` is within rounding of `A - B`.
    #[inline]
    pub(crate) fn eval_edge_offset(&self, big_a: f64, big_b: f64, sigma: f64) -> f64 {
        let reach = big_a - big_b;
        let to_edge = reach * sigma;
        let d = reach - to_edge;
        self.eval_parts(big_a, big_b, 2.0 * big_b + to_edge, big_a + big_b + d, to_edge, reach + d)
    }

    #[inline]
    fn eval_parts(&self, big_a: f64, big_b: f64, plus_l: f64, plus_r: f64, minus_l: f64, minus_r: f64) -> f64 {
        let g = self.constants.gamma;
        let prefactor = (plus_l * plus_r).powf(-g);
        if minus_l <= 0.0 {
            // Cone boundary: z = 0, F = 1.
            return prefactor;
        }
        // 1 - z = 4 A B / ((A+B)^2 - d^2), computed without cancellation.
        let one_minus_z = 4.0 * big_a * big_b / (plus_l * plus_r);
        if one_minus_z <= 0.0 {
            // b = 0: removable limit z -> 1-.
            return prefactor * self.connection.regular;
        }
        let z = (minus_l * minus_r) / (plus_l * plus_r);
        let f = if z <= CROSSOVER {
            diag_series(g, z)
        } else {
            diag_connection(g, &self.connection, one_minus_z)
        };
        prefactor * f
    }

    /// `E(t, x; b, y)`.
    pub fn eval(&self, t: f64, x: f64, b: f64, y: f64) -> Result<f64> {
        if !(t >= 0.0) || !(b >= 0.0) || b > t {
            return Err(Error::domain(
                "kernel_E",
                format!("need 0 <= b <= t, got b = {b}, t = {t}"),
            ));
        }
        let ell = self.constants.ell;
        self.eval_radii(phi_unchecked(ell, t), phi_unchecked(ell, b), y - x)
    }

    /// Lower bound `((phi(t) + phi(b))^2 - (y - x)^2)^(-g)` implied by `F >= 1`.
    pub fn lower_bound(&self, t: f64, x: f64, b: f64, y: f64) -> f64 {
        let ell = self.constants.ell;
        let s = phi_unchecked(ell, t) + phi_unchecked(ell, b);
        (s * s - (y - x) * (y - x)).powf(-self.constants.gamma)
    }
}

/// `E(t, x; b, y; ell)`.
pub fn kernel_e(t: f64, x: f64, b: f64, y: f64, ell: f64) -> Result<f64> {
    Kernel::new(ell)?.eval(t, x, b, y)
}

/// Whether `|x| <= R + phi(t)`.
pub fn in_light_cone(t: f64, x_norm: f64, r: f64, ell: f64) -> bool {
    x_norm <= r + phi_unchecked(ell, t.max(0.0))
}
