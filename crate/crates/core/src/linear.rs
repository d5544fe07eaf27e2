//! Pointwise evaluation of the 1D linear solution through the representation
//! formula: two endpoint-singular data integrals plus the Duhamel term.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Geometry, SpaceTimeField};
use crate::kernel::{phi, phi_unchecked, Kernel, KernelConstants};
use crate::profile::DataProfile;
use crate::quad::{composite_legendre, doubling, graded_breaks, integrate_weighted, Estimate};

/// A forcing term `g(t, x)`.
pub trait SourceFn: Sync {
    fn eval(&self, t: f64, x: f64) -> f64;

    /// `true` if `g` vanishes identically.
    fn is_zero(&self) -> bool {
        false
    }
}

impl<F: Fn(f64, f64) -> f64 + Sync> SourceFn for F {
    fn eval(&self, t: f64, x: f64) -> f64 {
        self(t, x)
    }
}

/// Serializable sources for run configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    #[default]
    Zero,
    Constant { value: f64 },
    /// `coef * t^power`.
    TimePower { coef: f64, power: f64 },
}

impl SourceFn for SourceSpec {
    fn eval(&self, t: f64, _x: f64) -> f64 {
        match *self {
            SourceSpec::Zero => 0.0,
            SourceSpec::Constant { value } => value,
            SourceSpec::TimePower { coef, power } => coef * t.powf(power),
        }
    }

    fn is_zero(&self) -> bool {
        match *self {
            SourceSpec::Zero => true,
            SourceSpec::Constant { value } => value == 0.0,
            SourceSpec::TimePower { coef, .. } => coef == 0.0,
        }
    }
}

/// Grading ratio of the outer `b` panels and the number of levels toward
/// `b = 0` and `b = t`.
const OUTER_RATIO: f64 = 0.25;
const OUTER_LEVELS: (usize, usize) = (17, 4);
/// Grading ratio of the inner panels toward the edges of the dependence
/// interval, where the kernel nearly blows up for small `b`.
const INNER_RATIO: f64 = 0.2;
const INNER_MAX_LEVELS: usize = 40;
const DUHAMEL_START: usize = 8;
const DUHAMEL_CAP: usize = 128;

fn check_point(t: f64, tol: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain("linear_solver", format!("need t > 0, got {t}")));
    }
    if !(tol > 0.0) {
        return Err(Error::domain("linear_solver", format!("need tol > 0, got {tol}")));
    }
    Ok(())
}

/// Breakpoints of `profile` seen from `x` at cone radius `radius`, in the
/// reference variable `s = (y - x) / radius`.
fn reference_breakpoints(profile: &DataProfile, x: f64, radius: f64) -> Vec<f64> {
    let mut bps = profile.breakpoints();
    if let DataProfile::GaussianBump { .. } = profile {
        let r = profile.effective_radius();
        bps.extend([-r, -0.5 * r, 0.0, 0.5 * r, r]);
    }
    bps.into_iter().map(|b| (b - x) / radius).collect()
}

/// `eps` times the two data terms at `(t, x)`.
pub fn homogeneous_value(
    u0: &DataProfile,
    u1: &DataProfile,
    eps: f64,
    t: f64,
    x: f64,
    ell: f64,
    tol: f64,
) -> Result<Estimate> {
    check_point(t, tol)?;
    let k = KernelConstants::new(ell, None)?;
    let g = k.gamma;
    let radius = phi(ell, t)?;
    let mut total = Estimate::zero();
    if !u0.is_zero() {
        let bps = reference_breakpoints(u0, x, radius);
        let est = integrate_weighted(|s| u0.eval(x + radius * s), g - 1.0, g - 1.0, &bps, tol)?;
        total = total + est.scale(k.a_ell);
    }
    if !u1.is_zero() {
        let bps = reference_breakpoints(u1, x, radius);
        let est = integrate_weighted(|s| u1.eval(x + radius * s), -g, -g, &bps, tol)?;
        total = total + est.scale(k.b_ell * radius.powf(1.0 - 2.0 * g));
    }
    Ok(total.scale(eps))
}

/// The Duhamel term `c_l * int_0^t int g(b, y) E dy db` at `(t, x)`.
pub fn duhamel_value<G: SourceFn + ?Sized>(
    g: &G,
    t: f64,
    x: f64,
    ell: f64,
    tol: f64,
) -> Result<Estimate> {
    check_point(t, tol)?;
    let kernel = Kernel::new(ell)?;
    duhamel_with(&kernel, g, t, x, tol)
}

fn duhamel_with<G: SourceFn + ?Sized>(
    kernel: &Kernel,
    g: &G,
    t: f64,
    x: f64,
    tol: f64,
) -> Result<Estimate> {
    if g.is_zero() {
        return Ok(Estimate::zero());
    }
    let ell = kernel.constants.ell;
    let big_a = phi_unchecked(ell, t);
    let outer = graded_breaks(0.0, t, OUTER_RATIO, OUTER_LEVELS.0, OUTER_LEVELS.1);

    let inner = |b: f64, order: usize| -> Result<f64> {
        let big_b = phi_unchecked(ell, b);
        let reach = big_a - big_b;
        if reach <= 0.0 {
            return Ok(0.0);
        }
        // The kernel's singular set |d| = A + B sits at distance delta
        // beyond either edge of the reference interval.
        let delta = 2.0 * big_b / reach;
        let levels = if delta >= 0.5 {
            1
        } else {
            ((delta.ln() / INNER_RATIO.ln()).ceil() as usize + 1).min(INNER_MAX_LEVELS)
        };
        // sigma = 1 - |s| in [0, 1], graded toward the edge sigma = 0.
        let breaks = graded_breaks(0.0, 1.0, INNER_RATIO, levels, 0);
        let v = composite_legendre(&breaks, order, |sigma| {
            let e = kernel.eval_edge_offset(big_a, big_b, sigma);
            let d = reach * (1.0 - sigma);
            (g.eval(b, x - d) + g.eval(b, x + d)) * e
        })?;
        Ok(reach * v)
    };

    let est = doubling("duhamel_value", DUHAMEL_START, DUHAMEL_CAP, tol, |order| {
        let mut err = None;
        let v = composite_legendre(&outer, order, |b| match inner(b, order) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        })?;
        match err {
            Some(e) => Err(e),
            None => Ok(v),
        }
    })?;
    Ok(est.scale(kernel.constants.c_ell))
}

/// Everything needed to evaluate the linear solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearProblem {
    pub ell: f64,
    pub eps: f64,
    pub u0: DataProfile,
    pub u1: DataProfile,
    #[serde(default)]
    pub source: SourceSpec,
    pub tol: f64,
}

impl LinearProblem {
    pub fn validate(&self) -> Result<()> {
        KernelConstants::new(self.ell, None)?;
        if !(self.eps > 0.0) {
            return Err(Error::domain("LinearProblem", format!("need eps > 0, got {}", self.eps)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::domain("LinearProblem", format!("need tol > 0, got {}", self.tol)));
        }
        self.u0.validate()?;
        self.u1.validate()
    }

    /// Full solution `u(t, x)` with its error estimate.
    pub fn value(&self, t: f64, x: f64) -> Result<Estimate> {
        let kernel = Kernel::new(self.ell)?;
        self.value_with(&kernel, t, x)
    }

    fn value_with(&self, kernel: &Kernel, t: f64, x: f64) -> Result<Estimate> {
        let h = homogeneous_value(&self.u0, &self.u1, self.eps, t, x, self.ell, self.tol)?;
        let d = duhamel_with(kernel, &self.source, t, x, self.tol)?;
        Ok(h + d)
    }
}

/// Evaluates the solution on the tensor grid `times x xs`, in parallel,
/// assembled by index. Per-point error estimates go to `field.errors`.
pub fn linear_solution_slice(problem: &LinearProblem, times: &[f64], xs: &[f64]) -> Result<SpaceTimeField> {
    problem.validate()?;
    if times.is_empty() || !times.windows(2).all(|w| w[0] < w[1]) || !(times[0] > 0.0) {
        return Err(Error::domain("linear_solution_slice", "times must be positive and increasing"));
    }
    if !xs.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::domain("linear_solution_slice", "xs must be increasing"));
    }
    let kernel = Kernel::new(problem.ell)?;
    let nx = xs.len();
    let points: Vec<Estimate> = (0..times.len() * nx)
        .into_par_iter()
        .map(|i| problem.value_with(&kernel, times[i / nx], xs[i % nx]))
        .collect::<Result<_>>()?;
    let dx = if nx > 1 { xs[1] - xs[0] } else { 0.0 };
    let mut field = SpaceTimeField::new(Geometry::Line, dx, xs.to_vec());
    let mut errors = Vec::with_capacity(times.len());
    for (k, row) in points.chunks(nx).enumerate() {
        field.push(times[k], row.iter().map(|e| e.value).collect());
        errors.push(row.iter().map(|e| e.error).collect());
    }
    field.errors = Some(errors);
    Ok(field)
}
