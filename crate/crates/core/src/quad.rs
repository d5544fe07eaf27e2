//! Composite quadrature built on the Gauss-Jacobi rules: endpoint-weighted
//! integrals with interior breakpoints, graded panel meshes, and order
//! doubling for error estimates.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::{gauss_jacobi_rule, gauss_legendre};

/// A quadrature value together with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn zero() -> Self {
        Self {
            value: 0.0,
            error: 0.0,
        }
    }

    pub fn scale(self, k: f64) -> Self {
        Self {
            value: k * self.value,
            error: k.abs() * self.error,
        }
    }
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, o: Estimate) -> Estimate {
        Estimate {
            value: self.value + o.value,
            error: self.error + o.error,
        }
    }
}

/// Default starting order for the weighted integrals.
pub const START_ORDER: usize = 64;
/// Cap on the per-piece order.
pub const MAX_ORDER: usize = 1024;

/// `true` when `err` meets `tol` in the mixed absolute/relative sense used
/// throughout: `err <= tol * max(1, |value|)`.
pub fn within(err: f64, value: f64, tol: f64) -> bool {
    err <= tol * value.abs().max(1.0)
}

/// `int_{-1}^{1} f(s) (1 - s)^alpha (1 + s)^beta ds` with `f` smooth between
/// the given breakpoints. Pieces touching an endpoint keep that endpoint's
/// Jacobi weight; interior pieces are plain Gauss-Legendre.
pub fn integrate_weighted<F>(
    f: F,
    alpha: f64,
    beta: f64,
    breakpoints: &[f64],
    tol: f64,
) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
{
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|b| *b > -1.0 + 1e-14 && *b < 1.0 - 1e-14)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

    let eval = |order: usize| -> Result<f64> {
        if cuts.is_empty() {
            return Ok(gauss_jacobi_rule(alpha, beta, order)?.integrate(&f));
        }
        let mut total = 0.0;
        let mut edges = Vec::with_capacity(cuts.len() + 2);
        edges.push(-1.0);
        edges.extend_from_slice(&cuts);
        edges.push(1.0);
        let last = edges.len() - 2;
        for (i, w) in edges.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            total += if i == 0 {
                // (1 + s)^beta singular at -1, (1 - s)^alpha smooth here.
                gauss_jacobi_rule(0.0, beta, order)?
                    .integrate_on(a, b, |s| f(s) * (1.0 - s).powf(alpha))
            } else if i == last {
                gauss_jacobi_rule(alpha, 0.0, order)?
                    .integrate_on(a, b, |s| f(s) * (1.0 + s).powf(beta))
            } else {
                gauss_legendre(order)?.integrate_on(a, b, |s| {
                    f(s) * (1.0 - s).powf(alpha) * (1.0 + s).powf(beta)
                })
            };
        }
        Ok(total)
    };

    doubling("integrate_weighted", START_ORDER, MAX_ORDER, tol, eval)
}

/// Evaluate at orders `m, 2m, 4m, ...` until two successive values agree.
pub fn doubling<E>(
    what: &'static str,
    start: usize,
    cap: usize,
    tol: f64,
    mut eval: E,
) -> Result<Estimate>
where
    E: FnMut(usize) -> Result<f64>,
{
    let mut order = start;
    let mut prev = eval(order)?;
    loop {
        let next_order = order * 2;
        let cur = eval(next_order)?;
        let err = (cur - prev).abs();
        if within(err, cur, tol) {
            return Ok(Estimate {
                value: cur,
                error: err,
            });
        }
        if next_order >= cap {
            return Err(Error::NonConvergence {
                what,
                estimate: cur,
                error: err,
            });
        }
        prev = cur;
        order = next_order;
    }
}

/// Breakpoints on `[a, b]` graded geometrically toward both ends: `levels_a`
/// panels shrinking by `ratio` toward `a`, `levels_b` toward `b`.
pub fn graded_breaks(a: f64, b: f64, ratio: f64, levels_a: usize, levels_b: usize) -> Vec<f64> {
    let len = b - a;
    let mid = a + 0.5 * len;
    let mut left: Vec<f64> = (1..=levels_a).map(|j| a + 0.5 * len * ratio.powi(j as i32)).collect();
    left.reverse();
    let right: Vec<f64> = (1..=levels_b).map(|j| b - 0.5 * len * ratio.powi(j as i32)).collect();
    let mut out = Vec::with_capacity(levels_a + levels_b + 3);
    out.push(a);
    out.extend(left);
    out.push(mid);
    out.extend(right);
    out.push(b);
    out
}

/// Composite Gauss-Legendre of the given order over consecutive breakpoints.
pub fn composite_legendre<F: FnMut(f64) -> f64>(breaks: &[f64], order: usize, mut f: F) -> Result<f64> {
    let rule = gauss_legendre(order)?;
    Ok(breaks
        .windows(2)
        .map(|w| rule.integrate_on(w[0], w[1], &mut f))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::beta_fn;

    #[test]
    fn weighted_constant_is_beta() {
        let g = 0.3;
        let est = integrate_weighted(|_| 1.0, g - 1.0, g - 1.0, &[], 1e-12).unwrap();
        let exact = 2f64.powf(2.0 * g - 1.0) * beta_fn(g, g).unwrap();
        assert!((est.value - exact).abs() < 1e-13);
    }

    #[test]
    fn weighted_with_breakpoints() {
        // f = indicator of |s| < 0.5 times s^2 against (1-s^2)^(-1/4): compare
        // with a breakpoint-free smooth split evaluated independently.
        let f = |s: f64| if s.abs() < 0.5 { s * s } else { 0.0 };
        let est = integrate_weighted(f, -0.25, -0.25, &[-0.5, 0.5], 1e-12).unwrap();
        let reference = composite_legendre(&graded_breaks(-0.5, 0.5, 0.5, 2, 2), 40, |s| {
            s * s * (1.0 - s * s).powf(-0.25)
        })
        .unwrap();
        assert!((est.value - reference).abs() < 1e-13);
    }

    #[test]
    fn graded_breaks_are_increasing() {
        let b = graded_breaks(0.0, 2.0, 0.25, 5, 3);
        assert!(b.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(b[0], 0.0);
        assert_eq!(*b.last().unwrap(), 2.0);
        assert!((b[1] - 0.25f64.powi(5)).abs() < 1e-15);
    }

    #[test]
    fn doubling_reports_non_convergence() {
        let mut calls = 0;
        let r = doubling("test", 4, 16, 1e-12, |m| {
            calls += 1;
            Ok(1.0 / m as f64)
        });
        assert!(matches!(r, Err(Error::NonConvergence { .. })));
        assert_eq!(calls, 3);
    }
}
