//! Gauss-Jacobi rules by the Golub-Welsch method.
//!
//! The Jacobi matrix of the monic Jacobi recurrence is diagonalised with an
//! implicit QL sweep that only tracks the first component of each
//! eigenvector, which is all the weights need.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::gamma::{beta_fn, ln_gamma};
use crate::error::{Error, Result};

/// Nodes and weights for `int_{-1}^{1} f(s) (1 - s)^alpha (1 + s)^beta ds`.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub order: usize,
}

impl JacobiRule {
    /// Apply the rule on `[-1, 1]`.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&s, &w)| w * f(s))
            .sum()
    }

    /// Apply the rule on `[a, b]`; the weight becomes
    /// `(b - x)^alpha (x - a)^beta` up to the constant Jacobian factor.
    pub fn integrate_on(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let scale = half.powf(self.alpha + self.beta + 1.0);
        scale * self.integrate(|s| f(mid + half * s))
    }

    /// Zeroth moment `2^(a+b+1) B(a+1, b+1)`.
    pub fn total_mass(&self) -> f64 {
        jacobi_mass(self.alpha, self.beta)
    }
}

fn jacobi_mass(alpha: f64, beta: f64) -> f64 {
    let ab = alpha + beta;
    if ab + 2.0 > 150.0 {
        let ln = (ab + 1.0) * 2f64.ln() + ln_gamma(alpha + 1.0).unwrap()
            + ln_gamma(beta + 1.0).unwrap()
            - ln_gamma(ab + 2.0).unwrap();
        return ln.exp();
    }
    2f64.powf(ab + 1.0) * beta_fn(alpha + 1.0, beta + 1.0).unwrap()
}

type CacheKey = (u64, u64, usize);

fn cache() -> &'static Mutex<HashMap<CacheKey, Arc<JacobiRule>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<JacobiRule>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Gauss-Jacobi rule of the given order, memoized by `(alpha, beta, order)`.
pub fn gauss_jacobi_rule(alpha: f64, beta: f64, order: usize) -> Result<Arc<JacobiRule>> {
    if !(alpha.is_finite() && alpha > -1.0) || !(beta.is_finite() && beta > -1.0) {
        return Err(Error::domain(
            "gauss_jacobi_rule",
            format!("need alpha, beta > -1, got ({alpha}, {beta})"),
        ));
    }
    if order == 0 {
        return Err(Error::domain("gauss_jacobi_rule", "order must be >= 1"));
    }
    let key = (alpha.to_bits(), beta.to_bits(), order);
    if let Some(rule) = cache().lock().unwrap().get(&key) {
        return Ok(Arc::clone(rule));
    }
    let rule = Arc::new(build_rule(alpha, beta, order)?);
    cache()
        .lock()
        .unwrap()
        .entry(key)
        .or_insert_with(|| Arc::clone(&rule));
    Ok(rule)
}

/// Gauss-Legendre rule (`alpha = beta = 0`).
pub fn gauss_legendre(order: usize) -> Result<Arc<JacobiRule>> {
    gauss_jacobi_rule(0.0, 0.0, order)
}

fn build_rule(alpha: f64, beta: f64, order: usize) -> Result<JacobiRule> {
    let n = order;
    let ab = alpha + beta;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    for (k, d) in diag.iter_mut().enumerate() {
        *d = if k == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            let s = 2.0 * k as f64 + ab;
            (beta * beta - alpha * alpha) / (s * (s + 2.0))
        };
    }
    for k in 1..n {
        let kf = k as f64;
        let s = 2.0 * kf + ab;
        let b2 = if k == 1 {
            4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))
        } else {
            4.0 * kf * (kf + alpha) * (kf + beta) * (kf + ab) / (s * s * (s + 1.0) * (s - 1.0))
        };
        off[k - 1] = b2.sqrt();
    }
    let mut first = vec![0.0; n];
    first[0] = 1.0;
    implicit_ql(&mut diag, &mut off, &mut first).map_err(|detail| Error::Numerical {
        what: "gauss_jacobi_rule",
        detail: format!("{detail} (alpha = {alpha}, beta = {beta}, order = {order})"),
    })?;

    let mass = jacobi_mass(alpha, beta);
    let mut pairs: Vec<(f64, f64)> = diag
        .into_iter()
        .zip(first)
        .map(|(x, v)| (x, mass * v * v))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (nodes, weights) = pairs.into_iter().unzip();
    Ok(JacobiRule {
        nodes,
        weights,
        alpha,
        beta,
        order,
    })
}

/// Eigenvalues of a symmetric tridiagonal matrix (in `d`, off-diagonal in `e`
/// with `e[i]` coupling rows `i` and `i + 1`), rotating `z` alongside.
fn implicit_ql(d: &mut [f64], e: &mut [f64], z: &mut [f64]) -> std::result::Result<(), String> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() < f64::MIN_POSITIVE {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(format!(
                    "implicit QL failed to converge for eigenvalue {l} (residual off-diagonal {:e})",
                    e[l]
                ));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
