//! Critical exponents and the exponent algebra behind the lifespan bounds.
//!
//! Everything here is a closed-form function of the space dimension `n`,
//! the degeneracy power `ell` and (optionally) the nonlinearity power `p`.
//! Floating-point versions take arbitrary reals; the `*_exact` variants work
//! over rationals and return exact residuals.

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};

/// Relative tolerance used to decide that `p` sits on the Glassey exponent.
pub const CRITICAL_TOLERANCE: f64 = 1e-12;

/// Problem data for exponent computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentContext {
    pub n: u32,
    pub ell: f64,
    pub p: Option<f64>,
    /// Set when `ell == 0` was admitted through [`ExponentContext::classical_limit`].
    pub classical: bool,
}

impl ExponentContext {
    pub fn new(n: u32, ell: f64, p: Option<f64>) -> Result<Self> {
        if !(ell.is_finite() && ell > 0.0) {
            return Err(Error::domain(
                "ExponentContext",
                format!("ell must be > 0, got {ell} (use classical_limit for ell = 0)"),
            ));
        }
        Self::build(n, ell, p, false)
    }

    /// The wave-equation case `ell = 0`; only exponent formulas accept it.
    pub fn classical_limit(n: u32, p: Option<f64>) -> Result<Self> {
        Self::build(n, 0.0, p, true)
    }

    fn build(n: u32, ell: f64, p: Option<f64>, classical: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("ExponentContext", "n must be >= 1"));
        }
        if let Some(p) = p {
            if !(p.is_finite() && p > 1.0) {
                return Err(Error::domain(
                    "ExponentContext",
                    format!("p must be > 1, got {p}"),
                ));
            }
        }
        Ok(Self {
            n,
            ell,
            p,
            classical,
        })
    }

    pub fn with_p(self, p: f64) -> Result<Self> {
        Self::build(self.n, self.ell, Some(p), self.classical)
    }

    /// `(ell + 1) n`, the argument at which the Glassey exponent is evaluated.
    pub fn effective_dimension(&self) -> f64 {
        (self.ell + 1.0) * self.n as f64
    }

    /// `ell / (2 (ell + 1))`.
    pub fn gamma(&self) -> f64 {
        self.ell / (2.0 * (self.ell + 1.0))
    }

    fn require_p(&self, what: &'static str) -> Result<f64> {
        self.p
            .ok_or_else(|| Error::domain(what, "operation requires the exponent p"))
    }
}

/// Glassey exponent `(m + 1) / (m - 1)`.
pub fn glassey(m: f64) -> Result<f64> {
    if !(m.is_finite() && m > 1.0) {
        return Err(Error::domain(
            "glassey",
            format!("needs m > 1, got {m}"),
        ));
    }
    Ok((m + 1.0) / (m - 1.0))
}

/// Sobolev exponent `(m + 2) / (m - 2)`; `None` for `m <= 2`.
pub fn sobolev(m: f64) -> Option<f64> {
    (m > 2.0).then(|| (m + 2.0) / (m - 2.0))
}

/// `Q = (ell + 1) n + 1`.
pub fn quasi_homogeneous_dimension(ctx: &ExponentContext) -> f64 {
    ctx.effective_dimension() + 1.0
}

/// `Q / (Q - 2)`, which coincides with `glassey(Q - 1)`.
pub fn glassey_from_q(ctx: &ExponentContext) -> Result<f64> {
    let q = quasi_homogeneous_dimension(ctx);
    if q <= 2.0 {
        return Err(Error::domain("glassey_from_q", format!("Q = {q} <= 2")));
    }
    Ok(q / (q - 2.0))
}

/// Greatest root of `((l+1)n - 1) p^2 - ((l+1)n + 1 - 2l) p - 2(l+1) = 0`.
pub fn generalized_strauss(ctx: &ExponentContext) -> Result<f64> {
    let m = ctx.effective_dimension();
    let a = m - 1.0;
    if a.abs() <= f64::EPSILON * m.max(1.0) {
        return Err(Error::domain(
            "generalized_strauss",
            "degenerate leading coefficient: (ell + 1) n = 1",
        ));
    }
    let b = -(m + 1.0 - 2.0 * ctx.ell);
    let c = -2.0 * (ctx.ell + 1.0);
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Err(Error::domain("generalized_strauss", "no real root"));
    }
    let sq = disc.sqrt();
    // Cancellation-free pair of roots.
    let q = -0.5 * (b + b.signum() * sq);
    let r1 = q / a;
    let r2 = if q != 0.0 { c / q } else { r1 };
    Ok(r1.max(r2))
}

/// `-(n-1)/2 (p-1) - gamma (p+1) + 1`; zero exactly on the Glassey exponent.
pub fn critical_condition_residual(ctx: &ExponentContext) -> Result<f64> {
    let p = ctx.require_p("critical_condition_residual")?;
    Ok(1.0 - comparison_exponent(ctx.n, ctx.gamma(), p))
}

/// Power `a = (n-1)(p-1)/2 + gamma (p+1)` of the weight in the comparison ODE.
pub fn comparison_exponent(n: u32, gamma: f64, p: f64) -> f64 {
    (n as f64 - 1.0) * 0.5 * (p - 1.0) + gamma * (p + 1.0)
}

/// Upper-bound law for the lifespan as a function of the data size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum LifespanLaw {
    /// `T(eps) <= C eps^slope`.
    Subcritical { slope: f64 },
    /// `log T(eps) <= C eps^{-rate}`.
    Critical { rate: f64 },
}

impl LifespanLaw {
    pub fn label(&self) -> &'static str {
        match self {
            LifespanLaw::Subcritical { .. } => "subcritical",
            LifespanLaw::Critical { .. } => "conjectured critical",
        }
    }
}

/// Lifespan upper-bound law for `1 < p <= glassey((ell+1) n)`.
pub fn lifespan_exponent(ctx: &ExponentContext) -> Result<LifespanLaw> {
    let p = ctx.require_p("lifespan_exponent")?;
    let m = ctx.effective_dimension();
    let critical = if m > 1.0 { glassey(m)? } else { f64::INFINITY };
    if is_critical(p, critical) {
        return Ok(LifespanLaw::Critical { rate: p - 1.0 });
    }
    if p > critical {
        return Err(Error::domain(
            "lifespan_exponent",
            format!("p = {p} exceeds the Glassey exponent {critical}; no bound is available"),
        ));
    }
    let denom = 1.0 / (p - 1.0) - (m - 1.0) / 2.0;
    Ok(LifespanLaw::Subcritical {
        slope: -1.0 / denom,
    })
}

fn is_critical(p: f64, critical: f64) -> bool {
    critical.is_finite() && (p - critical).abs() <= CRITICAL_TOLERANCE * critical
}

/// `1 - 2g - (n + 2g - 1)/2 (p - 1) - (1/(l+1)) (1 - ((l+1) n - 1)/2 (p - 1))`.
pub fn scaling_identity_residual(ctx: &ExponentContext) -> Result<f64> {
    let p = ctx.require_p("scaling_identity_residual")?;
    let g = ctx.gamma();
    let n = ctx.n as f64;
    let lhs = 1.0 - 2.0 * g - (n + 2.0 * g - 1.0) / 2.0 * (p - 1.0);
    let rhs = (1.0 - (ctx.effective_dimension() - 1.0) / 2.0 * (p - 1.0)) / (ctx.ell + 1.0);
    Ok(lhs - rhs)
}

pub type Rational = Ratio<i128>;

/// Exact residual of the critical condition for rational `ell` and `p`.
pub fn critical_condition_residual_exact(n: u32, ell: Rational, p: Rational) -> Rational {
    let one = Rational::from_integer(1);
    let two = Rational::from_integer(2);
    let gamma = ell / (two * (ell + one));
    let n = Rational::from_integer(n as i128);
    one - (n - one) / two * (p - one) - gamma * (p + one)
}

/// Exact scaling-identity residual for rational `ell` and `p`.
pub fn scaling_identity_residual_exact(n: u32, ell: Rational, p: Rational) -> Rational {
    let one = Rational::from_integer(1);
    let two = Rational::from_integer(2);
    let gamma = ell / (two * (ell + one));
    let n = Rational::from_integer(n as i128);
    let lhs = one - two * gamma - (n + two * gamma - one) / two * (p - one);
    let rhs = (one - ((ell + one) * n - one) / two * (p - one)) / (ell + one);
    lhs - rhs
}

/// Exact Glassey exponent `(m+1)/(m-1)` at `m = (ell+1) n`.
pub fn glassey_exact(n: u32, ell: Rational) -> Option<Rational> {
    let one = Rational::from_integer(1);
    let m = (ell + one) * Rational::from_integer(n as i128);
    (m > one).then(|| (m + one) / (m - one))
}

/// Everything the `exponents` report prints.
#[derive(Debug, Clone, Serialize)]
pub struct ExponentTable {
    pub n: u32,
    pub ell: f64,
    pub p: Option<f64>,
    pub effective_dimension: f64,
    pub quasi_homogeneous_dimension: f64,
    pub glassey: Option<f64>,
    pub glassey_label: &'static str,
    pub generalized_strauss: Option<f64>,
    pub sobolev: Option<f64>,
    pub lifespan_law: Option<LifespanLaw>,
    pub lifespan_note: Option<String>,
}

pub fn exponent_table(ctx: &ExponentContext) -> ExponentTable {
    let m = ctx.effective_dimension();
    let (lifespan_law, lifespan_note) = match ctx.p.map(|_| lifespan_exponent(ctx)) {
        None => (None, None),
        Some(Ok(law)) => (Some(law), Some(law.label().to_string())),
        Some(Err(e)) => (None, Some(e.to_string())),
    };
    ExponentTable {
        n: ctx.n,
        ell: ctx.ell,
        p: ctx.p,
        effective_dimension: m,
        quasi_homogeneous_dimension: quasi_homogeneous_dimension(ctx),
        glassey: glassey(m).ok(),
        glassey_label: "conjectured critical",
        generalized_strauss: generalized_strauss(ctx).ok(),
        sobolev: sobolev(m),
        lifespan_law,
        lifespan_note,
    }
}

impl std::fmt::Display for ExponentTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fn opt(v: Option<f64>) -> String {
            v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.12}"))
        }
        writeln!(f, "n                         {}", self.n)?;
        writeln!(f, "ell                       {}", self.ell)?;
        if let Some(p) = self.p {
            writeln!(f, "p                         {p}")?;
        }
        writeln!(f, "(ell+1) n                 {:.12}", self.effective_dimension)?;
        writeln!(f, "Q = (ell+1) n + 1         {:.12}", self.quasi_homogeneous_dimension)?;
        writeln!(
            f,
            "Glassey p_Gla((ell+1)n)   {}  ({})",
            opt(self.glassey),
            self.glassey_label
        )?;
        writeln!(f, "generalized Strauss       {}", opt(self.generalized_strauss))?;
        writeln!(f, "Sobolev p_Sob((ell+1)n)   {}", opt(self.sobolev))?;
        match (&self.lifespan_law, &self.lifespan_note) {
            (Some(LifespanLaw::Subcritical { slope }), _) => {
                writeln!(f, "lifespan law              T <= C eps^({slope:.12})")?
            }
            (Some(LifespanLaw::Critical { rate }), _) => writeln!(
                f,
                "lifespan law              T <= exp(C eps^(-{rate:.12}))  (conjectured critical)"
            )?,
            (None, Some(note)) => writeln!(f, "lifespan law              {note}")?,
            (None, None) => {}
        }
        Ok(())
    }
}
