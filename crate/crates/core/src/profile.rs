//! Initial-data profiles `u0`, `u1`.
//!
//! All profiles are even functions of `x` (or of `|x|` in radial geometry).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{beta_fn, gamma_fn, gauss_legendre};

/// Cauchy data shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataProfile {
    Zero,
    /// `amplitude * exp(-x^2 / width^2)`; not compactly supported.
    GaussianBump { amplitude: f64, width: f64 },
    /// `amplitude * (1 - (x/radius)^2)^power` on `|x| < radius`, zero outside.
    CompactBump {
        amplitude: f64,
        radius: f64,
        power: u32,
    },
    /// `value` on `|x| <= radius`, zero outside.
    ConstantOnInterval { value: f64, radius: f64 },
    /// Natural cubic spline through samples, zero outside `[-radius, radius]`.
    CustomSampled(SampledProfile),
}

impl DataProfile {
    pub fn compact_bump(amplitude: f64, radius: f64, power: u32) -> Self {
        DataProfile::CompactBump {
            amplitude,
            radius,
            power,
        }
    }

    pub fn constant(value: f64, radius: f64) -> Self {
        DataProfile::ConstantOnInterval { value, radius }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::domain("DataProfile", m));
        match self {
            DataProfile::Zero => Ok(()),
            DataProfile::GaussianBump { amplitude, width } => {
                if !amplitude.is_finite() || !(*width > 0.0) {
                    return bad(format!("gaussian needs finite amplitude and width > 0, got {amplitude}, {width}"));
                }
                Ok(())
            }
            DataProfile::CompactBump {
                amplitude, radius, ..
            } => {
                if !amplitude.is_finite() || !(*radius > 0.0) {
                    return bad(format!("compact bump needs radius > 0, got {radius}"));
                }
                Ok(())
            }
            DataProfile::ConstantOnInterval { value, radius } => {
                if !value.is_finite() || !(*radius > 0.0) {
                    return bad(format!("constant profile needs radius > 0, got {radius}"));
                }
                Ok(())
            }
            DataProfile::CustomSampled(s) => s.validate(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            DataProfile::Zero => 0.0,
            DataProfile::GaussianBump { amplitude, width } => {
                amplitude * (-(x / width) * (x / width)).exp()
            }
            DataProfile::CompactBump {
                amplitude,
                radius,
                power,
            } => {
                let r = x / radius;
                if r.abs() >= 1.0 {
                    0.0
                } else {
                    amplitude * (1.0 - r * r).powi(*power as i32)
                }
            }
            DataProfile::ConstantOnInterval { value, radius } => {
                if x.abs() <= *radius {
                    *value
                } else {
                    0.0
                }
            }
            DataProfile::CustomSampled(s) => s.eval(x),
        }
    }

    /// Support radius for compactly supported kinds.
    pub fn support_radius(&self) -> Option<f64> {
        match self {
            DataProfile::Zero => Some(0.0),
            DataProfile::GaussianBump { .. } => None,
            DataProfile::CompactBump { radius, .. }
            | DataProfile::ConstantOnInterval { radius, .. } => Some(*radius),
            DataProfile::CustomSampled(s) => Some(s.radius),
        }
    }

    /// Radius outside which the profile is below `1e-17` of its peak.
    pub fn effective_radius(&self) -> f64 {
        match self {
            DataProfile::GaussianBump { width, .. } => width * (17.0 * 10f64.ln()).sqrt(),
            other => other.support_radius().unwrap_or(0.0),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            DataProfile::Zero => true,
            DataProfile::GaussianBump { amplitude, .. }
            | DataProfile::CompactBump { amplitude, .. } => *amplitude == 0.0,
            DataProfile::ConstantOnInterval { value, .. } => *value == 0.0,
            DataProfile::CustomSampled(s) => s.values.iter().all(|v| *v == 0.0),
        }
    }

    /// Points where the profile loses smoothness.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            DataProfile::Zero | DataProfile::GaussianBump { .. } => Vec::new(),
            DataProfile::CompactBump { radius, .. }
            | DataProfile::ConstantOnInterval { radius, .. } => vec![-radius, *radius],
            DataProfile::CustomSampled(s) => {
                let mut b = s.xs.clone();
                b.push(-s.radius);
                b.push(s.radius);
                b.sort_by(f64::total_cmp);
                b.dedup();
                b
            }
        }
    }

    /// Minimum over the sampled support; used to check nonnegativity.
    pub fn is_nonnegative(&self) -> bool {
        match self {
            DataProfile::Zero => true,
            DataProfile::GaussianBump { amplitude, .. }
            | DataProfile::CompactBump { amplitude, .. } => *amplitude >= 0.0,
            DataProfile::ConstantOnInterval { value, .. } => *value >= 0.0,
            DataProfile::CustomSampled(s) => {
                let n = 4096;
                (0..=n).all(|i| s.eval(-s.radius + 2.0 * s.radius * i as f64 / n as f64) >= 0.0)
            }
        }
    }

    /// `int_{R^n} f(|x|) dx`.
    pub fn l1_norm(&self, n: u32) -> Result<f64> {
        let nf = n as f64;
        // |S^{n-1}|, with |S^0| = 2.
        let sphere = 2.0 * PI.powf(nf / 2.0) / gamma_fn(nf / 2.0)?;
        Ok(match self {
            DataProfile::Zero => 0.0,
            DataProfile::GaussianBump { amplitude, width } => {
                amplitude * (PI.sqrt() * width).powi(n as i32)
            }
            DataProfile::CompactBump {
                amplitude,
                radius,
                power,
            } => {
                sphere * amplitude * radius.powi(n as i32) * beta_fn(nf / 2.0, *power as f64 + 1.0)?
                    / 2.0
            }
            DataProfile::ConstantOnInterval { value, radius } => {
                value * PI.powf(nf / 2.0) * radius.powi(n as i32) / gamma_fn(nf / 2.0 + 1.0)?
            }
            DataProfile::CustomSampled(s) => {
                if n == 1 {
                    s.integral()
                } else {
                    // Radial moment, piecewise Gauss-Legendre on the positive knots.
                    let rule = gauss_legendre(16)?;
                    let mut knots: Vec<f64> = s.xs.iter().copied().filter(|x| *x > 0.0).collect();
                    knots.insert(0, 0.0);
                    knots.push(s.radius);
                    knots.dedup();
                    let radial: f64 = knots
                        .windows(2)
                        .map(|w| rule.integrate_on(w[0], w[1], |r| s.eval(r) * r.powi(n as i32 - 1)))
                        .sum();
                    sphere * radial
                }
            }
        })
    }
}

/// Cubic-spline profile through `(xs, values)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SampledRaw", into = "SampledRaw")]
pub struct SampledProfile {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    pub radius: f64,
    second: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampledRaw {
    xs: Vec<f64>,
    values: Vec<f64>,
    radius: f64,
}

impl TryFrom<SampledRaw> for SampledProfile {
    type Error = Error;
    fn try_from(raw: SampledRaw) -> Result<Self> {
        SampledProfile::new(raw.xs, raw.values, raw.radius)
    }
}

impl From<SampledProfile> for SampledRaw {
    fn from(s: SampledProfile) -> Self {
        SampledRaw {
            xs: s.xs,
            values: s.values,
            radius: s.radius,
        }
    }
}

impl SampledProfile {
    pub fn new(xs: Vec<f64>, values: Vec<f64>, radius: f64) -> Result<Self> {
        let s = Self {
            second: natural_spline_second_derivatives(&xs, &values),
            xs,
            values,
            radius,
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::domain("SampledProfile", m.to_string()));
        if self.xs.len() < 2 || self.xs.len() != self.values.len() {
            return bad("need at least two samples and equal-length xs/values");
        }
        if !self.xs.windows(2).all(|w| w[0] < w[1]) {
            return bad("sample abscissae must be strictly increasing");
        }
        if !(self.radius > 0.0)
            || self.xs[0] < -self.radius
            || *self.xs.last().unwrap() > self.radius
        {
            return bad("samples must lie inside [-radius, radius] with radius > 0");
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return bad("non-finite sample value");
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (xs, ys, m) = (&self.xs, &self.values, &self.second);
        if x.abs() > self.radius || x < xs[0] || x > xs[xs.len() - 1] {
            return 0.0;
        }
        let hi = xs.partition_point(|&k| k < x).clamp(1, xs.len() - 1);
        let lo = hi - 1;
        let h = xs[hi] - xs[lo];
        let a = (xs[hi] - x) / h;
        let b = (x - xs[lo]) / h;
        a * ys[lo] + b * ys[hi] + ((a * a * a - a) * m[lo] + (b * b * b - b) * m[hi]) * h * h / 6.0
    }

    /// Exact integral of the spline over its knots.
    pub fn integral(&self) -> f64 {
        let (xs, ys, m) = (&self.xs, &self.values, &self.second);
        xs.windows(2)
            .enumerate()
            .map(|(i, w)| {
                let h = w[1] - w[0];
                h * (ys[i] + ys[i + 1]) / 2.0 - h * h * h * (m[i] + m[i + 1]) / 24.0
            })
            .sum()
    }
}

fn natural_spline_second_derivatives(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut m = vec![0.0; n];
    if n < 3 || ys.len() != n {
        return m;
    }
    // Thomas algorithm on the interior equations.
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = xs[i] - xs[i - 1];
        let h1 = xs[i + 1] - xs[i];
        let a = h0 / 6.0;
        let b = (h0 + h1) / 3.0;
        let c = h1 / 6.0;
        let d = (ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0;
        let denom = b - a * c_prime[i - 1];
        c_prime[i] = c / denom;
        d_prime[i] = (d - a * d_prime[i - 1]) / denom;
    }
    for i in (1..n - 1).rev() {
        m[i] = d_prime[i] - c_prime[i] * m[i + 1];
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compact_bump_support_and_norm() {
        let p = DataProfile::compact_bump(2.0, 1.5, 3);
        assert_eq!(p.eval(1.5), 0.0);
        assert_eq!(p.eval(-2.0), 0.0);
        assert_eq!(p.eval(0.0), 2.0);
        // int (1 - x^2)^3 over [-1, 1] = 32/35.
        let p1 = DataProfile::compact_bump(1.0, 1.0, 3);
        assert!((p1.l1_norm(1).unwrap() - 32.0 / 35.0).abs() < 1e-14);
        // n = 3: 4 pi int_0^1 (1 - r^2) r^2 dr = 8 pi / 15.
        let p2 = DataProfile::compact_bump(1.0, 1.0, 1);
        assert!((p2.l1_norm(3).unwrap() - 8.0 * PI / 15.0).abs() < 1e-13);
    }

    #[test]
    fn constant_and_gaussian_norms() {
        let c = DataProfile::constant(3.0, 2.0);
        assert!((c.l1_norm(1).unwrap() - 12.0).abs() < 1e-14);
        assert!((c.l1_norm(2).unwrap() - 12.0 * PI).abs() < 1e-12);
        let g = DataProfile::GaussianBump {
            amplitude: 1.0,
            width: 0.5,
        };
        assert!((g.l1_norm(1).unwrap() - 0.5 * PI.sqrt()).abs() < 1e-14);
        assert!(g.support_radius().is_none());
        assert!(g.eval(g.effective_radius()) < 1e-16);
    }

    #[test]
    fn spline_reproduces_cubic_free_data() {
        // Natural spline is exact for straight lines.
        let xs: Vec<f64> = (0..11).map(|i| -1.0 + 0.2 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 + 0.5 * x).collect();
        let s = SampledProfile::new(xs, ys, 1.0).unwrap();
        assert!((s.eval(0.33) - (2.0 + 0.165)).abs() < 1e-14);
        assert_eq!(s.eval(1.2), 0.0);
        assert!((s.integral() - 4.0).abs() < 1e-13);
    }

    #[test]
    fn spline_rejects_bad_samples() {
        assert!(SampledProfile::new(vec![0.0, 0.0], vec![1.0, 1.0], 1.0).is_err());
        assert!(SampledProfile::new(vec![-2.0, 0.0], vec![1.0, 1.0], 1.0).is_err());
        let raw = r#"{"kind":"custom_sampled","xs":[0.0],"values":[1.0],"radius":1.0}"#;
        assert!(serde_json::from_str::<DataProfile>(raw).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let p = DataProfile::CustomSampled(
            SampledProfile::new(vec![-1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0], 1.0).unwrap(),
        );
        let text = serde_json::to_string(&p).unwrap();
        let back: DataProfile = serde_json::from_str(&text).unwrap();
        assert_eq!(p, back);
        let b: DataProfile =
            serde_json::from_str(r#"{"kind":"compact_bump","amplitude":1,"radius":1,"power":4}"#)
                .unwrap();
        assert_eq!(b, DataProfile::compact_bump(1.0, 1.0, 4));
    }
}
