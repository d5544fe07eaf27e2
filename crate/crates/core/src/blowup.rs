//! Comparison ODE `G' = C (R+z)^(-a) G^p`, `G(R) = M eps`, and epsilon sweeps
//! of finite-difference lifespans with log-log fits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{comparison_exponent, lifespan_exponent, ExponentContext, LifespanLaw};
use crate::fd::{run, DetectionConfig, GridConfig, Mode, ModelParams, Status, Trigger};
use crate::functional::{data_l1_norm, K_constant};
use crate::kernel::KernelConstants;

/// `|a - 1|` below which the ODE is treated as critical.
pub const CRITICAL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonODE {
    /// Constant of the nonlinear term; not given explicitly in the analysis.
    pub c: f64,
    pub m: f64,
    pub p: f64,
    pub r: f64,
    /// Exponent of the weight `(R + z)^(-a)`.
    pub a: f64,
    pub eps: f64,
}

impl ComparisonODE {
    pub fn new(c: f64, m: f64, p: f64, r: f64, a: f64, eps: f64) -> Result<Self> {
        let ode = Self { c, m, p, r, a, eps };
        ode.validate()?;
        Ok(ode)
    }

    /// Exponent from `(n, l, p)`, `M = K |u0 + u1|_1` from the run's data.
    pub fn from_params(params: &ModelParams, c: f64) -> Result<Self> {
        params.validate()?;
        let g = KernelConstants::new(params.ell, None)?.gamma;
        let m = K_constant(params.ell, params.radius)? * data_l1_norm(params)?;
        Self::new(c, m, params.p, params.radius, comparison_exponent(params.n, g, params.p), params.eps)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.c >= 0.0
            && self.m > 0.0
            && self.p > 1.0
            && self.r > 0.0
            && self.eps > 0.0
            && [self.c, self.m, self.p, self.r, self.a, self.eps].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::domain(
                "ComparisonODE",
                format!("need C >= 0, M, R, eps > 0, p > 1 and finite a; got {self:?}"),
            ))
        }
    }

    pub fn is_critical(&self) -> bool {
        (self.a - 1.0).abs() < CRITICAL_TOLERANCE
    }

    fn g0(&self) -> f64 {
        self.m * self.eps
    }

    /// `int_R^z (R + y)^(-a) dy`.
    pub fn weight_integral(&self, z: f64) -> f64 {
        let r = self.r;
        if self.is_critical() {
            ((r + z) / (2.0 * r)).ln()
        } else {
            let e = 1.0 - self.a;
            ((r + z).powf(e) - (2.0 * r).powf(e)) / e
        }
    }

    /// Closed-form solution of the equality case, `None` past the blow-up point.
    pub fn closed_form(&self, z: f64) -> Option<f64> {
        let h = self.g0().powf(1.0 - self.p) - self.c * (self.p - 1.0) * self.weight_integral(z);
        (h > 0.0).then(|| h.powf(-1.0 / (self.p - 1.0)))
    }
}

/// Abscissa where the equality-case solution blows up; `INFINITY` when the
/// weight's total integral cannot exhaust `(M eps)^(1-p)`.
pub fn ode_blowup_point(ode: &ComparisonODE) -> Result<f64> {
    ode.validate()?;
    if ode.c == 0.0 {
        return Ok(f64::INFINITY);
    }
    let r = ode.r;
    let budget = ode.g0().powf(1.0 - ode.p) / (ode.c * (ode.p - 1.0));
    if ode.is_critical() {
        return Ok(2.0 * r * budget.exp() - r);
    }
    let e = 1.0 - ode.a;
    let base = (2.0 * r).powf(e) + e * budget;
    if base <= 0.0 {
        // a > 1 and the weight integrates to less than the budget.
        return Ok(f64::INFINITY);
    }
    Ok(base.powf(1.0 / e) - r)
}

/// Same abscissa written with the lifespan exponent: for `a != 1`,
/// `C (p-1) / (1-a) = C (l+1) / (1/(p-1) - ((l+1) n - 1)/2)`.
pub fn ode_blowup_point_scaled(ode: &ComparisonODE, n: u32, ell: f64) -> Result<f64> {
    ode.validate()?;
    let d = 1.0 / (ode.p - 1.0) - ((ell + 1.0) * n as f64 - 1.0) / 2.0;
    if d == 0.0 || ode.c == 0.0 {
        return ode_blowup_point(ode);
    }
    let r = ode.r;
    let lhs = ode.g0().powf(1.0 - ode.p);
    let e = 1.0 - ode.a;
    let base = (2.0 * r).powf(e) + lhs * d / (ode.c * (ell + 1.0));
    if base <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(base.powf(1.0 / e) - r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OdeStatus {
    Diverged,
    ReachedEnd,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OdeTrajectory {
    pub zs: Vec<f64>,
    pub gs: Vec<f64>,
    pub status: OdeStatus,
    /// First accepted abscissa with `G >= 1e12`.
    pub threshold_crossing: Option<f64>,
    /// Root of `G^(1-p)`, continued from the threshold crossing.
    pub divergence: Option<f64>,
}

/// Level at which the direct integration hands over to `H = G^(1-p)`.
pub const DIVERGENCE_LEVEL: f64 = 1e12;

/// Dormand-Prince 5(4) step for a scalar ODE; returns (5th order, error).
fn dopri_step(f: &impl Fn(f64, f64) -> f64, z: f64, y: f64, h: f64) -> (f64, f64) {
    let k1 = f(z, y);
    let k2 = f(z + h / 5.0, y + h * k1 / 5.0);
    let k3 = f(z + 3.0 * h / 10.0, y + h * (3.0 * k1 + 9.0 * k2) / 40.0);
    let k4 = f(z + 4.0 * h / 5.0, y + h * (44.0 * k1 / 45.0 - 56.0 * k2 / 15.0 + 32.0 * k3 / 9.0));
    let k5 = f(
        z + 8.0 * h / 9.0,
        y + h * (19372.0 * k1 / 6561.0 - 25360.0 * k2 / 2187.0 + 64448.0 * k3 / 6561.0 - 212.0 * k4 / 729.0),
    );
    let k6 = f(
        z + h,
        y + h * (9017.0 * k1 / 3168.0 - 355.0 * k2 / 33.0 + 46732.0 * k3 / 5247.0 + 49.0 * k4 / 176.0
            - 5103.0 * k5 / 18656.0),
    );
    let y5 = y + h * (35.0 * k1 / 384.0 + 500.0 * k3 / 1113.0 + 125.0 * k4 / 192.0 - 2187.0 * k5 / 6784.0
        + 11.0 * k6 / 84.0);
    let k7 = f(z + h, y5);
    let y4 = y + h * (5179.0 * k1 / 57600.0 + 7571.0 * k3 / 16695.0 + 393.0 * k4 / 640.0 - 92097.0 * k5 / 339200.0
        + 187.0 * k6 / 2100.0
        + k7 / 40.0);
    (y5, (y5 - y4).abs())
}

const RTOL: f64 = 1e-13;
const MIN_STEP: f64 = 1e-300;

/// Adaptive integration of `y' = f(z, y)` from `(z0, y0)` until `stop(z, y)`
/// or `z_end`. Accepted points go to `out`.
fn integrate(
    f: impl Fn(f64, f64) -> f64,
    z0: f64,
    y0: f64,
    z_end: f64,
    stop: impl Fn(f64, f64) -> bool,
    out: &mut Vec<(f64, f64)>,
) -> Result<()> {
    let (mut z, mut y) = (z0, y0);
    let mut h = (1e-3 * z0.abs().max(1.0)).min(z_end - z0);
    out.push((z, y));
    while z < z_end && !stop(z, y) {
        h = h.min(z_end - z);
        if h < MIN_STEP.max(f64::EPSILON * z.abs()) {
            return Err(Error::NonConvergence {
                what: "ode_integrate",
                estimate: z,
                error: h,
            });
        }
        let (yn, err) = dopri_step(&f, z, y, h);
        let scale = RTOL * y.abs().max(yn.abs()).max(1e-300);
        if err <= scale && yn.is_finite() {
            z += h;
            y = yn;
            out.push((z, y));
        }
        let factor = if !err.is_finite() || !yn.is_finite() {
            0.2
        } else if err == 0.0 {
            5.0
        } else {
            0.9 * (scale / err).powf(0.2)
        };
        h *= factor.clamp(0.2, 5.0);
    }
    Ok(())
}

/// Point in `(z0, z1]` where the single step from `(z0, y0)` reaches `target`,
/// by bisection on the step length.
fn refine_crossing(f: &impl Fn(f64, f64) -> f64, z0: f64, y0: f64, z1: f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, z1 - z0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if dopri_step(f, z0, y0, mid).0 <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    z0 + hi
}

/// Integrates the equality case `G' = C (R+z)^(-a) G^p` from `G(R) = M eps`
/// until `G >= 1e12`, then continues `H = G^(1-p)` (which is affine in the
/// weight integral) to its root. When the pole is too close for the step
/// size to resolve, the handover happens early.
pub fn ode_integrate(ode: &ComparisonODE, z_max: f64) -> Result<OdeTrajectory> {
    ode.validate()?;
    if !(z_max > ode.r) || !z_max.is_finite() {
        return Err(Error::domain("ode_integrate", format!("need finite z_max > R, got {z_max}")));
    }
    let (c, a, p, r) = (ode.c, ode.a, ode.p, ode.r);
    let mut pts = Vec::new();
    let rhs = move |z: f64, g: f64| c * (r + z).powf(-a) * g.abs().powf(p);
    let direct = integrate(rhs, r, ode.g0(), z_max, |_, g| g >= DIVERGENCE_LEVEL, &mut pts);
    let &(z_c, g_c) = pts.last().expect("at least the initial point");
    let (zs, gs): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let reached_level = g_c >= DIVERGENCE_LEVEL;
    if direct.is_ok() && !reached_level {
        return Ok(OdeTrajectory {
            zs,
            gs,
            status: OdeStatus::ReachedEnd,
            threshold_crossing: None,
            divergence: None,
        });
    }
    // H' = -(p-1) C (R+z)^(-a), integrated until it changes sign.
    let h_rhs = move |z: f64, _h: f64| -(p - 1.0) * c * (r + z).powf(-a);
    let h_level = DIVERGENCE_LEVEL.powf(1.0 - p);
    let mut hp = Vec::new();
    let mut span = (z_c - r).max(1.0);
    let root = loop {
        hp.clear();
        let res = integrate(h_rhs, z_c, g_c.powf(1.0 - p), (z_c + span).min(z_max), |_, h| h <= 0.0, &mut hp);
        if res.is_err() {
            // The root is closer than the smallest representable step.
            let &(z_l, h_l) = hp.last().expect("at least the start point");
            break Some(z_l - h_l / h_rhs(z_l, h_l));
        }
        if let Some(w) = hp.windows(2).find(|w| w[1].1 <= 0.0) {
            let ((z0, h0), (z1, _)) = (w[0], w[1]);
            break Some(refine_crossing(&h_rhs, z0, h0, z1, 0.0));
        }
        if z_c + span >= z_max {
            break None;
        }
        span *= 4.0;
    };
    let threshold_crossing = if reached_level {
        Some(z_c)
    } else {
        hp.windows(2)
            .find(|w| w[1].1 <= h_level)
            .map(|w| refine_crossing(&h_rhs, w[0].0, w[0].1, w[1].0, h_level))
            .or(root)
    };
    let divergence = root.filter(|z| *z <= z_max);
    Ok(OdeTrajectory {
        zs,
        gs,
        status: if divergence.is_some() { OdeStatus::Diverged } else { OdeStatus::Inconclusive },
        threshold_crossing,
        divergence,
    })
}

/// Weighted least-squares line `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64], weights: &[f64]) -> Result<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n || weights.len() != n {
        return Err(Error::domain("fit_line", "need >= 2 points with matching weights"));
    }
    let sw: f64 = weights.iter().sum();
    let mx = xs.iter().zip(weights).map(|(x, w)| w * x).sum::<f64>() / sw;
    let my = ys.iter().zip(weights).map(|(y, w)| w * y).sum::<f64>() / sw;
    let sxx: f64 = xs.iter().zip(weights).map(|(x, w)| w * (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).zip(weights).map(|((x, y), w)| w * (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("fit_line", "abscissae are all equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if n > 2 {
        let rss: f64 = xs
            .iter()
            .zip(ys)
            .zip(weights)
            .map(|((x, y), w)| w * (y - intercept - slope * x).powi(2))
            .sum();
        (rss / ((n - 2) as f64) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr,
    })
}

fn default_eps_max() -> f64 {
    0.5
}
fn default_ratio() -> f64 {
    std::f64::consts::SQRT_2
}
fn default_points() -> usize {
    8
}
fn default_horizon_initial() -> f64 {
    4.0
}
fn default_horizon_max() -> f64 {
    400.0
}
fn default_threshold_change() -> f64 {
    10.0
}
fn default_true() -> bool {
    true
}

/// Geometric epsilon ladder and run-length limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_eps_max")]
    pub eps_max: f64,
    /// Ratio between consecutive epsilons.
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_horizon_initial")]
    pub horizon_initial: f64,
    /// Runs still alive at this horizon are excluded from the fit.
    #[serde(default = "default_horizon_max")]
    pub horizon_max: f64,
    /// Factor applied to the threshold for the sensitivity rerun.
    #[serde(default = "default_threshold_change")]
    pub threshold_change: f64,
    /// Rerun with a changed threshold and with `dx / 2`.
    #[serde(default = "default_true")]
    pub sensitivity: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            eps_max: default_eps_max(),
            ratio: default_ratio(),
            points: default_points(),
            horizon_initial: default_horizon_initial(),
            horizon_max: default_horizon_max(),
            threshold_change: default_threshold_change(),
            sensitivity: true,
        }
    }
}

impl SweepConfig {
    /// Decreasing epsilons `eps_max / ratio^k`.
    pub fn ladder(&self) -> Vec<f64> {
        (0..self.points).map(|k| self.eps_max / self.ratio.powi(k as i32)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_max > 0.0) || !(self.ratio > 1.0) || !(self.horizon_initial > 0.0) || self.horizon_max < self.horizon_initial {
            return Err(Error::domain(
                "SweepConfig",
                "need eps_max > 0, ratio > 1 and 0 < horizon_initial <= horizon_max",
            ));
        }
        if !(self.threshold_change > 0.0) {
            return Err(Error::domain("SweepConfig", "threshold_change must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifespanRecord {
    pub epsilon: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub lifespan: f64,
    pub dx: f64,
    pub threshold: f64,
    pub mode: Mode,
    pub status: Status,
    pub trigger: Option<Trigger>,
}

impl LifespanRecord {
    pub fn usable(&self) -> bool {
        self.status == Status::BlewUp && self.lifespan > 0.0 && self.lifespan.is_finite()
    }
}

/// One fd run per epsilon, doubling the horizon until blow-up is detected.
pub fn measure_lifespan(
    template: &ModelParams,
    grid: &GridConfig,
    detection: &DetectionConfig,
    sweep: &SweepConfig,
    eps: f64,
) -> Result<LifespanRecord> {
    let mut params = template.clone();
    params.eps = eps;
    let mut g = grid.clone();
    g.snapshot_times.clear();
    g.stride = 0;
    g.horizon = sweep.horizon_initial;
    loop {
        let out = run(&params, &g, detection)?;
        let v = &out.verdict;
        if v.status == Status::BlewUp || g.horizon >= sweep.horizon_max {
            let [t_lo, t_hi] = v.bracket.unwrap_or([g.horizon, g.horizon]);
            let status = if v.status == Status::BlewUp { Status::BlewUp } else { Status::Inconclusive };
            return Ok(LifespanRecord {
                epsilon: eps,
                t_lo,
                t_hi,
                lifespan: v.lifespan_estimate.unwrap_or(f64::INFINITY),
                dx: g.dx,
                threshold: detection.threshold(eps, g.dx),
                mode: params.mode,
                status,
                trigger: v.trigger,
            });
        }
        g.horizon = (2.0 * g.horizon).min(sweep.horizon_max);
    }
}

/// Per-point weight in log space: the detection bracket width as a relative
/// uncertainty, with a floor so that exact brackets do not dominate.
fn log_weight(r: &LifespanRecord) -> f64 {
    let rel = (r.t_hi - r.t_lo) / (2.0 * r.lifespan);
    1.0 / (rel * rel + 1e-6)
}

fn fit_records(records: &[LifespanRecord]) -> Option<LineFit> {
    let used: Vec<&LifespanRecord> = records.iter().filter(|r| r.usable()).collect();
    if used.len() < 4 {
        return None;
    }
    let xs: Vec<f64> = used.iter().map(|r| r.epsilon.ln()).collect();
    let ys: Vec<f64> = used.iter().map(|r| r.lifespan.ln()).collect();
    let ws: Vec<f64> = used.iter().map(|r| log_weight(r)).collect();
    fit_line(&xs, &ys, &ws).ok()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub records: Vec<LifespanRecord>,
    pub usable_points: usize,
    /// `true` when fewer than four runs blew up; no fit is reported then.
    pub insufficient_data: bool,
    pub fitted_slope: Option<f64>,
    pub slope_stderr: Option<f64>,
    /// `C_fit = exp(intercept)` of the free fit.
    pub c_fit: Option<f64>,
    pub theoretical_slope: f64,
    /// Relative slope change under the threshold change.
    pub threshold_sensitivity: Option<f64>,
    /// Relative slope change under `dx / 2`.
    pub grid_sensitivity: Option<f64>,
    /// Whether every usable record satisfies `T <= C_fit eps^theoretical_slope`.
    pub upper_bound_holds: Option<bool>,
    /// Whether the usable lifespans decrease as epsilon increases.
    pub monotone: bool,
}

fn ladder_records(
    template: &ModelParams,
    grid: &GridConfig,
    detection: &DetectionConfig,
    sweep: &SweepConfig,
    ladder: &[f64],
) -> Result<Vec<LifespanRecord>> {
    let mut records: Vec<LifespanRecord> = ladder
        .par_iter()
        .map(|&eps| measure_lifespan(template, grid, detection, sweep, eps))
        .collect::<Result<_>>()?;
    records.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
    Ok(records)
}

fn monotone(records: &[LifespanRecord]) -> bool {
    let used: Vec<&LifespanRecord> = records.iter().filter(|r| r.usable()).collect();
    used.windows(2).all(|w| w[1].lifespan <= w[0].lifespan)
}

fn check_ladder(template: &ModelParams, ladder: &[f64]) -> Result<()> {
    template.validate()?;
    if ladder.len() < 4 {
        return Err(Error::domain("lifespan_sweep", "ladder needs at least 4 points"));
    }
    let (lo, hi) = ladder
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), e| (lo.min(*e), hi.max(*e)));
    if !(lo > 0.0) || hi / lo < 10.0 * (1.0 - 1e-9) {
        return Err(Error::domain("lifespan_sweep", "ladder must span at least one decade"));
    }
    Ok(())
}

/// Subcritical sweep: fits `log T` against `log eps`.
pub fn lifespan_sweep(
    template: &ModelParams,
    grid: &GridConfig,
    detection: &DetectionConfig,
    sweep: &SweepConfig,
) -> Result<SweepReport> {
    sweep.validate()?;
    let ladder = sweep.ladder();
    check_ladder(template, &ladder)?;
    let ctx = ExponentContext::new(template.n, template.ell, Some(template.p))?;
    let theoretical_slope = match lifespan_exponent(&ctx)? {
        LifespanLaw::Subcritical { slope } => slope,
        LifespanLaw::Critical { .. } => {
            return Err(Error::domain("lifespan_sweep", "critical exponent: use critical_sweep"));
        }
    };
    let records = ladder_records(template, grid, detection, sweep, &ladder)?;
    let usable_points = records.iter().filter(|r| r.usable()).count();
    let fit = fit_records(&records);
    let mut report = SweepReport {
        usable_points,
        insufficient_data: fit.is_none(),
        fitted_slope: fit.map(|f| f.slope),
        slope_stderr: fit.map(|f| f.slope_stderr),
        c_fit: fit.map(|f| f.intercept.exp()),
        theoretical_slope,
        threshold_sensitivity: None,
        grid_sensitivity: None,
        upper_bound_holds: fit.map(|f| {
            let c = f.intercept.exp();
            records
                .iter()
                .filter(|r| r.usable())
                .all(|r| r.lifespan <= c * r.epsilon.powf(theoretical_slope))
        }),
        monotone: monotone(&records),
        records,
    };
    if let (Some(base), true) = (fit, sweep.sensitivity) {
        let mut det = detection.clone();
        det.threshold_factor *= sweep.threshold_change;
        let alt = ladder_records(template, grid, &det, sweep, &ladder)?;
        report.threshold_sensitivity = fit_records(&alt).map(|f| ((f.slope - base.slope) / base.slope).abs());
        let mut fine = grid.clone();
        fine.dx *= 0.5;
        let alt = ladder_records(template, &fine, detection, sweep, &ladder)?;
        report.grid_sensitivity = fit_records(&alt).map(|f| ((f.slope - base.slope) / base.slope).abs());
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalReport {
    pub records: Vec<LifespanRecord>,
    pub usable_points: usize,
    pub insufficient_data: bool,
    /// Fit of `log log T` against `log eps`.
    pub loglog_slope: Option<f64>,
    pub loglog_stderr: Option<f64>,
    /// `-(p - 1)`, the exponent of the `exp(C eps^-(p-1))` envelope.
    pub envelope_slope: f64,
    /// Fitted slope no steeper than the envelope (two standard errors).
    pub envelope_consistent: Option<bool>,
    /// `log T` grows faster than `1/eps`: fitted `log log T` slope below -1
    /// and `eps log T` increasing as eps decreases.
    pub superlinear: Option<bool>,
    pub monotone: bool,
    /// Relative change of the smallest-epsilon lifespan when the threshold is
    /// multiplied by `threshold_change` and `dt_min` divided by 100.
    pub detection_sensitivity: Option<f64>,
    /// Detection sensitivity above 1%: the measured lifespans track the
    /// detector rather than the solution.
    pub detection_saturated: bool,
}

/// Critical sweep at `p = glassey((l+1) n)`: fits `log log T` against `log eps`.
pub fn critical_sweep(
    template: &ModelParams,
    grid: &GridConfig,
    detection: &DetectionConfig,
    sweep: &SweepConfig,
) -> Result<CriticalReport> {
    sweep.validate()?;
    let ladder = sweep.ladder();
    check_ladder(template, &ladder)?;
    let ctx = ExponentContext::new(template.n, template.ell, Some(template.p))?;
    if !matches!(lifespan_exponent(&ctx)?, LifespanLaw::Critical { .. }) {
        return Err(Error::domain("critical_sweep", "p is not the critical exponent"));
    }
    let records = ladder_records(template, grid, detection, sweep, &ladder)?;
    // log log T needs T > 1.
    let used: Vec<&LifespanRecord> = records.iter().filter(|r| r.usable() && r.lifespan > 1.0).collect();
    let envelope_slope = -(template.p - 1.0);
    let fit = if used.len() >= 4 {
        let xs: Vec<f64> = used.iter().map(|r| r.epsilon.ln()).collect();
        let ys: Vec<f64> = used.iter().map(|r| r.lifespan.ln().ln()).collect();
        let ws: Vec<f64> = used.iter().map(|r| log_weight(r)).collect();
        fit_line(&xs, &ys, &ws).ok()
    } else {
        None
    };
    // used is sorted by increasing eps.
    let eps_log_t_increasing = used
        .windows(2)
        .all(|w| w[0].epsilon * w[0].lifespan.ln() > w[1].epsilon * w[1].lifespan.ln());
    let detection_sensitivity = match (used.first(), sweep.sensitivity) {
        (Some(smallest), true) => {
            let mut det = detection.clone();
            det.threshold_factor *= sweep.threshold_change;
            det.dt_min /= 100.0;
            let alt = measure_lifespan(template, grid, &det, sweep, smallest.epsilon)?;
            Some(if alt.usable() { (alt.lifespan / smallest.lifespan - 1.0).abs() } else { f64::INFINITY })
        }
        _ => None,
    };
    let detection_saturated = detection_sensitivity.is_some_and(|d| d > 0.01);
    Ok(CriticalReport {
        usable_points: used.len(),
        insufficient_data: fit.is_none(),
        loglog_slope: fit.map(|f| f.slope),
        loglog_stderr: fit.map(|f| f.slope_stderr),
        envelope_slope,
        envelope_consistent: fit.map(|f| f.slope >= envelope_slope - 2.0 * f.slope_stderr),
        superlinear: fit.map(|f| f.slope < -1.0 && eps_log_t_increasing),
        monotone: monotone(&records),
        detection_sensitivity,
        detection_saturated,
        records,
    })
}

/// `true` when `p` is the critical exponent for `(n, l)`; agrees with
/// `a == 1` for the comparison ODE.
pub fn is_critical_power(n: u32, ell: f64, p: f64) -> Result<bool> {
    let g = KernelConstants::new(ell, None)?.gamma;
    Ok((comparison_exponent(n, g, p) - 1.0).abs() < 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::glassey;
    use crate::field::Geometry;
    use crate::profile::DataProfile;

    fn ode(a: f64, eps: f64) -> ComparisonODE {
        ComparisonODE::new(1.3, 0.7, 2.0, 1.0, a, eps).unwrap()
    }

    #[test]
    fn critical_closed_form_matches_integration() {
        let o = ode(1.0, 0.8);
        let z = ode_blowup_point(&o).unwrap();
        let tr = ode_integrate(&o, 1e6).unwrap();
        assert_eq!(tr.status, OdeStatus::Diverged);
        assert!((tr.divergence.unwrap() / z - 1.0).abs() < 1e-6, "{:?} vs {z}", tr.divergence);
    }

    #[test]
    fn subcritical_closed_form_and_scaled_form_agree() {
        // n = 1, l = 1, p = 2: a = g (p + 1) = 3/4.
        let g = 0.25;
        let a = comparison_exponent(1, g, 2.0);
        assert!((a - 0.75).abs() < 1e-15);
        let o = ode(a, 0.3);
        let z = ode_blowup_point(&o).unwrap();
        let zs = ode_blowup_point_scaled(&o, 1, 1.0).unwrap();
        assert!((z / zs - 1.0).abs() < 1e-12);
        let tr = ode_integrate(&o, 1e9).unwrap();
        assert!((tr.divergence.unwrap() / z - 1.0).abs() < 1e-6);
    }

    #[test]
    fn trajectory_matches_closed_form_and_stays_above_start() {
        let o = ode(0.75, 0.5);
        let tr = ode_integrate(&o, 1e9).unwrap();
        // Relative error in G grows like G^(p-1) near the pole, which is the
        // conditioning of the problem itself; compare below 1e6.
        for (z, g) in tr.zs.iter().zip(&tr.gs).filter(|(_, g)| **g < 1e6) {
            let exact = o.closed_form(*z).unwrap();
            assert!((g / exact - 1.0).abs() < 1e-6, "z = {z} g = {g} rel = {}", g / exact - 1.0);
            assert!(*g >= o.m * o.eps);
        }
    }

    #[test]
    fn zero_c_never_diverges() {
        let o = ComparisonODE::new(0.0, 1.0, 2.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(ode_blowup_point(&o).unwrap(), f64::INFINITY);
        let tr = ode_integrate(&o, 100.0).unwrap();
        assert_eq!(tr.status, OdeStatus::ReachedEnd);
        assert!(tr.gs.iter().all(|g| *g == 1.0));
    }

    #[test]
    fn supercritical_weight_can_be_insufficient() {
        let small = ComparisonODE::new(1.0, 1.0, 2.0, 1.0, 1.5, 0.01).unwrap();
        assert_eq!(ode_blowup_point(&small).unwrap(), f64::INFINITY);
        let large = ComparisonODE::new(1.0, 1.0, 2.0, 1.0, 1.5, 100.0).unwrap();
        assert!(ode_blowup_point(&large).unwrap().is_finite());
    }

    #[test]
    fn blowup_point_monotone_in_eps() {
        for a in [0.5, 1.0] {
            let zs: Vec<f64> = [0.1, 0.2, 0.4].iter().map(|e| ode_blowup_point(&ode(a, *e)).unwrap()).collect();
            assert!(zs[0] > zs[1] && zs[1] > zs[2]);
        }
    }

    #[test]
    fn critical_power_matches_exponent_a() {
        for (n, ell) in [(1u32, 1.0), (2, 0.5), (3, 2.0)] {
            let pc = glassey((ell + 1.0) * n as f64).unwrap();
            assert!(is_critical_power(n, ell, pc).unwrap());
            assert!(!is_critical_power(n, ell, pc * 0.9).unwrap());
        }
    }

    #[test]
    fn fit_recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 1.5 - 2.0 * x).collect();
        let f = fit_line(&xs, &ys, &[1.0; 4]).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-14 && (f.intercept - 1.5).abs() < 1e-14);
        assert!(f.slope_stderr < 1e-12);
    }

    #[test]
    fn sweep_without_blow_up_is_flagged() {
        let params = ModelParams {
            n: 1,
            ell: 1.0,
            p: 2.0,
            radius: 1.0,
            eps: 1.0,
            u0: DataProfile::compact_bump(1.0, 1.0, 4),
            u1: DataProfile::compact_bump(1.0, 1.0, 4),
            mode: Mode::Tricomi,
            geometry: Geometry::Line,
            linear: false,
        };
        let sweep = SweepConfig {
            eps_max: 1e-4,
            horizon_initial: 0.5,
            horizon_max: 0.5,
            points: 4,
            ratio: 2.2,
            sensitivity: false,
            ..SweepConfig::default()
        };
        let report = lifespan_sweep(&params, &GridConfig::new(0.05, 1.0), &DetectionConfig::default(), &sweep).unwrap();
        assert!(report.insufficient_data);
        assert!(report.fitted_slope.is_none());
        assert_eq!(report.usable_points, 0);
    }
}
