//! Finite-difference time stepping for `u_tt - t^(2l) Lap u = |u_t|^p` on the
//! line or for radial profiles, in Tricomi form or in Euler-Darboux-Poisson
//! form, with blow-up detection.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Geometry, SpaceTimeField};
use crate::kernel::{phi_inverse_unchecked, phi_unchecked, KernelConstants};
use crate::profile::DataProfile;
use crate::special::{gamma_fn, gauss_jacobi_rule, gauss_legendre};

/// Which form of the equation is integrated.
/// Relative level (of the slice maximum) above which a node counts as
/// inside the numerical support. The explicit stencil leaves a dispersive
/// tail ahead of the cone of size O(dx^2) relative to the maximum.
pub const SUPPORT_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Tricomi,
    /// `v(tau, x) = u(phi^-1(tau), x)`, switched to after a short Tricomi start.
    Edp,
}

/// Physical parameters of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub n: u32,
    pub ell: f64,
    pub p: f64,
    /// Support radius of the data.
    pub radius: f64,
    pub eps: f64,
    pub u0: DataProfile,
    pub u1: DataProfile,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub geometry: Geometry,
    /// Drop the nonlinearity.
    #[serde(default)]
    pub linear: bool,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::domain("ModelParams", m));
        if !(self.ell > 0.0) || !self.ell.is_finite() {
            return bad(format!("solvers need ell > 0, got {}", self.ell));
        }
        if !(self.p > 1.0) || !self.p.is_finite() {
            return bad(format!("need p > 1, got {}", self.p));
        }
        if !(self.radius > 0.0) {
            return bad(format!("need radius > 0, got {}", self.radius));
        }
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return bad(format!("need eps > 0, got {}", self.eps));
        }
        match self.geometry {
            Geometry::Line if self.n != 1 => return bad(format!("line geometry needs n = 1, got {}", self.n)),
            Geometry::Radial if self.n < 2 => return bad(format!("radial geometry needs n >= 2, got {}", self.n)),
            _ => {}
        }
        for (name, d) in [("u0", &self.u0), ("u1", &self.u1)] {
            d.validate()?;
            if let Some(r) = d.support_radius() {
                if r > self.radius * (1.0 + 1e-12) {
                    return bad(format!("{name} support radius {r} exceeds radius {}", self.radius));
                }
            }
        }
        Ok(())
    }

    pub fn constants(&self) -> Result<KernelConstants> {
        KernelConstants::new(self.ell, Some(self.p))
    }

    /// Radius beyond which the data vanish (effective radius for Gaussians).
    fn data_extent(&self) -> f64 {
        self.radius
            .max(self.u0.effective_radius())
            .max(self.u1.effective_radius())
    }
}

fn default_cfl() -> f64 {
    0.5
}
fn default_t_floor() -> f64 {
    1.0
}
fn default_edp_start() -> f64 {
    0.1
}
fn default_margin() -> usize {
    8
}

/// Discretization controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dx: f64,
    /// Final time, in the original time variable.
    pub horizon: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// Speed floor in the CFL rule: `dt <= cfl dx / max(t, t_floor)^l`.
    #[serde(default = "default_t_floor")]
    pub t_floor: f64,
    /// Times at which slices are stored exactly, in addition to `stride`.
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// Store every `stride`-th step (0 disables).
    #[serde(default)]
    pub stride: usize,
    /// Original time at which EDP mode takes over from the Tricomi start.
    #[serde(default = "default_edp_start")]
    pub edp_start: f64,
    /// Extra cells beyond the light cone of the horizon.
    #[serde(default = "default_margin")]
    pub margin_cells: usize,
}

impl GridConfig {
    pub fn new(dx: f64, horizon: f64) -> Self {
        Self {
            dx,
            horizon,
            cfl: default_cfl(),
            t_floor: default_t_floor(),
            snapshot_times: Vec::new(),
            stride: 0,
            edp_start: default_edp_start(),
            margin_cells: default_margin(),
        }
    }

    pub fn with_snapshots(mut self, times: Vec<f64>) -> Self {
        self.snapshot_times = times;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::domain("GridConfig", m));
        if !(self.dx > 0.0) || !self.dx.is_finite() {
            return bad(format!("need dx > 0, got {}", self.dx));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return bad(format!("need a finite horizon > 0, got {}", self.horizon));
        }
        if !(self.cfl > 0.0 && self.cfl <= 0.9) {
            return bad(format!("need 0 < cfl <= 0.9, got {}", self.cfl));
        }
        if !(self.t_floor > 0.0) {
            return bad(format!("need t_floor > 0, got {}", self.t_floor));
        }
        if !(self.edp_start > 0.0) {
            return bad(format!("need edp_start > 0, got {}", self.edp_start));
        }
        if self.snapshot_times.iter().any(|t| !(*t > 0.0)) {
            return bad("snapshot times must be positive".into());
        }
        Ok(())
    }
}

fn default_threshold_factor() -> f64 {
    1e6
}
fn default_dt_min() -> f64 {
    1e-10
}
fn default_kappa() -> f64 {
    0.05
}

/// Blow-up detection and nonlinear step control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionConfig {
    /// Blow-up when `max |u_t| >= threshold_factor * max(eps, dx)`.
    #[serde(default = "default_threshold_factor")]
    pub threshold_factor: f64,
    #[serde(default = "default_dt_min")]
    pub dt_min: f64,
    /// Step limit `dt <= kappa / (rate of the nonlinear term)`.
    #[serde(default = "default_kappa")]
    pub kappa: f64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            threshold_factor: default_threshold_factor(),
            dt_min: default_dt_min(),
            kappa: default_kappa(),
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_factor > 0.0) || !(self.dt_min > 0.0) || !(self.kappa > 0.0) {
            return Err(Error::domain(
                "DetectionConfig",
                "threshold_factor, dt_min and kappa must be positive",
            ));
        }
        Ok(())
    }

    pub fn threshold(&self, eps: f64, dx: f64) -> f64 {
        self.threshold_factor * eps.max(dx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Completed,
    BlewUp,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    DerivativeThreshold,
    DtUnderflow,
    Nan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupVerdict {
    pub status: Status,
    /// Midpoint of `bracket` when the run blew up.
    pub lifespan_estimate: Option<f64>,
    /// `[last stable time, trigger time]`.
    pub bracket: Option<[f64; 2]>,
    pub trigger: Option<Trigger>,
    pub diagnostics: BTreeMap<String, f64>,
}

/// One time step: start time, step (original time), CFL ratio and the
/// largest `|u_t|` at the start time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub dt: f64,
    pub cfl: f64,
    pub max_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub field: SpaceTimeField,
    pub verdict: BlowupVerdict,
    pub steps: Vec<StepRecord>,
}

/// Spatial nodes for a run: symmetric about 0 on the line, `r >= 0` radially.
pub fn build_nodes(params: &ModelParams, grid: &GridConfig) -> Vec<f64> {
    let reach = params.data_extent() + phi_unchecked(params.ell, grid.horizon);
    let m = (reach / grid.dx).ceil() as usize + grid.margin_cells;
    match params.geometry {
        Geometry::Line => (0..=2 * m).map(|i| (i as f64 - m as f64) * grid.dx).collect(),
        Geometry::Radial => (0..=m).map(|i| i as f64 * grid.dx).collect(),
    }
}

/// `Lap u` on the index window `lo..=hi` (`lo >= 1` on the line); boundary
/// nodes are held at zero.
fn laplacian(geometry: Geometry, n: u32, dx: f64, u: &[f64], out: &mut [f64], (lo, hi): (usize, usize)) {
    let inv = 1.0 / (dx * dx);
    match geometry {
        Geometry::Line => {
            for i in lo..=hi {
                out[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv;
            }
        }
        Geometry::Radial => {
            let nf = n as f64;
            let k = (nf - 1.0) / (2.0 * dx);
            for i in lo..=hi {
                out[i] = if i == 0 {
                    // Even extension at r = 0: Lap u = n u_rr.
                    nf * 2.0 * (u[1] - u[0]) * inv
                } else {
                    let r = i as f64 * dx;
                    (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv + k / r * (u[i + 1] - u[i - 1])
                };
            }
        }
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
}

/// Forcing terms of one form of the equation at a time level.
trait Form {
    /// Coefficient of `Lap` at native time `s`.
    fn speed_sq(&self, s: f64) -> f64;
    /// Nonlinear term for derivative `w` at native time `s`.
    fn nonlinear(&self, s: f64, w: f64) -> f64;
    /// Damping coefficient at native time `s`.
    fn damping(&self, s: f64) -> f64;
}

struct TricomiForm {
    ell: f64,
    p: f64,
    linear: bool,
}

impl Form for TricomiForm {
    fn speed_sq(&self, t: f64) -> f64 {
        t.powf(2.0 * self.ell)
    }
    fn nonlinear(&self, _t: f64, w: f64) -> f64 {
        if self.linear {
            0.0
        } else {
            w.abs().powf(self.p)
        }
    }
    fn damping(&self, _t: f64) -> f64 {
        0.0
    }
}

struct EdpForm {
    mu: f64,
    c_lp: f64,
    p: f64,
    linear: bool,
}

impl Form for EdpForm {
    fn speed_sq(&self, _tau: f64) -> f64 {
        1.0
    }
    fn nonlinear(&self, tau: f64, w: f64) -> f64 {
        if self.linear {
            0.0
        } else {
            self.c_lp * tau.powf(self.mu * (self.p - 2.0)) * w.abs().powf(self.p)
        }
    }
    fn damping(&self, tau: f64) -> f64 {
        self.mu / tau
    }
}

/// Two-level state of the three-level scheme in some native time `s`.
struct Levels {
    s_prev: f64,
    prev: Vec<f64>,
    s: f64,
    cur: Vec<f64>,
}

struct Workspace {
    lap: Vec<f64>,
    rate: Vec<f64>,
    next: Vec<f64>,
}

/// One predictor-corrector step of `w_ss + damping w_s - speed^2 Lap w = N(w_s)`
/// from `lv.s` to `lv.s + h1` on the index window `win`. On return `ws.next`
/// holds the new level and `ws.rate` the centered derivative at `lv.s`;
/// entries outside the window are left untouched (zero).
fn three_level_step<F: Form>(
    form: &F,
    geometry: Geometry,
    n: u32,
    dx: f64,
    lv: &Levels,
    h1: f64,
    win: (usize, usize),
    ws: &mut Workspace,
) {
    let h0 = lv.s - lv.s_prev;
    let hh = h0 + h1;
    let s = lv.s;
    laplacian(geometry, n, dx, &lv.cur, &mut ws.lap, win);
    let c2 = form.speed_sq(s);
    let m = form.damping(s);
    let denom = 2.0 + m * h0;
    let update = |forcing: f64, cur: f64, prev: f64| {
        let dm = cur - prev;
        cur + (forcing * h1 * hh + dm * (h1 / h0) * (2.0 - m * h1)) / denom
    };
    let centered = |next: f64, cur: f64, prev: f64| (h0 * h0 * (next - cur) + h1 * h1 * (cur - prev)) / (h0 * h1 * hh);
    for i in win.0..=win.1 {
        let (cur, prev, lap) = (lv.cur[i], lv.prev[i], ws.lap[i]);
        // Predictor: backward difference corrected to second order.
        let wb = (cur - prev) / h0;
        let wp = wb + 0.5 * h0 * (c2 * lap - m * wb + form.nonlinear(s, wb));
        let predicted = update(c2 * lap + form.nonlinear(s, wp), cur, prev);
        // Corrector: centered derivative with the predicted level.
        let wc = centered(predicted, cur, prev);
        let next = update(c2 * lap + form.nonlinear(s, wc), cur, prev);
        ws.next[i] = next;
        ws.rate[i] = centered(next, cur, prev);
    }
}

/// Taylor start `w(s + h) = w + h w_s + lap_weight Lap w + h^2/2 (N(w_s) - damping w_s)`.
#[allow(clippy::too_many_arguments)]
fn taylor_seed<F: Form>(
    form: &F,
    geometry: Geometry,
    n: u32,
    dx: f64,
    s: f64,
    w: &[f64],
    ws_: &[f64],
    h: f64,
    lap_weight: f64,
    win: (usize, usize),
    lap: &mut [f64],
) -> Vec<f64> {
    laplacian(geometry, n, dx, w, lap, win);
    let m = form.damping(s);
    let mut out = vec![0.0; w.len()];
    for i in win.0..=win.1 {
        out[i] = w[i] + h * ws_[i] + lap_weight * lap[i] + 0.5 * h * h * (form.nonlinear(s, ws_[i]) - m * ws_[i]);
    }
    out
}

/// Index window covering the light cone of the data at original time `t`
/// plus `margin` cells, clamped to the interior nodes.
#[derive(Clone, Copy)]
struct Window {
    geometry: Geometry,
    center: usize,
    len: usize,
    extent: f64,
    ell: f64,
    dx: f64,
    margin: usize,
}

impl Window {
    fn at(&self, t: f64) -> (usize, usize) {
        let k = ((self.extent + phi_unchecked(self.ell, t)) / self.dx).ceil() as usize + self.margin;
        match self.geometry {
            Geometry::Line => (self.center.saturating_sub(k).max(1), (self.center + k).min(self.len - 2)),
            Geometry::Radial => (0, k.min(self.len - 2)),
        }
    }
}

/// Picks the next step: CFL with the speed at the end of the step, the
/// nonlinear limit, and clipping to the next target time.
struct StepControl {
    nu: f64,
    dx: f64,
    kappa: f64,
}

impl StepControl {
    /// Largest step from `s` whose speed at `s + h` satisfies `h * speed <= nu dx`.
    fn cfl_step(&self, s: f64, speed: impl Fn(f64) -> f64) -> f64 {
        let mut h = self.nu * self.dx / speed(s);
        for _ in 0..3 {
            h = self.nu * self.dx / speed(s + h);
        }
        h
    }

    fn limit(&self, h: f64, nonlinear_rate: f64) -> f64 {
        if nonlinear_rate > 0.0 {
            h.min(self.kappa / nonlinear_rate)
        } else {
            h
        }
    }

    /// Clips `h` so that `s + h` does not pass `target`; splits the remainder
    /// evenly when one full step would leave a sliver.
    fn clip(h: f64, s: f64, target: f64) -> f64 {
        let rest = target - s;
        if rest <= h {
            rest
        } else if rest < 2.0 * h {
            0.5 * rest
        } else {
            h
        }
    }
}

struct Recorder {
    field: SpaceTimeField,
    steps: Vec<StepRecord>,
    stride: usize,
    snapshots: Vec<f64>,
    next_snapshot: usize,
    count: usize,
}

impl Recorder {
    fn next_target(&self, horizon: f64) -> f64 {
        self.snapshots
            .get(self.next_snapshot)
            .copied()
            .unwrap_or(horizon)
            .min(horizon)
    }

    /// Called with each new level at original time `t`.
    fn offer(&mut self, t: f64, slice: &[f64], horizon: f64) {
        self.count += 1;
        let mut store = self.stride > 0 && self.count % self.stride == 0;
        while let Some(&snap) = self.snapshots.get(self.next_snapshot) {
            if snap <= t * (1.0 + 1e-14) {
                store |= (snap - t).abs() <= 1e-12 * t.max(1.0);
                self.next_snapshot += 1;
            } else {
                break;
            }
        }
        store |= t >= horizon * (1.0 - 1e-14);
        if store && self.field.last_time().map_or(true, |last| t > last) {
            self.field.push(t, slice.to_vec());
        }
    }
}

/// Shared state threaded through the Tricomi and EDP phases.
struct Driver<'a> {
    params: &'a ModelParams,
    grid: &'a GridConfig,
    detection: &'a DetectionConfig,
    threshold: f64,
    nu: f64,
    rec: Recorder,
    last_stable: f64,
}

enum Phase {
    Continue,
    Stop(Status, Option<Trigger>, Option<[f64; 2]>),
}

impl Driver<'_> {
    /// Checks the rate at original time `t`; `Stop` on blow-up.
    /// Checks the largest `|u_t|` at original time `t`; `Stop` on blow-up.
    fn check(&mut self, t: f64, max_rate: f64, finite: bool) -> Phase {
        if !finite || !max_rate.is_finite() {
            return Phase::Stop(Status::BlewUp, Some(Trigger::Nan), Some([self.last_stable, t]));
        }
        if max_rate >= self.threshold {
            return Phase::Stop(Status::BlewUp, Some(Trigger::DerivativeThreshold), Some([self.last_stable, t]));
        }
        self.last_stable = t;
        Phase::Continue
    }
}

/// Largest `|rate|` over the window and whether `rate` and `next` are finite there.
fn scan(rate: &[f64], next: &[f64], (lo, hi): (usize, usize)) -> (f64, bool) {
    let mut m: f64 = 0.0;
    let mut finite = true;
    for i in lo..=hi {
        finite &= rate[i].is_finite() && next[i].is_finite();
        m = m.max(rate[i].abs());
    }
    (m, finite)
}

/// Moves the scheme forward one level, recycling the oldest buffer.
fn rotate(lv: &mut Levels, ws: &mut Workspace, s_next: f64) {
    std::mem::swap(&mut lv.prev, &mut lv.cur);
    std::mem::swap(&mut lv.cur, &mut ws.next);
    lv.s_prev = lv.s;
    lv.s = s_next;
}

/// Runs with data sampled from the profiles.
pub fn run(params: &ModelParams, grid: &GridConfig, detection: &DetectionConfig) -> Result<RunOutcome> {
    params.validate()?;
    grid.validate()?;
    let nodes = build_nodes(params, grid);
    let u0: Vec<f64> = nodes.iter().map(|x| params.eps * params.u0.eval(x.abs())).collect();
    let u1: Vec<f64> = nodes.iter().map(|x| params.eps * params.u1.eval(x.abs())).collect();
    run_samples(params, grid, detection, nodes, u0, u1)
}

/// Runs from explicit initial samples `u(0) = u0`, `u_t(0) = u1` on `nodes`
/// (already multiplied by `eps`). `nodes` must be uniform with spacing `grid.dx`.
pub fn run_samples(
    params: &ModelParams,
    grid: &GridConfig,
    detection: &DetectionConfig,
    nodes: Vec<f64>,
    u0: Vec<f64>,
    u1: Vec<f64>,
) -> Result<RunOutcome> {
    params.validate()?;
    grid.validate()?;
    detection.validate()?;
    if nodes.len() < 3 || u0.len() != nodes.len() || u1.len() != nodes.len() {
        return Err(Error::domain("fd_solver", "need >= 3 nodes and matching sample lengths"));
    }
    let (ell, p, n, dx) = (params.ell, params.p, params.n, grid.dx);
    let geometry = params.geometry;
    // The r = 0 row of the radial Laplacian is n times stiffer.
    let nu = match geometry {
        Geometry::Radial if n > 2 => grid.cfl * (2.0 / n as f64).sqrt(),
        _ => grid.cfl,
    };
    let mut snapshots: Vec<f64> = grid.snapshot_times.iter().copied().filter(|t| *t <= grid.horizon).collect();
    snapshots.sort_by(f64::total_cmp);
    snapshots.dedup();
    let mut field = SpaceTimeField::new(geometry, dx, nodes);
    field.push(0.0, u0.clone());
    let mut driver = Driver {
        params,
        grid,
        detection,
        threshold: detection.threshold(params.eps, dx),
        nu,
        rec: Recorder {
            field,
            steps: Vec::new(),
            stride: grid.stride,
            snapshots,
            next_snapshot: 0,
            count: 0,
        },
        last_stable: 0.0,
    };

    let tricomi = TricomiForm {
        ell,
        p,
        linear: params.linear,
    };
    let control = StepControl {
        nu,
        dx,
        kappa: detection.kappa,
    };
    let floor = grid.t_floor;
    let speed = |t: f64| t.max(floor).powf(ell);
    let nonlinear_rate = |rate: f64| if params.linear { 0.0 } else { rate.powf(p - 1.0) };
    let edp_switch = match params.mode {
        Mode::Tricomi => f64::INFINITY,
        Mode::Edp => grid.edp_start.min(grid.horizon),
    };
    let nodes = &driver.rec.field.nodes;
    let extent = nodes
        .iter()
        .zip(u0.iter().zip(&u1))
        .filter(|(_, (a, b))| **a != 0.0 || **b != 0.0)
        .fold(0.0, |m: f64, (x, _)| m.max(x.abs()));
    let window = Window {
        geometry,
        center: nodes.len() / 2,
        len: nodes.len(),
        extent,
        ell,
        dx,
        margin: grid.margin_cells,
    };

    // Taylor start from t = 0, where the equation reduces to u_tt = |u_t|^p.
    let len = u0.len();
    let mut ws = Workspace {
        lap: vec![0.0; len],
        rate: u1.clone(),
        next: vec![0.0; len],
    };
    let rate0 = max_abs(&u1);
    let target = driver.rec.next_target(grid.horizon).min(edp_switch);
    let h = StepControl::clip(control.limit(control.cfl_step(0.0, speed), nonlinear_rate(rate0)), 0.0, target);
    let lap_weight = h.powf(2.0 * ell + 2.0) / ((2.0 * ell + 1.0) * (2.0 * ell + 2.0));
    let win = window.at(h);
    let first = taylor_seed(&tricomi, geometry, n, dx, 0.0, &u0, &u1, h, lap_weight, win, &mut ws.lap);
    let (_, finite) = scan(&u1, &first, win);
    if let Phase::Stop(st, tr, br) = driver.check(0.0, rate0, finite) {
        return Ok(finish(driver, st, tr, br, 0.0));
    }
    driver.rec.steps.push(StepRecord {
        t: 0.0,
        dt: h,
        cfl: h * speed(0.0) / dx,
        max_rate: rate0,
    });
    driver.rec.field.dt_history.push(h);
    driver.rec.offer(h, &first, grid.horizon);
    let mut lv = Levels {
        s_prev: 0.0,
        prev: u0,
        s: h,
        cur: first,
    };
    let mut rate = rate0;

    // Tricomi phase.
    loop {
        let t = lv.s;
        if t >= grid.horizon * (1.0 - 1e-14) {
            return Ok(finish(driver, Status::Completed, None, None, t));
        }
        let target = driver.rec.next_target(grid.horizon).min(if t < edp_switch { edp_switch } else { f64::INFINITY });
        let raw = control.limit(control.cfl_step(t, speed), nonlinear_rate(rate));
        if raw < detection.dt_min {
            let br = Some([driver.last_stable, t]);
            return Ok(finish(driver, Status::BlewUp, Some(Trigger::DtUnderflow), br, t));
        }
        let h1 = StepControl::clip(raw, t, target);
        let win = window.at(t + h1);
        three_level_step(&tricomi, geometry, n, dx, &lv, h1, win, &mut ws);
        let (max_rate, finite) = scan(&ws.rate, &ws.next, win);
        if let Phase::Stop(st, tr, br) = driver.check(t, max_rate, finite) {
            return Ok(finish(driver, st, tr, br, t));
        }
        rate = max_rate;
        if t >= edp_switch * (1.0 - 1e-14) {
            // Transplant: v = u, v_tau = u_t / t^l at tau = phi(t).
            let scale = t.powf(-ell);
            let w: Vec<f64> = ws.rate.iter().map(|r| r * scale).collect();
            let cur = std::mem::take(&mut lv.cur);
            return edp_phase(driver, window, cur, w, t);
        }
        driver.rec.steps.push(StepRecord {
            t,
            dt: h1,
            cfl: h1 * speed(t) / dx,
            max_rate,
        });
        driver.rec.field.dt_history.push(h1);
        let t_next = t + h1;
        driver.rec.offer(t_next, &ws.next, grid.horizon);
        rotate(&mut lv, &mut ws, t_next);
    }
}

fn edp_phase(mut driver: Driver<'_>, window: Window, v: Vec<f64>, w: Vec<f64>, t0: f64) -> Result<RunOutcome> {
    let params = driver.params;
    let grid = driver.grid;
    let detection = driver.detection;
    let (ell, p, n, dx) = (params.ell, params.p, params.n, grid.dx);
    let geometry = params.geometry;
    let k = params.constants()?;
    let form = EdpForm {
        mu: k.mu_ell,
        c_lp: k.c_ell_p.unwrap_or(1.0),
        p,
        linear: params.linear,
    };
    let control = StepControl {
        nu: driver.nu,
        dx,
        kappa: detection.kappa,
    };
    let tau_of = |t: f64| phi_unchecked(ell, t);
    let t_of = |tau: f64| phi_inverse_unchecked(ell, tau);
    let tau_horizon = tau_of(grid.horizon);
    let nonlinear_rate = |tau: f64, wmax: f64| {
        if params.linear {
            0.0
        } else {
            form.c_lp * tau.powf(form.mu * (p - 2.0)) * wmax.powf(p - 1.0)
        }
    };
    // Requested original times map to tau targets; landing on one snaps the
    // stored time back to the exact request.
    let tau_target = |d: &Driver<'_>| tau_of(d.rec.next_target(grid.horizon));
    let landed = |d: &Driver<'_>, tau_next: f64| {
        let target = d.rec.next_target(grid.horizon);
        if (tau_next - tau_of(target)).abs() <= 1e-14 * tau_next {
            target
        } else {
            t_of(tau_next)
        }
    };
    // Below tau_floor = phi(t_floor) the step shrinks in proportion to tau so
    // that the damping mu / tau stays resolved.
    let tau_floor = tau_of(grid.t_floor);
    let cfl_step = |tau: f64| control.nu * dx * (tau / tau_floor).min(1.0);
    let record = |d: &mut Driver<'_>, tau: f64, h: f64, wmax: f64| {
        let t = t_of(tau);
        let dt = t_of(tau + h) - t;
        d.rec.steps.push(StepRecord {
            t,
            dt,
            cfl: h / dx,
            max_rate: wmax * t.powf(ell),
        });
        d.rec.field.dt_history.push(dt);
    };

    let tau0 = tau_of(t0);
    let mut wmax = max_abs(&w);
    let h = StepControl::clip(control.limit(cfl_step(tau0), nonlinear_rate(tau0, wmax)), tau0, tau_target(&driver));
    let mut lap = vec![0.0; v.len()];
    let win = window.at(t_of(tau0 + h));
    let first = taylor_seed(&form, geometry, n, dx, tau0, &v, &w, h, 0.5 * h * h, win, &mut lap);
    record(&mut driver, tau0, h, wmax);
    let t1 = landed(&driver, tau0 + h);
    driver.rec.offer(t1, &first, grid.horizon);
    let len = v.len();
    let mut lv = Levels {
        s_prev: tau0,
        prev: v,
        s: tau0 + h,
        cur: first,
    };
    let mut ws = Workspace {
        lap,
        rate: vec![0.0; len],
        next: vec![0.0; len],
    };
    loop {
        let tau = lv.s;
        let t = t_of(tau);
        if tau >= tau_horizon * (1.0 - 1e-14) {
            return Ok(finish(driver, Status::Completed, None, None, t));
        }
        let raw = control.limit(cfl_step(tau), nonlinear_rate(tau, wmax));
        // dt_min applies in the original time variable.
        if t_of(tau + raw) - t < detection.dt_min {
            let br = Some([driver.last_stable, t]);
            return Ok(finish(driver, Status::BlewUp, Some(Trigger::DtUnderflow), br, t));
        }
        let h1 = StepControl::clip(raw, tau, tau_target(&driver));
        let win = window.at(t_of(tau + h1));
        three_level_step(&form, geometry, n, dx, &lv, h1, win, &mut ws);
        let (w_now, finite) = scan(&ws.rate, &ws.next, win);
        if let Phase::Stop(st, tr, br) = driver.check(t, w_now * t.powf(ell), finite) {
            return Ok(finish(driver, st, tr, br, t));
        }
        wmax = w_now;
        record(&mut driver, tau, h1, wmax);
        let tau_next = tau + h1;
        let t_next = landed(&driver, tau_next);
        driver.rec.offer(t_next, &ws.next, grid.horizon);
        rotate(&mut lv, &mut ws, tau_next);
    }
}

fn finish(driver: Driver<'_>, status: Status, trigger: Option<Trigger>, bracket: Option<[f64; 2]>, t_end: f64) -> RunOutcome {
    let Driver { rec, threshold, .. } = driver;
    let mut diagnostics = BTreeMap::new();
    let steps = &rec.steps;
    diagnostics.insert("steps".into(), steps.len() as f64);
    diagnostics.insert("final_time".into(), t_end);
    diagnostics.insert("threshold".into(), threshold);
    diagnostics.insert("max_cfl".into(), steps.iter().fold(0.0, |m: f64, s| m.max(s.cfl)));
    diagnostics.insert("min_dt".into(), steps.iter().fold(f64::INFINITY, |m: f64, s| m.min(s.dt)));
    diagnostics.insert("max_rate".into(), steps.iter().fold(0.0, |m: f64, s| m.max(s.max_rate)));
    if let Some(br) = bracket {
        diagnostics.insert("bracket_width".into(), br[1] - br[0]);
        // Heuristic: how far the step shrank over the last few steps.
        let tail: Vec<f64> = steps.iter().rev().take(10).map(|s| s.dt).collect();
        if let (Some(last), Some(first)) = (tail.first(), tail.last()) {
            diagnostics.insert("dt_shrink_last10".into(), first / last);
        }
    }
    RunOutcome {
        verdict: BlowupVerdict {
            status,
            lifespan_estimate: bracket.filter(|_| status == Status::BlewUp).map(|b| 0.5 * (b[0] + b[1])),
            bracket,
            trigger,
            diagnostics,
        },
        field: rec.field,
        steps: rec.steps,
    }
}

/// `U(t, z) = int_{R^(n-1)} u(t, z, w) dw` for a radial field stored at
/// time `field.times[k]`; for `n = 1` this is `u` itself.
pub fn transverse_integral(field: &SpaceTimeField, k: usize, z: f64, n: u32) -> Result<f64> {
    let profile = field
        .slices
        .get(k)
        .ok_or_else(|| Error::domain("transverse_integral", format!("no stored slice {k}")))?;
    transverse_integral_of(field, profile, z, n)
}

/// Same as [`transverse_integral`] for an arbitrary profile on `field.nodes`.
pub fn transverse_integral_of(field: &SpaceTimeField, profile: &[f64], z: f64, n: u32) -> Result<f64> {
    if n == 1 {
        return field.interpolate_x(profile, z);
    }
    if field.geometry != Geometry::Radial {
        return Err(Error::domain("transverse_integral", "n >= 2 needs a radial field"));
    }
    let rmax = *field.nodes.last().unwrap_or(&0.0);
    let z = z.abs();
    if z > rmax {
        return Err(Error::domain("transverse_integral", format!("|z| = {z} beyond the grid radius {rmax}")));
    }
    let nf = n as f64;
    // |S^(n-2)| with |S^0| = 2.
    let omega = 2.0 * std::f64::consts::PI.powf((nf - 1.0) / 2.0) / gamma_fn((nf - 1.0) / 2.0)?;
    // rho^(n-2) d rho = (r^2 - z^2)^((n-3)/2) r dr on r in [z, rmax].
    let beta = (nf - 3.0) / 2.0;
    let u = |r: f64| field.interpolate_x(profile, r.min(rmax)).unwrap_or(0.0);
    let first_node = field.nodes.partition_point(|&r| r <= z);
    if first_node >= field.nodes.len() {
        return Ok(0.0);
    }
    let edge = gauss_jacobi_rule(0.0, beta, 8)?;
    let rule = gauss_legendre(4)?;
    let mut total = edge.integrate_on(z, field.nodes[first_node], |r| r * (r + z).powf(beta) * u(r));
    for w in field.nodes[first_node..].windows(2) {
        total += rule.integrate_on(w[0], w[1], |r| r * (r * r - z * z).powf(beta) * u(r));
    }
    Ok(omega * total)
}
