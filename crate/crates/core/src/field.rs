//! Space-time sample storage shared by the representation-formula and
//! finite-difference solvers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spatial geometry of a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    /// `x` on the real line, nodes symmetric about 0.
    #[default]
    Line,
    /// Radial profile `u(t, r)` with nodes `r >= 0`.
    Radial,
}

/// Slices `u(times[k], nodes[i])` on a uniform spatial grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeField {
    pub geometry: Geometry,
    pub dx: f64,
    pub nodes: Vec<f64>,
    pub times: Vec<f64>,
    pub slices: Vec<Vec<f64>>,
    /// Every time step taken by the producer (empty for pointwise solvers).
    pub dt_history: Vec<f64>,
    /// Per-sample error estimates, when the producer has them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub errors: Option<Vec<Vec<f64>>>,
}

impl SpaceTimeField {
    pub fn new(geometry: Geometry, dx: f64, nodes: Vec<f64>) -> Self {
        Self {
            geometry,
            dx,
            nodes,
            times: Vec::new(),
            slices: Vec::new(),
            dt_history: Vec::new(),
            errors: None,
        }
    }

    pub fn push(&mut self, t: f64, slice: Vec<f64>) {
        debug_assert_eq!(slice.len(), self.nodes.len());
        self.times.push(t);
        self.slices.push(slice);
    }

    /// Checks the structural invariants: slice lengths and increasing times.
    pub fn validate(&self) -> Result<()> {
        if self.slices.len() != self.times.len() {
            return Err(Error::domain("SpaceTimeField", "slice count differs from time count"));
        }
        if self.slices.iter().any(|s| s.len() != self.nodes.len()) {
            return Err(Error::domain("SpaceTimeField", "slice length differs from node count"));
        }
        if !self.times.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::domain("SpaceTimeField", "time stamps not strictly increasing"));
        }
        Ok(())
    }

    pub fn last_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    pub fn max_abs(&self) -> f64 {
        self.slices
            .iter()
            .flat_map(|s| s.iter())
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    /// Largest `|x|` with `|u| > threshold` in slice `k`, or 0 if none.
    pub fn support_extent(&self, k: usize, threshold: f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.slices[k])
            .filter(|(_, v)| v.abs() > threshold)
            .fold(0.0, |m: f64, (x, _)| m.max(x.abs()))
    }

    /// Profile at time `t` by cubic Lagrange interpolation over the four
    /// nearest stored slices (fewer near the ends).
    pub fn slice_at(&self, t: f64) -> Result<Vec<f64>> {
        let idx = stencil(&self.times, t, 4).ok_or_else(|| {
            Error::domain(
                "SpaceTimeField",
                format!("time {t} outside stored range [{:?}, {:?}]", self.times.first(), self.times.last()),
            )
        })?;
        let ws = lagrange_weights(&idx.iter().map(|&k| self.times[k]).collect::<Vec<_>>(), t);
        let mut out = vec![0.0; self.nodes.len()];
        for (&k, w) in idx.iter().zip(ws) {
            for (o, v) in out.iter_mut().zip(&self.slices[k]) {
                *o += w * v;
            }
        }
        Ok(out)
    }

    /// Cubic interpolation in space of a profile sampled on `self.nodes`.
    pub fn interpolate_x(&self, profile: &[f64], x: f64) -> Result<f64> {
        let idx = stencil(&self.nodes, x, 4).ok_or_else(|| {
            Error::domain("SpaceTimeField", format!("x = {x} outside the spatial grid"))
        })?;
        let ws = lagrange_weights(&idx.iter().map(|&k| self.nodes[k]).collect::<Vec<_>>(), x);
        Ok(idx.iter().zip(ws).map(|(&k, w)| w * profile[k]).sum())
    }

    /// `u(t, x)` by cubic interpolation in time and space.
    pub fn value_at(&self, t: f64, x: f64) -> Result<f64> {
        let s = self.slice_at(t)?;
        self.interpolate_x(&s, x)
    }
}

/// Indices of up to `width` consecutive samples of the sorted `grid`
/// surrounding `x`; `None` if `x` is outside `[grid[0], grid[last]]`.
fn stencil(grid: &[f64], x: f64, width: usize) -> Option<Vec<usize>> {
    let n = grid.len();
    if n == 0 || x < grid[0] || x > grid[n - 1] {
        return None;
    }
    let width = width.min(n);
    let hi = grid.partition_point(|&g| g < x);
    let start = hi.saturating_sub(width / 2).min(n - width);
    Some((start..start + width).collect())
}

fn lagrange_weights(xs: &[f64], x: f64) -> Vec<f64> {
    (0..xs.len())
        .map(|i| {
            xs.iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, xj)| (x - xj) / (xs[i] - xj))
                .product()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SpaceTimeField {
        let nodes: Vec<f64> = (0..21).map(|i| -1.0 + 0.1 * i as f64).collect();
        let mut f = SpaceTimeField::new(Geometry::Line, 0.1, nodes.clone());
        for k in 0..6 {
            let t = 0.3 * k as f64 + 0.05 * (k * k) as f64;
            f.push(t, nodes.iter().map(|x| t * t * t - 2.0 * t + x * x * x).collect());
        }
        f
    }

    #[test]
    fn cubic_interpolation_is_exact_on_cubics() {
        let f = sample();
        f.validate().unwrap();
        let t = 0.77;
        let x = 0.123;
        let exact = t * t * t - 2.0 * t + x * x * x;
        assert!((f.value_at(t, x).unwrap() - exact).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_is_an_error() {
        let f = sample();
        assert!(f.slice_at(-0.1).is_err());
        assert!(f.interpolate_x(&f.slices[0], 1.5).is_err());
    }

    #[test]
    fn support_extent_reports_outermost_node() {
        let mut f = SpaceTimeField::new(Geometry::Line, 1.0, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        f.push(0.0, vec![0.0, 1e-3, 1.0, 0.0, 0.0]);
        assert_eq!(f.support_extent(0, 1e-6), 1.0);
        assert_eq!(f.support_extent(0, 1e-2), 0.0);
    }
}
