//! The same linear problem solved in the original time variable and in the
//! Euler-Darboux-Poisson variable, compared at matched times.
//!
//! cargo run --release --example edp_consistency

use tricomi_lab::fd::{run, DetectionConfig, GridConfig, Mode, ModelParams};
use tricomi_lab::field::Geometry;
use tricomi_lab::profile::DataProfile;

fn main() -> tricomi_lab::Result<()> {
    let mut params = ModelParams {
        n: 1,
        ell: 2.0,
        p: 2.0,
        radius: 1.0,
        eps: 1.0,
        u0: DataProfile::compact_bump(1.0, 1.0, 4),
        u1: DataProfile::compact_bump(0.5, 1.0, 4),
        mode: Mode::Tricomi,
        geometry: Geometry::Line,
        linear: true,
    };
    let times = vec![0.5, 1.0, 1.5];
    let grid = GridConfig::new(0.02, 1.5).with_snapshots(times.clone());
    let tricomi = run(&params, &grid, &DetectionConfig::default())?.field;
    params.mode = Mode::Edp;
    let edp = run(&params, &grid, &DetectionConfig::default())?.field;
    for t in times {
        let (a, b) = (tricomi.slice_at(t)?, edp.slice_at(t)?);
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let diff = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0f64, f64::max);
        println!("t = {t}: max |u| = {scale:.6}, relative difference {:.3e}", diff / scale);
    }
    Ok(())
}
