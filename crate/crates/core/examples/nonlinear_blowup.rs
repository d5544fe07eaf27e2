//! A single nonlinear run that blows up, with its detection bracket.
//!
//! cargo run --release --example nonlinear_blowup

use tricomi_lab::fd::{run, DetectionConfig, GridConfig, Mode, ModelParams};
use tricomi_lab::field::Geometry;
use tricomi_lab::profile::DataProfile;

fn main() -> tricomi_lab::Result<()> {
    let params = ModelParams {
        n: 1,
        ell: 1.0,
        p: 2.0,
        radius: 1.0,
        eps: 0.25,
        u0: DataProfile::compact_bump(1.0, 1.0, 4),
        u1: DataProfile::compact_bump(1.0, 1.0, 4),
        mode: Mode::Tricomi,
        geometry: Geometry::Line,
        linear: false,
    };
    let mut grid = GridConfig::new(0.04, 8.0);
    grid.stride = 200;
    let out = run(&params, &grid, &DetectionConfig::default())?;
    println!("status {:?}, trigger {:?}", out.verdict.status, out.verdict.trigger);
    if let Some([lo, hi]) = out.verdict.bracket {
        println!("lifespan in [{lo:.6}, {hi:.6}] after {} steps", out.steps.len());
    }
    for (t, slice) in out.field.times.iter().zip(&out.field.slices) {
        let max = slice.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        println!("t = {t:8.4}  max|u| = {max:.4e}");
    }
    Ok(())
}
