//! A short eps ladder of nonlinear runs and the fitted lifespan slope.
//! The full-size sweep lives in the acceptance suite and the CLI config.
//!
//! cargo run --release --example lifespan_sweep

use tricomi_lab::blowup::{lifespan_sweep, SweepConfig};
use tricomi_lab::fd::{DetectionConfig, GridConfig, Mode, ModelParams};
use tricomi_lab::field::Geometry;
use tricomi_lab::profile::DataProfile;

fn main() -> tricomi_lab::Result<()> {
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
        eps_max: 0.5,
        points: 8,
        sensitivity: false,
        ..SweepConfig::default()
    };
    let report = lifespan_sweep(&params, &GridConfig::new(0.05, 4.0), &DetectionConfig::default(), &sweep)?;
    for r in &report.records {
        println!("eps {:.4}: T in [{:.5}, {:.5}] ({:?})", r.epsilon, r.t_lo, r.t_hi, r.status);
    }
    println!(
        "fitted slope {:.4} +- {:.4}, upper-bound law {}",
        report.fitted_slope.unwrap_or(f64::NAN),
        report.slope_stderr.unwrap_or(f64::NAN),
        report.theoretical_slope
    );
    Ok(())
}
