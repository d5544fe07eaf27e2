//! The weighted transverse functional along the characteristic family,
//! against its lower bound from the data.
//!
//! cargo run --release --example characteristic_functional

use tricomi_lab::fd::{run, DetectionConfig, GridConfig, Mode, ModelParams};
use tricomi_lab::field::Geometry;
use tricomi_lab::functional::{check_data_term_bound, evaluate_U};
use tricomi_lab::kernel::phi_inverse;
use tricomi_lab::profile::DataProfile;

fn main() -> tricomi_lab::Result<()> {
    let params = ModelParams {
        n: 1,
        ell: 1.0,
        p: 2.0,
        radius: 1.0,
        eps: 0.1,
        u0: DataProfile::compact_bump(1.0, 1.0, 4),
        u1: DataProfile::compact_bump(1.0, 1.0, 4),
        mode: Mode::Tricomi,
        geometry: Geometry::Line,
        linear: false,
    };
    let zs: Vec<f64> = (0..8).map(|i| 1.0 + 0.5 * i as f64).collect();
    let horizon = phi_inverse(params.ell, zs[zs.len() - 1] + params.radius)?;
    let mut grid = GridConfig::new(0.02, horizon);
    grid.stride = 4;
    let field = run(&params, &grid, &DetectionConfig::default())?.field;
    let trace = evaluate_U(&field, &params, &zs)?;
    let report = check_data_term_bound(&trace, &params, 1e-4)?;
    println!("{:>6} {:>8} {:>12} {:>12}", "z", "t", "U", "margin");
    for i in 0..zs.len() {
        println!("{:>6.2} {:>8.4} {:>12.6e} {:>12.4e}", zs[i], trace.times[i], trace.u_values[i], report.margins[i]);
    }
    println!("bound K eps |u0 + u1|_1 = {:.6e}, holds {}", report.bound, report.holds);
    Ok(())
}
