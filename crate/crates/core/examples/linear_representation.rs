//! Evaluate the 1D linear solution from its integral representation and
//! check a manufactured source.
//!
//! cargo run --release --example linear_representation

use tricomi_lab::linear::{linear_solution_slice, LinearProblem, SourceSpec};
use tricomi_lab::profile::DataProfile;

fn main() -> tricomi_lab::Result<()> {
    let ell = 1.0;
    let bump = LinearProblem {
        ell,
        eps: 1.0,
        u0: DataProfile::compact_bump(1.0, 1.0, 4),
        u1: DataProfile::compact_bump(1.0, 1.0, 4),
        source: SourceSpec::Zero,
        tol: 1e-10,
    };
    let xs: Vec<f64> = (0..=8).map(|i| -2.0 + 0.5 * i as f64).collect();
    let field = linear_solution_slice(&bump, &[0.5, 1.0, 1.5], &xs)?;
    for (t, slice) in field.times.iter().zip(&field.slices) {
        let row: Vec<String> = slice.iter().map(|u| format!("{u:+.5}")).collect();
        println!("t = {t}: {}", row.join(" "));
    }

    // Source (l+2)(l+1) t^l with zero data has solution t^{l+2}.
    let forced = LinearProblem {
        u0: DataProfile::Zero,
        u1: DataProfile::Zero,
        source: SourceSpec::TimePower {
            coef: (ell + 2.0) * (ell + 1.0),
            power: ell,
        },
        ..bump
    };
    let u = forced.value(1.2, 0.3)?;
    println!("manufactured: u(1.2, 0.3) = {:.12} +- {:.1e}, exact {:.12}", u.value, u.error, 1.2f64.powf(ell + 2.0));
    Ok(())
}
