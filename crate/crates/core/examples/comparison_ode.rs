//! Blow-up of the comparison ODE: closed form, numerical integration and
//! the small-eps scaling of the blow-up point.
//!
//! cargo run --example comparison_ode

use tricomi_lab::blowup::{fit_line, ode_blowup_point, ode_integrate, ComparisonODE};
use tricomi_lab::exponents::comparison_exponent;

fn main() -> tricomi_lab::Result<()> {
    let (n, ell, p) = (1, 1.0, 2.0);
    let a = comparison_exponent(n, ell / (2.0 * (ell + 1.0)), p);
    println!("n = {n}, l = {ell}, p = {p}: a = {a}, predicted exponent {}", -(p - 1.0) / (1.0 - a));
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for k in 0..=12 {
        let eps = 10f64.powf(-(k as f64) / 2.0);
        let ode = ComparisonODE::new(1.0, 0.5, p, 1.0, a, eps)?;
        let closed = ode_blowup_point(&ode)?;
        let tr = ode_integrate(&ode, 1e300)?;
        let z = tr.divergence.unwrap_or(f64::INFINITY);
        println!("eps {eps:9.3e}: z* {closed:12.6e}, integrated {z:12.6e}, status {:?}", tr.status);
        // Only the small-eps end is in the asymptotic regime.
        if eps <= 1e-3 {
            xs.push(eps.ln());
            ys.push(closed.ln());
        }
    }
    let fit = fit_line(&xs, &ys, &vec![1.0; xs.len()])?;
    println!("fitted exponent {:.4}", fit.slope);

    // Critical case a = 1: the blow-up point grows like exp(c eps^{1-p}).
    let ode = ComparisonODE::new(1.0, 0.5, 3.0, 1.0, 1.0, 0.5)?;
    println!("critical, eps = 0.5: z* = {:.6e}", ode_blowup_point(&ode)?);
    Ok(())
}
