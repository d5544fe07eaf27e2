//! The diagonal hypergeometric function, its z -> 1 behaviour and
//! Gauss-Jacobi rules for endpoint-singular weights.
//!
//! cargo run --example special_functions

use tricomi_lab::special::{gamma_fn, gauss_jacobi_rule, hyp2f1_diag, hyp2f1_diag_at_one, CROSSOVER};

fn main() -> tricomi_lab::Result<()> {
    for g in [0.1, 0.25, 0.4] {
        let row: Vec<String> = [0.0, 0.5, CROSSOVER, 0.9, 0.999]
            .iter()
            .map(|z| format!("{:.6}", hyp2f1_diag(g, *z).unwrap()))
            .collect();
        let gauss = gamma_fn(1.0 - 2.0 * g)? / gamma_fn(1.0 - g)?.powi(2);
        println!("g = {g}: F(g,g;1;z) at z = 0, .5, .75, .9, .999: {}", row.join(" "));
        println!("         limit at 1: {:.12} (Gamma ratio {:.12})", hyp2f1_diag_at_one(g)?, gauss);
    }

    // int_{-1}^{1} (1-s)^a (1+s)^a ds for a = -0.4, with exact value 2^{2a+1} B(a+1, a+1).
    let a = -0.4;
    let rule = gauss_jacobi_rule(a, a, 12)?;
    let exact = 2f64.powf(2.0 * a + 1.0) * gamma_fn(a + 1.0)?.powi(2) / gamma_fn(2.0 * a + 2.0)?;
    println!("Jacobi mass, 12 nodes: {:.15} vs {:.15}", rule.total_mass(), exact);
    let smooth = rule.integrate(|s| (2.0 * s).cos());
    println!("int cos(2s) (1-s^2)^-0.4 ds = {smooth:.15}");
    Ok(())
}
