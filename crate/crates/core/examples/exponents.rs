//! Critical exponents and lifespan laws for a few (n, l, p).
//!
//! cargo run --example exponents

use tricomi_lab::exponents::{exponent_table, glassey_exact, ExponentContext, Rational};

fn main() -> tricomi_lab::Result<()> {
    println!("{:>2} {:>5} {:>6} {:>8} {:>10} {:>8}  law", "n", "l", "p", "m", "glassey", "strauss");
    for (n, ell, p) in [(1, 1.0, 2.0), (1, 1.0, 3.0), (2, 0.5, 1.5), (3, 0.0, 1.5), (3, 2.0, 1.2)] {
        // l = 0 is the classical wave equation and has its own constructor.
        let ctx = if ell == 0.0 {
            ExponentContext::classical_limit(n, Some(p))?
        } else {
            ExponentContext::new(n, ell, Some(p))?
        };
        let t = exponent_table(&ctx);
        println!(
            "{:>2} {:>5} {:>6} {:>8.4} {:>10.6} {:>8.4}  {}",
            n,
            ell,
            p,
            t.effective_dimension,
            t.glassey.unwrap_or(f64::INFINITY),
            t.generalized_strauss.unwrap_or(f64::NAN),
            t.lifespan_law.map(|l| format!("{l:?}")).or(t.lifespan_note).unwrap_or_default()
        );
    }

    // Exact rational arithmetic: l = 1/2, n = 2 gives m = 3 and p = 2.
    let pc = glassey_exact(2, Rational::new(1, 2));
    println!("exact glassey for n = 2, l = 1/2: {pc:?}");
    Ok(())
}
