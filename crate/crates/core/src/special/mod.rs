//! Gamma function, the diagonal hypergeometric family `F(g, g; 1; z)` and
//! Gauss-Jacobi quadrature.

mod gamma;
mod hyp2f1;

#[doc(hidden)]
pub mod hyp2f1_internal {
    pub(crate) use super::hyp2f1::{diag_connection, diag_series};
    pub use super::hyp2f1::branch_values;
}
mod jacobi;

pub use gamma::{beta_fn, gamma_fn, ln_gamma};
pub use hyp2f1::{
    hyp2f1_diag, hyp2f1_diag_at_one, hyp2f1_series, ConnectionCoefficients, CROSSOVER,
};
pub use jacobi::{gauss_jacobi_rule, gauss_legendre, JacobiRule};
