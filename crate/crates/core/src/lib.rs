//! Numerical laboratory for the generalized Tricomi operator
//! `u_tt - t^(2l) Lap u = |u_t|^p`: exponent algebra, the one-dimensional
//! representation formula, finite-difference blow-up runs and lifespan sweeps.

pub mod blowup;
pub mod commands;
pub mod config;
pub mod error;
pub mod exponents;
pub mod fd;
pub mod field;
pub mod functional;
pub mod kernel;
pub mod linear;
pub mod persist;
pub mod plot;
pub mod profile;
pub mod quad;
pub mod special;

pub use error::{Error, FieldError, Result};
