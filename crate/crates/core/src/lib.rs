//! Anisotropic Volterra symbol calculus.
//!
//! The crate provides an exact expression algebra for symbols built from
//! `Θ = p_w(x, ξ) + iτ` powers, the anisotropic pseudo-norm and the special
//! symbols `ρ` and `a_ε`, three Borel-type summation procedures that realize
//! an asymptotic expansion as an actual symbol, numeric Fourier inversion to
//! space-time kernels, parametrices of parabolic operators `P + ∂_t` and the
//! small-time heat coefficients derived from them.

pub mod cli;
pub mod coeff;
pub mod error;
pub mod heat;
pub mod jet;
pub mod kernel;
pub mod parametrix;
pub mod summation;
pub mod symbol;
pub mod symexpr;

pub use coeff::Coeff;
pub use error::{Error, Result};
pub use symexpr::{Context, DerivIndex, EvalPoint, SymExpr, Var};
