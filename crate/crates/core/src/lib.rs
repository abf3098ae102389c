//! Goal regression for degrees of belief in the situation calculus.
//!
//! A belief query `Bel(φ, do(α, S0))` is reduced by regression to an
//! expression over the initial fluent values only, which is then summed
//! exactly (finite domains) or integrated numerically (real domains).

pub mod ast;
pub mod error;
pub mod evaluate;
pub mod number;
pub mod parse;
pub mod regression;
pub mod simplify;
pub mod theory;

pub use error::{Diagnostic, Error, Result};
