//! Normalization and simplification of regressed expressions.

mod fold;
mod linear;
mod normalize;
mod piecewise;
mod refine;

pub use fold::{bool_formula, fold_action, fold_formula, fold_term};
pub use linear::{linear_form, solve_atom, Linear};
pub use normalize::{normalize_fluent_atoms, one_point_elim};
pub use piecewise::{to_piecewise, PiecewiseTerm};
pub use refine::{lift, refine, refine_atom};
