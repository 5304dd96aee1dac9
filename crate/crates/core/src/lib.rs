//! Relaxed, inexact Douglas–Rachford splitting for equilibrium problems
//!
//! ```text
//! find x in C such that F(x, y) + G(x, y) >= 0 for all y in C,
//! ```
//!
//! where `F` and `G` are monotone bifunctions on a closed convex set `C` of
//! R^d. The iteration alternates the resolvents of `G` and `F`, and the
//! solution is read off as `J_{gamma G} x` at the fixed point `x`.
//! Bifunctions and maximally monotone operators are interchangeable through
//! [`operators::operator_from_bifunction`] and
//! [`operators::bifunction_from_operator`].

pub mod bifunctions;
pub mod cli;
pub mod error;
pub mod hilbert;
pub mod operators;
pub mod problems;
pub mod resolvents;
pub mod solver;

pub use error::{Error, Result};
