//! Symbolic and numerical toolkit for k-symplectic Hamiltonian field
//! theories in canonical coordinates: exterior calculus on the chart of
//! (T¹ₖ)*Q, Hamilton–de Donder–Weyl equations, classification of
//! infinitesimal Cartan symmetries of arbitrary order, conserved
//! quantities via a Poincaré-lemma homotopy operator, and numerical
//! conservation checks along gridded solutions.

pub mod chart;
pub mod error;
pub mod expr;
pub mod forms;
pub mod hdw;
pub mod noether;

pub use chart::{Chart, Point, Symbol};
pub use error::{Error, Result};
pub use expr::{is_zero, parse, Expr, Func, Verdict, ZeroTest};
