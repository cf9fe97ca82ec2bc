//! Lattice-shift conjugate operators for Schrödinger operators on a periodic grid.
//!
//! The conjugate operator is `A = ½ Σ_j (Q_j x_j + x_j Q_j)` with
//! `Q_j = (T_j − T_j*)/(2iβ)` and `T_j` the shift by `β` along axis `j`.
//! Its commutator with `H₀ = −½Δ` has symbol `Σ_j sin(βξ_j) ξ_j / β`, which is
//! positive on `0 < |ξ| < π/β`.

pub mod error;
pub mod grid;
pub mod io;
pub mod lap;
pub mod linalg;
pub mod mourre;
pub mod operators;
pub mod potentials;
pub mod symcom;

pub use error::{Error, Result};
pub use grid::{make_grid, Field, GridSpec};
