//! Numerical laboratory for multi-bubble fields on linked circles in `R^4`.
//!
//! The crate builds the explicit segregated ansatz — `k` sharply concentrated
//! bubbles per component, placed on `m` great circles of the 3-sphere that are
//! pairwise Hopf-linked — and verifies every computable ingredient of the
//! construction: symmetry algebra, lattice interaction sums, weighted norms of
//! the ansatz residual, Pohozaev-type expansions, and the reduced algebraic
//! system fixing the blow-up rate and the concentration radius.

pub mod bubbles;
pub mod error;
pub mod expansions;
pub mod fields;
pub mod geometry;
pub mod numeric;
pub mod potential;
pub mod quadrature;
pub mod reduced;
pub mod residual;
pub mod verify;

pub use error::{Error, Result};
pub use fields::{Field, Jet, Point, SmoothField, SymmetryClass};
