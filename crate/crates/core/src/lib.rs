//! Steklov eigenvalues of the cuboid `(-a_1, a_1) x ... x (-a_d, a_d)`.
//!
//! Separated eigenfunctions are products of one-dimensional factors, each a
//! sin/cos or sinh/cosh (or, exceptionally, a linear function). The library
//! computes them in three ways:
//!
//! * [`exact`]: one root of a monotone scalar equation per lattice box and
//!   choice of hyperbolic parities, plus the finite exceptional families;
//! * [`quasi`]: closed-form approximate eigenvalues and lattice counting, fast
//!   enough for a census of millions of eigenvalues;
//! * [`weyl`]: the analytic two-term counting asymptotics those counts are
//!   compared against.
//!
//! [`extremal`] handles the first nonzero eigenvalue, isoperimetric comparison
//! and recovery of a rectangle from its perimeter and first eigenvalue.
//! [`concentration`] measures how boundary mass of high eigenfunctions
//! localizes on facets.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod concentration;
pub mod error;
pub mod exact;
pub mod extremal;
pub mod factors1d;
pub mod geometry;
pub mod quasi;
pub mod weyl;

mod root;

pub use error::{Result, SteklovError};
pub use geometry::{Bipartition, BoxIndex, Cuboid, SignPattern};
