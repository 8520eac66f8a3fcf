//! Numerical hyperelliptic am functions for planar loop solitons.
//!
//! The crate reconstructs MKdV loop-soliton shapes directly from the data of
//! a hyperelliptic curve y² = ∏(x − e_b):
//!
//! * [`curve`] — curves, branch points and the angular φ-chart around a
//!   distinguished point e_a;
//! * [`reality`] — reality conditions on branch points, case classification
//!   (rotating vs. librating admissible ranges) and curve synthesis;
//! * [`quad`] — tanh-sinh and Gauss-Legendre quadrature engines plus an AGM
//!   oracle for complete elliptic integrals;
//! * [`contour`] — the chart differentials du_g/dφ, incomplete integrals
//!   u(φ) and genus-1 period lattices;
//! * [`amfun`] — inversion u ↦ φ (the am function), an independent pendulum
//!   oracle at genus 1, and the summed hyperelliptic am/al evaluation;
//! * [`flow`] — motion of the degree-g divisor under the tangent and
//!   evolution flows with automatic branch-sheet bookkeeping;
//! * [`soliton`] — planar shape reconstruction, winding numbers and
//!   (static) MKdV residuals.

pub mod amfun;
pub mod contour;
pub mod curve;
pub mod error;
pub mod flow;
pub mod quad;
pub mod reality;
pub mod soliton;

pub use curve::{Curve, PhiChart};
pub use error::{Error, Result};
