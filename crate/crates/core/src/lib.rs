//! Quasi-arcs and quasi-circles on finite metric spaces.
//!
//! The crate works on desk-scale discretizations: a [`MetricSpace`] is a
//! finite point set with an exact metric and a resolution `mesh_h`, arcs are
//! injective point sequences whose steps stay below that resolution, and every
//! construction reports the constants it actually achieved.
//!
//! * [`space`] generates and validates spaces (grid square, Sierpinski carpet,
//!   circle, two squares glued at a point).
//! * [`arc`] holds arcs, circles, quasi-arc measurements and the follows check.
//! * [`invariants`] estimates doubling, linear connectivity and annular linear
//!   connectivity constants.
//! * [`straighten`] builds separated nets and the joining construction that
//!   turns an arc into a local quasi-arc.
//! * [`split`] splits a quasi-arc into two relatively separated quasi-arcs and
//!   iterates the split into many quasi-arcs between two points.
//! * [`circle`] is the disjoint-path engine and the quasi-circle through a
//!   finite set of points.
//!
//! The crate is `no_std` with `alloc`; the `std` feature only enables
//! `std::error::Error` through `core::error::Error` re-exports.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod arc;
pub mod circle;
pub mod flow;
pub mod graph;
pub mod invariants;
pub mod num;
pub mod space;
pub mod split;
pub mod straighten;

pub use arc::{ConstructionReport, DiscreteArc, DiscreteCircle, Locality};
pub use graph::PointSet;
pub use space::{Annulus, Ball, MetricSpace, PointId};
