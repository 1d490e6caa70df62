//! Singular Yamabe obstructions of hypersurfaces, computed numerically from
//! truncated Taylor jets.
//!
//! The crate is `no_std` and only needs an allocator. Everything works in
//! local coordinates: an ambient metric given by component expressions, an
//! embedding given by a parametrisation, and a base point in the chart.
//! Quantities are computed as jets around that point and contracted in an
//! orthonormal frame whose first leg is the unit normal.

#![no_std]

extern crate alloc;

pub mod ambient;
pub mod error;
pub mod expansion;
pub mod expr;
pub mod fermi;
pub mod field;
pub mod functional;
pub mod geometry;
pub mod hypersurface;
pub mod identities;
pub mod jets;
pub mod obstruction;
pub mod tensor;

pub use error::{Error, Result};
pub use expr::Expr;
pub use geometry::{Geometry, Setup};
pub use jets::Jet;
pub use tensor::Tensor;
