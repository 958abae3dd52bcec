//! Numerical toolkit for divergence problems on external-cusp domains.

pub mod error;
pub mod field;
pub mod geometry;
pub mod quadrature;
pub mod weights;
pub mod bogovskii;
pub mod cuspdiv;
pub mod analysis;

pub use error::{Error, Result};
pub use field::{ScalarField, Support, VectorField};
pub use geometry::{CuspDomain, LiftedDomain, Point};
pub use quadrature::QuadratureRule;
