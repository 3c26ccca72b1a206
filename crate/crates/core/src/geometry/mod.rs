//! Grids, fields, differentiation and quadrature on flat hyperhermitian models.

pub mod field;
pub mod grid;
pub mod ops;
pub mod spectral;
pub mod structure;

pub use field::{HermitianField, ScalarField};
pub use grid::{BallGrid, Grid, NodeKind, TorusGrid};
pub use ops::{
    complex_hessian, complex_hessian_at, integrate, make_flat_model, quaternionic_laplacian, trace_against, twist,
    twisted_hessian,
};
pub use spectral::Spectral;
pub use structure::ComplexStructureJ;
