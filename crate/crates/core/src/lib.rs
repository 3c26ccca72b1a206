//! Complex and (n-1)-form Monge-Ampère equations with a twisted complex
//! structure on flat hyperhermitian models, and a harness that measures every
//! constant of the accompanying L∞ estimate.

pub mod error;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod pointalg;
pub mod scalar;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

pub type GridF64 = geometry::Grid<f64>;
pub type ScalarFieldF64 = geometry::ScalarField<f64>;
pub type HermitianFieldF64 = geometry::HermitianField<f64>;
pub type ComplexStructureF64 = geometry::ComplexStructureJ<f64>;
pub type SolveReportF64 = solver::SolveReport<f64>;

pub type GridF32 = geometry::Grid<f32>;
pub type ScalarFieldF32 = geometry::ScalarField<f32>;
pub type HermitianFieldF32 = geometry::HermitianField<f32>;
pub type ComplexStructureF32 = geometry::ComplexStructureJ<f32>;
pub type SolveReportF32 = solver::SolveReport<f32>;
