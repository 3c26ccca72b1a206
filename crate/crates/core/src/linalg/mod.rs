//! Linear algebra kernels: small dense Hermitian matrices, sparse matrices, Krylov solvers.

pub mod dense;
pub mod krylov;
pub mod sparse;

pub use dense::{CMat, C};
pub use krylov::{gmres, GmresOptions, GmresOutcome};
pub use sparse::{Csr, Ilu0};
