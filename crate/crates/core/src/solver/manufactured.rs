//! Right-hand sides with a known solution.

use crate::error::Result;
use crate::geometry::{ComplexStructureJ, HermitianField, ScalarField};
use crate::pointalg::{cone_check, g_hat, g_tilde, log_det_ratio, require_member, ConeKind};
use crate::scalar::Real;

/// `F = log det(g̃) - log det(g)` (or with `ĝ`) for a given potential, so the
/// potential solves the equation with this `F` and `b = 0`.
pub fn manufacture_rhs<T: Real>(
    kind: ConeKind,
    potential: &ScalarField<T>,
    g: &HermitianField<T>,
    h: Option<&HermitianField<T>>,
    j: &ComplexStructureJ<T>,
) -> Result<ScalarField<T>> {
    require_member(&cone_check(kind, potential, g, h, j)?)?;
    let a = match kind {
        ConeKind::PshJ => g_tilde(g, potential, j)?,
        ConeKind::PshJN1 => g_hat(h.expect("checked by cone_check"), g, potential, j)?,
    };
    log_det_ratio(&a, g)
}
