//! Entropy and L¹ quantities.

use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{integrate, ScalarField};
use crate::scalar::Real;

/// `∫ e^F (1 + |F|)^p`.
pub fn entropy_norm<T: Real>(f: &ScalarField<T>, p: T) -> Result<T> {
    if !(p > T::zero()) {
        return Err(Error::InvalidArgument("entropy exponent p must be positive".into()));
    }
    integrate(&f.map(|v| v.exp() * (T::one() + Float::abs(v)).powf(p)), None)
}

/// `∫ (-ψ)`.
pub fn l1_estimate<T: Real>(psi: &ScalarField<T>) -> Result<T> {
    integrate(&psi.map(|v| -v), None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_flat_model;

    #[test]
    fn constants() {
        let (grid, _, _) = make_flat_model::<f64>(1, 4, 1.0).unwrap();
        let z = ScalarField::zeros(grid.clone());
        assert!((entropy_norm(&z, 3.0).unwrap() - 1.0).abs() < 1e-14);
        let c = ScalarField::constant(grid.clone(), -0.5);
        let want = (-0.5f64).exp() * 1.5f64.powi(4);
        assert!((entropy_norm(&c, 4.0).unwrap() - want).abs() < 1e-13);
        assert!(entropy_norm(&c, 0.0).is_err());
        assert_eq!(l1_estimate(&z).unwrap(), 0.0);
        assert!((l1_estimate(&c).unwrap() - 0.5).abs() < 1e-15);

        let (g2, _, _) = make_flat_model::<f64>(1, 4, 2.0).unwrap();
        let c2 = ScalarField::constant(g2, 1.0);
        assert!((entropy_norm(&c2, 2.0).unwrap() - 1f64.exp() * 4.0 * 16.0).abs() < 1e-11);
    }
}
