//! The constant second complex structure `J` of a flat hyperhermitian model.

use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{CMat, C};
use crate::scalar::{lit, to_f64, Real};

/// Matrix `M` with entries `J_i^{b̄}`: the image of `∂/∂z_i` under `J` is
/// `sum_b M[i][b] ∂/∂z̄_b`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexStructureJ<T> {
    m: CMat<T>,
}

/// Names of the invariants a valid structure satisfies.
pub const INVARIANTS: [&str; 3] = ["unitary (M M^* = Id)", "J^2 = -1 (M conj(M) = -Id)", "antisymmetric (M^T = -M)"];

impl<T: Real> ComplexStructureJ<T> {
    /// Validates all invariants to `1e-12` (scaled for `f32`).
    pub fn new(m: CMat<T>) -> Result<Self> {
        let j = Self { m };
        let tol = lit::<T>(1e-12).max(T::epsilon() * lit(64.0));
        for (name, defect) in j.defects() {
            if defect > tol || defect.is_nan() {
                return Err(Error::InvalidStructure(format!("{name} fails with defect {:e}", to_f64(defect))));
            }
        }
        Ok(j)
    }

    /// Wraps a matrix without validation. Used to inject faults in tests and
    /// diagnostics; every consumer that needs the invariants calls
    /// [`ComplexStructureJ::validate`].
    pub fn new_unchecked(m: CMat<T>) -> Self {
        Self { m }
    }

    /// Block-diagonal `[[0, 1], [-1, 0]]` repeated `m` times.
    pub fn standard(m: usize) -> Self {
        let n = 2 * m;
        let mut a = CMat::zeros(n);
        for b in 0..m {
            a[(2 * b, 2 * b + 1)] = C::new(T::one(), T::zero());
            a[(2 * b + 1, 2 * b)] = C::new(-T::one(), T::zero());
        }
        Self { m: a }
    }

    /// Standard block structure with each block multiplied by the phase
    /// `e^{i theta}`; still unitary, antisymmetric and squares to `-1`.
    pub fn with_phase(m: usize, theta: T) -> Self {
        let mut j = Self::standard(m);
        let ph = C::new(theta.cos(), theta.sin());
        for z in j.m.as_mut_slice() {
            *z = *z * ph;
        }
        j
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.m.clone()).map(|_| ())
    }

    /// Defect of each invariant, in the order of [`INVARIANTS`].
    pub fn defects(&self) -> [(&'static str, T); 3] {
        let n = self.m.n();
        let id = CMat::identity(n);
        let unitary = (&self.m * &self.m.adjoint()).max_abs_diff(&id);
        let square = (&self.m * &self.m.conj()).max_abs_diff(&id.scale(-T::one()));
        let antisym = self.m.transpose().max_abs_diff(&self.m.scale(-T::one()));
        [(INVARIANTS[0], unitary), (INVARIANTS[1], square), (INVARIANTS[2], antisym)]
    }

    pub fn matrix(&self) -> &CMat<T> {
        &self.m
    }

    pub fn n(&self) -> usize {
        self.m.n()
    }

    /// `M conj(A) M^*`: the action of `J` on the coefficient matrix of a
    /// real (1,1)-form, up to sign.
    pub fn conjugate_action(&self, a: &CMat<T>) -> CMat<T> {
        &(&self.m * &a.conj()) * &self.m.adjoint()
    }

    /// Slice version of [`conjugate_action`](Self::conjugate_action) for
    /// per-node kernels; `work` holds `n*n` entries.
    pub fn conjugate_action_into(&self, a: &[C<T>], out: &mut [C<T>], work: &mut [C<T>]) {
        let n = self.m.n();
        let m = self.m.as_slice();
        // work = M conj(A)
        for i in 0..n {
            for j in 0..n {
                let mut s = C::new(T::zero(), T::zero());
                for k in 0..n {
                    s = s + m[i * n + k] * a[k * n + j].conj();
                }
                work[i * n + j] = s;
            }
        }
        // out = work M^*
        for i in 0..n {
            for j in 0..n {
                let mut s = C::new(T::zero(), T::zero());
                for k in 0..n {
                    s = s + work[i * n + k] * m[j * n + k].conj();
                }
                out[i * n + j] = s;
            }
        }
    }

    /// Whether every entry of `M` is real.
    pub fn is_real(&self) -> bool {
        self.m.as_slice().iter().all(|z| Float::abs(z.im) == T::zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_structure_is_valid() {
        for m in 1..=3 {
            let j = ComplexStructureJ::<f64>::standard(m);
            assert!(j.validate().is_ok());
            for (_, d) in j.defects() {
                assert_eq!(d, 0.0);
            }
        }
        assert!(ComplexStructureJ::<f64>::with_phase(2, 0.7).validate().is_ok());
    }

    #[test]
    fn symmetric_matrix_is_rejected_by_name() {
        let bad = CMat::<f64>::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let err = ComplexStructureJ::new(bad).unwrap_err().to_string();
        assert!(err.contains("J^2 = -1") || err.contains("antisymmetric"), "{err}");
    }

    #[test]
    fn non_unitary_matrix_is_rejected() {
        let bad = CMat::<f64>::from_real_rows(&[&[0.0, 2.0], &[-2.0, 0.0]]);
        let err = ComplexStructureJ::new(bad).unwrap_err().to_string();
        assert!(err.contains("unitary"), "{err}");
    }

    #[test]
    fn slice_action_matches_matrix_action() {
        let j = ComplexStructureJ::<f64>::with_phase(2, 0.3);
        let mut a = CMat::zeros(4);
        for i in 0..4 {
            for k in 0..4 {
                a[(i, k)] = C::new((i * 4 + k) as f64 * 0.1, (i as f64 - k as f64) * 0.2);
            }
        }
        let want = j.conjugate_action(&a);
        let mut out = vec![C::new(0.0, 0.0); 16];
        let mut work = out.clone();
        j.conjugate_action_into(a.as_slice(), &mut out, &mut work);
        assert!(CMat::from_row_major(4, out).max_abs_diff(&want) < 1e-15);
    }
}
