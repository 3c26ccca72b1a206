//! Smooth positive approximations of `max(x, 0)`.

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Real};

/// `τ_k(x) = (x + sqrt(x² + 1/k²)) / 2`.
///
/// Each member is smooth and strictly positive, `τ_k(x) > max(x, 0)`, and
/// `τ_k(x) - max(x, 0) ≤ 1/(2k)`, so `τ_k` decreases to `max(x, 0)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SmoothingSequence {
    k: usize,
}

impl SmoothingSequence {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("smoothing index must be >= 1".into()));
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn eval<T: Real>(&self, x: T) -> T {
        let e = T::one() / (from_usize::<T>(self.k) * from_usize::<T>(self.k));
        let r = (x * x + e).sqrt();
        if x >= T::zero() {
            (x + r) * lit(0.5)
        } else {
            // avoids cancellation for large negative x
            e * lit(0.5) / (r - x)
        }
    }

    /// Upper bound on `τ_k - max(·, 0)`.
    pub fn gap<T: Real>(&self) -> T {
        T::one() / (lit::<T>(2.0) * from_usize::<T>(self.k))
    }
}
