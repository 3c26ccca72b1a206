//! Small dense complex matrices, sized by the complex dimension `n`.
//!
//! Storage is row-major. The routines here run once per grid node, so the
//! slice-based kernels (`cholesky_in_place`, `jacobi_eigh`, ...) never allocate.

use crate::scalar::{lit, Real};
use num_complex::Complex;
use num_traits::{Float, One, Zero};
use std::ops::{Add, Mul, Sub};

pub type C<T> = Complex<T>;

/// Dense `n x n` complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat<T> {
    n: usize,
    data: Vec<C<T>>,
}

impl<T: Real> CMat<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![C::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, T::one())
    }

    pub fn scaled_identity(n: usize, s: T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = C::new(s, T::zero());
        }
        m
    }

    pub fn from_diag(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = C::new(x, T::zero());
        }
        m
    }

    pub fn from_row_major(n: usize, data: Vec<C<T>>) -> Self {
        assert_eq!(data.len(), n * n, "row-major data must hold n*n entries");
        Self { n, data }
    }

    /// Builds a real matrix from row-major `f64` entries.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n);
            for (j, &x) in r.iter().enumerate() {
                m[(i, j)] = C::new(lit(x), T::zero());
            }
        }
        m
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [C<T>] {
        &mut self.data
    }

    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j];
            }
        }
        out
    }

    pub fn conj(&self) -> Self {
        Self { n: self.n, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, s: T) -> Self {
        Self { n: self.n, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn trace(&self) -> C<T> {
        (0..self.n).fold(C::zero(), |acc, i| acc + self.data[i * self.n + i])
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (a, b)| m.max((a - b).norm()))
    }

    /// Largest deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> T {
        self.max_abs_diff(&self.adjoint())
    }

    /// `(A + A^*) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let adj = self.adjoint();
        let half = lit::<T>(0.5);
        Self {
            n: self.n,
            data: self.data.iter().zip(&adj.data).map(|(a, b)| (a + b) * half).collect(),
        }
    }

    /// Sum of entrywise products `sum_ij A_ij B_ij` (no conjugation).
    pub fn contract(&self, other: &Self) -> C<T> {
        self.data.iter().zip(&other.data).fold(C::zero(), |acc, (a, b)| acc + a * b)
    }

    /// Eigenvalues (ascending) of a Hermitian matrix.
    pub fn eigvalsh(&self) -> Vec<T> {
        let mut w = vec![T::zero(); self.n];
        let mut work = self.data.clone();
        jacobi_eigh(&mut work, self.n, &mut w, None);
        w
    }

    /// Eigen-decomposition `A = V diag(w) V^*` of a Hermitian matrix;
    /// eigenvectors are the columns of `V`.
    pub fn eigh(&self) -> (Vec<T>, Self) {
        let n = self.n;
        let mut w = vec![T::zero(); n];
        let mut work = self.data.clone();
        let mut v = vec![C::zero(); n * n];
        jacobi_eigh(&mut work, n, &mut w, Some(&mut v));
        (w, Self { n, data: v })
    }

    /// Inverse of a Hermitian positive definite matrix through its
    /// eigen-decomposition. Returns `None` when an eigenvalue is `<= 0`.
    pub fn inverse_hpd(&self) -> Option<(Self, Vec<T>)> {
        let (w, v) = self.eigh();
        if w.iter().any(|&x| !(x > T::zero())) {
            return None;
        }
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = C::zero();
                for k in 0..n {
                    acc = acc + v[(i, k)] * v[(j, k)].conj() / w[k];
                }
                out[(i, j)] = acc;
            }
        }
        Some((out, w))
    }

    /// Determinant of a Hermitian matrix as the product of its eigenvalues.
    pub fn det_hermitian(&self) -> T {
        self.eigvalsh().into_iter().fold(T::one(), |p, x| p * x)
    }

    /// Determinant of a general matrix by Gaussian elimination with partial pivoting.
    pub fn det(&self) -> C<T> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = C::<T>::one();
        for col in 0..n {
            let mut piv = col;
            for r in col + 1..n {
                if a[r * n + col].norm() > a[piv * n + col].norm() {
                    piv = r;
                }
            }
            if a[piv * n + col].norm() == T::zero() {
                return C::zero();
            }
            if piv != col {
                for k in 0..n {
                    a.swap(col * n + k, piv * n + k);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det = det * p;
            for r in col + 1..n {
                let f = a[r * n + col] / p;
                for k in col..n {
                    let v = a[col * n + k];
                    a[r * n + k] = a[r * n + k] - f * v;
                }
            }
        }
        det
    }
}

impl<T> std::ops::Index<(usize, usize)> for CMat<T> {
    type Output = C<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.n + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for CMat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.n + j]
    }
}

impl<T: Real> Add for &CMat<T> {
    type Output = CMat<T>;
    fn add(self, rhs: &CMat<T>) -> CMat<T> {
        assert_eq!(self.n, rhs.n);
        CMat { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl<T: Real> Sub for &CMat<T> {
    type Output = CMat<T>;
    fn sub(self, rhs: &CMat<T>) -> CMat<T> {
        assert_eq!(self.n, rhs.n);
        CMat { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl<T: Real> Mul for &CMat<T> {
    type Output = CMat<T>;
    fn mul(self, rhs: &CMat<T>) -> CMat<T> {
        let n = self.n;
        assert_eq!(n, rhs.n);
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] = out.data[i * n + j] + a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

/// In-place Cholesky factorisation `A = L L^*` of a Hermitian matrix.
/// On success the lower triangle holds `L` (upper triangle is left untouched).
/// Returns `false` if `A` is not positive definite.
pub fn cholesky_in_place<T: Real>(a: &mut [C<T>], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j].re;
        for k in 0..j {
            d = d - a[j * n + k].norm_sqr();
        }
        if !(d > T::zero()) {
            return false;
        }
        let ljj = d.sqrt();
        a[j * n + j] = C::new(ljj, T::zero());
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s = s - a[i * n + k] * a[j * n + k].conj();
            }
            a[i * n + j] = s / ljj;
        }
    }
    true
}

/// `log det A` from a Cholesky factor.
pub fn chol_logdet<T: Real>(l: &[C<T>], n: usize) -> T {
    let two = lit::<T>(2.0);
    (0..n).fold(T::zero(), |acc, i| acc + two * l[i * n + i].re.ln())
}

/// Full inverse `A^{-1}` from the Cholesky factor `L` (lower triangle of `l`).
/// `work` must hold `n*n` entries.
pub fn chol_inverse<T: Real>(l: &[C<T>], n: usize, out: &mut [C<T>], work: &mut [C<T>]) {
    // work <- L^{-1} (lower triangular)
    for v in work.iter_mut() {
        *v = C::zero();
    }
    for j in 0..n {
        work[j * n + j] = C::new(T::one() / l[j * n + j].re, T::zero());
        for i in j + 1..n {
            let mut s = C::zero();
            for k in j..i {
                s = s + l[i * n + k] * work[k * n + j];
            }
            work[i * n + j] = -s / l[i * n + i].re;
        }
    }
    // A^{-1} = L^{-*} L^{-1}
    for i in 0..n {
        for j in 0..n {
            let mut s = C::zero();
            for k in i.max(j)..n {
                s = s + work[k * n + i].conj() * work[k * n + j];
            }
            out[i * n + j] = s;
        }
    }
}

/// Cyclic complex Jacobi eigenvalue iteration for a Hermitian matrix.
///
/// `a` is destroyed. Eigenvalues are written to `w` in ascending order; when
/// `v` is given it receives the matching unit eigenvectors as columns.
pub fn jacobi_eigh<T: Real>(a: &mut [C<T>], n: usize, w: &mut [T], mut v: Option<&mut [C<T>]>) {
    if let Some(v) = v.as_deref_mut() {
        for i in 0..n {
            for j in 0..n {
                v[i * n + j] = if i == j { C::one() } else { C::zero() };
            }
        }
    }
    let tiny = T::min_positive_value();
    let eps = T::epsilon();
    for _sweep in 0..64 {
        let mut off = T::zero();
        let mut diag = T::zero();
        for i in 0..n {
            diag = diag + a[i * n + i].re * a[i * n + i].re;
            for j in i + 1..n {
                off = off + a[i * n + j].norm_sqr();
            }
        }
        if off <= eps * eps * diag || off <= tiny {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                let mag = apq.norm();
                if mag <= tiny {
                    continue;
                }
                // Phase u makes the (p,q) entry real; then a real rotation.
                let u = apq / mag;
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                let theta = (aqq - app) / (lit::<T>(2.0) * mag);
                let t = if theta >= T::zero() {
                    T::one() / (theta + (theta * theta + T::one()).sqrt())
                } else {
                    -T::one() / (-theta + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                // R = E P with E = diag(1, conj(u)) on (p,q):
                // R_pp = c, R_pq = s, R_qp = -s conj(u), R_qq = c conj(u).
                let rpp = C::new(c, T::zero());
                let rpq = C::new(s, T::zero());
                let rqp = -(u.conj() * s);
                let rqq = u.conj() * c;
                // A <- A R (columns p, q)
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * rpp + akq * rqp;
                    a[k * n + q] = akp * rpq + akq * rqq;
                }
                // A <- R^* A (rows p, q)
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = rpp.conj() * apk + rqp.conj() * aqk;
                    a[q * n + k] = rpq.conj() * apk + rqq.conj() * aqk;
                }
                a[p * n + q] = C::zero();
                a[q * n + p] = C::zero();
                a[p * n + p].im = T::zero();
                a[q * n + q].im = T::zero();
                if let Some(v) = v.as_deref_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = vkp * rpp + vkq * rqp;
                        v[k * n + q] = vkp * rpq + vkq * rqq;
                    }
                }
            }
        }
    }
    // selection sort, ascending (n is small)
    for i in 0..n {
        w[i] = a[i * n + i].re;
    }
    for i in 0..n {
        let mut best = i;
        for j in i + 1..n {
            if w[j] < w[best] {
                best = j;
            }
        }
        if best != i {
            w.swap(i, best);
            if let Some(v) = v.as_deref_mut() {
                for k in 0..n {
                    v.swap(k * n + i, k * n + best);
                }
            }
        }
    }
}

/// Smallest eigenvalue of a Hermitian matrix given as a row-major slice.
pub fn min_eigenvalue<T: Real>(a: &[C<T>], n: usize, work: &mut [C<T>], w: &mut [T]) -> T {
    work.copy_from_slice(a);
    jacobi_eigh(work, n, w, None);
    w[0]
}

/// Relative size helper: `|x|` for `T: Real` without the `Signed` ambiguity.
#[inline(always)]
pub fn abs<T: Real>(x: T) -> T {
    Float::abs(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMat<f64> {
        let mut m = CMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        m.hermitian_part()
    }

    fn to_nalgebra(m: &CMat<f64>) -> nalgebra::DMatrix<Complex<f64>> {
        nalgebra::DMatrix::from_fn(m.n(), m.n(), |i, j| m[(i, j)])
    }

    #[test]
    fn jacobi_matches_nalgebra() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1usize, 2, 3, 4, 6] {
            for _ in 0..20 {
                let a = random_hermitian(&mut rng, n);
                let ours = a.eigvalsh();
                let mut theirs: Vec<f64> =
                    nalgebra::SymmetricEigen::new(to_nalgebra(&a)).eigenvalues.iter().copied().collect();
                theirs.sort_by(|x, y| x.partial_cmp(y).unwrap());
                for (x, y) in ours.iter().zip(&theirs) {
                    assert!((x - y).abs() < 1e-12, "n={n}: {ours:?} vs {theirs:?}");
                }
            }
        }
    }

    #[test]
    fn eigenvectors_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_hermitian(&mut rng, 4);
        let (w, v) = a.eigh();
        let rebuilt = &(&v * &CMat::from_diag(&w)) * &v.adjoint();
        assert!(rebuilt.max_abs_diff(&a) < 1e-12);
        let gram = &v.adjoint() * &v;
        assert!(gram.max_abs_diff(&CMat::identity(4)) < 1e-12);
    }

    #[test]
    fn cholesky_inverse_and_logdet() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 4;
        let b = random_hermitian(&mut rng, n);
        let a = &(&b * &b) + &CMat::scaled_identity(n, 0.5);
        let mut l = a.as_slice().to_vec();
        assert!(cholesky_in_place(&mut l, n));
        let ld = chol_logdet(&l, n);
        assert!((ld - a.det_hermitian().ln()).abs() < 1e-12);
        let mut inv = vec![C::zero(); n * n];
        let mut work = vec![C::zero(); n * n];
        chol_inverse(&l, n, &mut inv, &mut work);
        let prod = &a * &CMat::from_row_major(n, inv);
        assert!(prod.max_abs_diff(&CMat::identity(n)) < 1e-12);
        let (inv2, _) = a.inverse_hpd().unwrap();
        assert!((&a * &inv2).max_abs_diff(&CMat::identity(n)) < 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = CMat::<f64>::from_real_rows(&[&[1.0, 2.0], &[2.0, 1.0]]);
        let mut l = a.as_slice().to_vec();
        assert!(!cholesky_in_place(&mut l, 2));
    }

    #[test]
    fn general_det_matches_hermitian_det() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_hermitian(&mut rng, 4);
        let d = a.det();
        assert!((d.re - a.det_hermitian()).abs() < 1e-12 && d.im.abs() < 1e-12);
    }

    #[test]
    fn works_in_single_precision() {
        let a = CMat::<f32>::from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let w = a.eigvalsh();
        assert!((w[0] - 1.0).abs() < 1e-6 && (w[1] - 3.0).abs() < 1e-6);
    }
}
