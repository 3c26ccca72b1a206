//! Scalar and Hermitian-matrix fields over a shared grid.

use std::sync::Arc;

use num_traits::{Float, Zero};

use super::grid::Grid;
use crate::error::{Error, Result};
use crate::linalg::{CMat, C};
use crate::scalar::{to_f64, Real};

/// Checks that two grid handles describe the same grid.
pub fn same_grid<T: Real>(a: &Arc<Grid<T>>, b: &Arc<Grid<T>>) -> Result<()> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(Error::GridMismatch("fields live on different grids".into()))
    }
}

/// Real-valued grid function.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField<T> {
    grid: Arc<Grid<T>>,
    values: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn new(grid: Arc<Grid<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: values.len() });
        }
        Ok(Self { grid, values })
    }

    /// Accepts complex samples whose imaginary parts are at most `tol` in
    /// magnitude and keeps the real parts.
    pub fn from_complex(grid: Arc<Grid<T>>, values: &[C<T>], tol: T) -> Result<Self> {
        let worst = values.iter().fold(T::zero(), |m, z| m.max(Float::abs(z.im)));
        if worst > tol || worst.is_nan() {
            return Err(Error::NonReal(to_f64(worst)));
        }
        Self::new(grid, values.iter().map(|z| z.re).collect())
    }

    pub fn zeros(grid: Arc<Grid<T>>) -> Self {
        let len = grid.len();
        Self { grid, values: vec![T::zero(); len] }
    }

    pub fn constant(grid: Arc<Grid<T>>, c: T) -> Self {
        let len = grid.len();
        Self { grid, values: vec![c; len] }
    }

    /// Samples `f` at the real coordinates of every node.
    pub fn from_fn(grid: Arc<Grid<T>>, mut f: impl FnMut(&[T]) -> T) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.coords(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }
    pub fn values(&self) -> &[T] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<T> {
        self.values
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        same_grid(&self.grid, &other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid.clone(), values })
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: T, other: &Self, b: T) -> Result<Self> {
        self.zip_map(other, |x, y| a * x + b * y)
    }

    pub fn add_constant(&self, c: T) -> Self {
        self.map(|v| v + c)
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|v| v * c)
    }

    pub fn sup(&self) -> T {
        self.values.iter().fold(T::neg_infinity(), |m, &v| m.max(v))
    }

    pub fn inf(&self) -> T {
        self.values.iter().fold(T::infinity(), |m, &v| m.min(v))
    }

    pub fn sup_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &v| m.max(Float::abs(v)))
    }

    /// First node (in storage order) attaining the minimum.
    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v < self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        same_grid(&self.grid, &other.grid)?;
        Ok(self.values.iter().zip(&other.values).fold(T::zero(), |m, (&a, &b)| m.max(Float::abs(a - b))))
    }
}

/// Number of packed entries of an `n x n` Hermitian matrix.
#[inline]
pub fn packed_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Position of `(i, j)`, `i <= j`, in the packed upper triangle.
#[inline]
pub fn packed_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < n);
    i * n - i * (i + 1) / 2 + j
}

/// Hermitian `n x n` matrix per node, stored as the packed upper triangle.
/// Constant fields keep a single copy until a node is written.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianField<T> {
    grid: Arc<Grid<T>>,
    n: usize,
    uniform: bool,
    data: Vec<C<T>>,
}

impl<T: Real> HermitianField<T> {
    pub fn zeros(grid: Arc<Grid<T>>, n: usize) -> Self {
        let len = grid.len() * packed_len(n);
        Self { grid, n, uniform: false, data: vec![C::zero(); len] }
    }

    /// The same matrix at every node; `a` is Hermitised first.
    pub fn constant(grid: Arc<Grid<T>>, a: &CMat<T>) -> Self {
        Self { grid, n: a.n(), uniform: true, data: pack(&a.hermitian_part()) }
    }

    /// Whether the field holds one matrix shared by every node.
    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// The shared matrix of a uniform field.
    pub fn uniform_matrix(&self) -> Option<CMat<T>> {
        self.uniform.then(|| self.at(0))
    }

    /// Switches to per-node storage.
    pub fn expand(&mut self) {
        if self.uniform {
            let one = std::mem::take(&mut self.data);
            self.data = one.iter().copied().cycle().take(one.len() * self.grid.len()).collect();
            self.uniform = false;
        }
    }

    pub fn from_fn(grid: Arc<Grid<T>>, n: usize, mut f: impl FnMut(usize) -> CMat<T>) -> Self {
        let mut out = Self::zeros(grid, n);
        for node in 0..out.grid.len() {
            out.set(node, &f(node));
        }
        out
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }
    /// Matrix size.
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn nodes(&self) -> usize {
        self.grid.len()
    }
    /// Per-node packed storage (expands a uniform field).
    pub fn packed_mut(&mut self) -> &mut [C<T>] {
        self.expand();
        &mut self.data
    }
    #[inline]
    fn offset(&self, node: usize) -> usize {
        if self.uniform {
            0
        } else {
            node * packed_len(self.n)
        }
    }
    pub fn node_packed(&self, node: usize) -> &[C<T>] {
        let o = self.offset(node);
        &self.data[o..o + packed_len(self.n)]
    }
    pub fn node_packed_mut(&mut self, node: usize) -> &mut [C<T>] {
        self.expand();
        let o = self.offset(node);
        &mut self.data[o..o + packed_len(self.n)]
    }

    /// Entry `(i, j)` at `node`, for any ordering of `i` and `j`.
    #[inline]
    pub fn entry(&self, node: usize, i: usize, j: usize) -> C<T> {
        let base = self.offset(node);
        if i <= j {
            self.data[base + packed_index(self.n, i, j)]
        } else {
            self.data[base + packed_index(self.n, j, i)].conj()
        }
    }

    pub fn at(&self, node: usize) -> CMat<T> {
        let mut m = CMat::zeros(self.n);
        self.write_dense(node, m.as_mut_slice());
        m
    }

    /// Unpacks the matrix at `node` into a row-major slice of length `n*n`.
    pub fn write_dense(&self, node: usize, out: &mut [C<T>]) {
        let n = self.n;
        let p = self.node_packed(node);
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                out[i * n + j] = p[k];
                out[j * n + i] = p[k].conj();
                k += 1;
            }
        }
    }

    /// Stores the upper triangle of `a` at `node`.
    pub fn set(&mut self, node: usize, a: &CMat<T>) {
        assert_eq!(a.n(), self.n);
        self.set_dense(node, a.as_slice());
    }

    pub fn set_dense(&mut self, node: usize, a: &[C<T>]) {
        let n = self.n;
        let p = self.node_packed_mut(node);
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                p[k] = if i == j { C::new(a[i * n + i].re, T::zero()) } else { a[i * n + j] };
                k += 1;
            }
        }
    }

    /// Largest imaginary part on the diagonal over all nodes; off-diagonal
    /// Hermitian symmetry holds by construction of the packed storage.
    pub fn hermitian_defect(&self) -> T {
        let n = self.n;
        let mut worst = T::zero();
        for node in 0..self.nodes() {
            for i in 0..n {
                worst = worst.max(Float::abs(self.entry(node, i, i).im));
            }
        }
        worst
    }

    /// Minimum eigenvalue at each node.
    pub fn min_eigenvalues(&self) -> Vec<T> {
        let n = self.n;
        let mut dense = vec![C::zero(); n * n];
        let mut w = vec![T::zero(); n];
        let mut eig = |node: usize| {
            self.write_dense(node, &mut dense);
            crate::linalg::dense::jacobi_eigh(&mut dense, n, &mut w, None);
            w[0]
        };
        if self.uniform {
            vec![eig(0); self.nodes()]
        } else {
            (0..self.nodes()).map(eig).collect()
        }
    }

    /// Trace at each node.
    pub fn trace(&self) -> Vec<T> {
        let n = self.n;
        (0..self.nodes())
            .map(|node| (0..n).fold(T::zero(), |s, i| s + self.entry(node, i, i).re))
            .collect()
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: T, other: &Self, b: T) -> Result<Self> {
        self.check_compatible(other)?;
        if self.uniform && other.uniform {
            let data = self.data.iter().zip(&other.data).map(|(&x, &y)| x * a + y * b).collect();
            return Ok(Self { grid: self.grid.clone(), n: self.n, uniform: true, data });
        }
        let p = packed_len(self.n);
        let mut data = Vec::with_capacity(self.nodes() * p);
        for node in 0..self.nodes() {
            let (x, y) = (self.node_packed(node), other.node_packed(node));
            data.extend(x.iter().zip(y).map(|(&x, &y)| x * a + y * b));
        }
        Ok(Self { grid: self.grid.clone(), n: self.n, uniform: false, data })
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        self.check_compatible(other)?;
        let mut worst = T::zero();
        for node in 0..self.nodes() {
            for (x, y) in self.node_packed(node).iter().zip(other.node_packed(node)) {
                worst = worst.max((*x - *y).norm());
            }
        }
        Ok(worst)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        same_grid(&self.grid, &other.grid)?;
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: other.n });
        }
        Ok(())
    }

    /// Per-node packed storage, taking ownership.
    pub fn into_packed(mut self) -> Vec<C<T>> {
        self.expand();
        self.data
    }

    pub(crate) fn from_packed(grid: Arc<Grid<T>>, n: usize, data: Vec<C<T>>) -> Self {
        debug_assert_eq!(data.len(), grid.len() * packed_len(n));
        Self { grid, n, uniform: false, data }
    }
}

fn pack<T: Real>(a: &CMat<T>) -> Vec<C<T>> {
    let n = a.n();
    let mut out = Vec::with_capacity(packed_len(n));
    for i in 0..n {
        for j in i..n {
            out.push(if i == j { C::new(a[(i, i)].re, T::zero()) } else { a[(i, j)] });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::grid::TorusGrid;

    fn grid() -> Arc<Grid<f64>> {
        Arc::new(Grid::Torus(TorusGrid::new(1, 4, 1.0).unwrap()))
    }

    #[test]
    fn value_count_is_checked() {
        assert!(ScalarField::new(grid(), vec![0.0; 3]).is_err());
        assert!(ScalarField::new(grid(), vec![0.0; 256]).is_ok());
    }

    #[test]
    fn complex_input_must_be_real() {
        let g = grid();
        let mut v = vec![C::new(1.0, 0.0); 256];
        assert!(ScalarField::from_complex(g.clone(), &v, 1e-12).is_ok());
        v[7].im = 1e-3;
        assert!(matches!(ScalarField::from_complex(g, &v, 1e-12), Err(Error::NonReal(_))));
    }

    #[test]
    fn argmin_breaks_ties_by_storage_order() {
        let mut v = vec![1.0; 256];
        v[10] = -1.0;
        v[20] = -1.0;
        assert_eq!(ScalarField::new(grid(), v).unwrap().argmin(), 10);
    }

    #[test]
    fn packed_roundtrip() {
        let n = 4;
        let mut a = CMat::<f64>::zeros(n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = C::new((i + j) as f64, i as f64 - j as f64);
            }
        }
        let f = HermitianField::constant(grid(), &a);
        assert_eq!(f.at(17), a);
        assert_eq!(f.entry(3, 2, 1), a[(2, 1)]);
        for i in 0..n {
            for j in i..n {
                assert_eq!(f.node_packed(0)[packed_index(n, i, j)], a[(i, j)]);
            }
        }
        assert_eq!(f.hermitian_defect(), 0.0);
        assert!(f.is_uniform());
        let mut g = f.clone();
        g.set(5, &CMat::identity(n));
        assert!(!g.is_uniform());
        assert_eq!(g.at(4), a);
        assert_eq!(g.at(5), CMat::identity(n));
        assert!(g.max_abs_diff(&f).unwrap() > 1.0);
    }

    #[test]
    fn mixing_grids_is_rejected() {
        let a = ScalarField::zeros(grid());
        let other = Arc::new(Grid::Torus(TorusGrid::new(1, 4, 2.0).unwrap()));
        let b = ScalarField::zeros(other);
        assert!(matches!(a.axpby(1.0, &b, 1.0), Err(Error::GridMismatch(_))));
    }
}
