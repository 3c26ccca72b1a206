//! Compressed sparse row matrices and an ILU(0) preconditioner.

use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct Csr<T> {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<T>,
}

impl<T: Real> Csr<T> {
    /// Builds from per-row `(col, value)` lists; duplicate columns are summed
    /// and columns are sorted within each row.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, T)>>) -> Self {
        let nrows = rows.len();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                debug_assert!(c < ncols);
                if last == Some(c) {
                    let l = values.len() - 1;
                    values[l] = values[l] + v;
                } else {
                    indices.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            indptr.push(indices.len());
        }
        Self { nrows, ncols, indptr, indices, values }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            y[i] = cols.iter().zip(vals).fold(T::zero(), |s, (&c, &v)| s + v * x[c]);
        }
    }

    /// `sum_k diag(scales[k]) * mats[k]`, all matrices sharing this one's
    /// sparsity pattern (the union pattern).
    pub fn combine_rows(pattern: &Csr<T>, mats: &[&Csr<T>], scales: &[&[T]]) -> Csr<T> {
        let mut out = pattern.clone();
        for v in out.values.iter_mut() {
            *v = T::zero();
        }
        for (m, s) in mats.iter().zip(scales) {
            for i in 0..m.nrows {
                let (cols, vals) = m.row(i);
                let (pc, _) = pattern.row(i);
                let base = pattern.indptr[i];
                let mut p = 0;
                for (&c, &v) in cols.iter().zip(vals) {
                    while pc[p] != c {
                        p += 1;
                    }
                    out.values[base + p] = out.values[base + p] + s[i] * v;
                }
            }
        }
        out
    }

    /// Union sparsity pattern (zero values) of several matrices of equal shape.
    pub fn union_pattern(mats: &[&Csr<T>]) -> Csr<T> {
        let nrows = mats[0].nrows;
        let rows = (0..nrows)
            .map(|i| {
                let mut cols: Vec<usize> = mats.iter().flat_map(|m| m.row(i).0.iter().copied()).collect();
                cols.sort_unstable();
                cols.dedup();
                cols.into_iter().map(|c| (c, T::zero())).collect()
            })
            .collect();
        Csr::from_rows(mats[0].ncols, rows)
    }
}

/// Incomplete LU factorisation with zero fill-in.
#[derive(Clone, Debug)]
pub struct Ilu0<T> {
    lu: Csr<T>,
    diag: Vec<usize>,
}

impl<T: Real> Ilu0<T> {
    pub fn new(a: &Csr<T>) -> Option<Self> {
        let mut lu = a.clone();
        let n = lu.nrows;
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for p in lu.indptr[i]..lu.indptr[i + 1] {
                if lu.indices[p] == i {
                    diag[i] = p;
                }
            }
            if diag[i] == usize::MAX {
                return None;
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (a0, a1) = (lu.indptr[i], lu.indptr[i + 1]);
            for p in a0..a1 {
                pos[lu.indices[p]] = p;
            }
            for p in a0..a1 {
                let k = lu.indices[p];
                if k >= i {
                    break;
                }
                let pivot = lu.values[diag[k]];
                if pivot == T::zero() {
                    return None;
                }
                let f = lu.values[p] / pivot;
                lu.values[p] = f;
                for q in diag[k] + 1..lu.indptr[k + 1] {
                    let j = lu.indices[q];
                    let target = pos[j];
                    if target != usize::MAX && target >= a0 && target < a1 {
                        lu.values[target] = lu.values[target] - f * lu.values[q];
                    }
                }
            }
            for p in a0..a1 {
                pos[lu.indices[p]] = usize::MAX;
            }
            if lu.values[diag[i]] == T::zero() {
                return None;
            }
        }
        Some(Self { lu, diag })
    }

    /// `out = (LU)^{-1} v`.
    pub fn solve(&self, v: &[T], out: &mut [T]) {
        let n = self.lu.nrows;
        for i in 0..n {
            let mut s = v[i];
            for p in self.lu.indptr[i]..self.diag[i] {
                s = s - self.lu.values[p] * out[self.lu.indices[p]];
            }
            out[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = out[i];
            for p in self.diag[i] + 1..self.lu.indptr[i + 1] {
                s = s - self.lu.values[p] * out[self.lu.indices[p]];
            }
            out[i] = s / self.lu.values[self.diag[i]];
        }
    }
}
