//! Fourier differentiation on torus grids.

use std::sync::Arc;

use num_traits::Zero;
use rustfft::{Fft, FftPlanner};

use super::grid::TorusGrid;
use crate::linalg::C;
use crate::scalar::{from_usize, lit, Real};

/// Forward/inverse multidimensional FFT plus the wavenumber tables of one
/// torus grid.
pub struct Spectral<T: Real> {
    res: usize,
    dim: usize,
    len: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    /// First-derivative wavenumbers (Nyquist mode zeroed).
    k1: Vec<T>,
    /// Squared second-derivative wavenumbers (Nyquist mode kept).
    k2: Vec<T>,
}

impl<T: Real> Spectral<T> {
    pub fn new(grid: &TorusGrid<T>) -> Self {
        let res = grid.res();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(res);
        let inverse = planner.plan_fft_inverse(res);
        let base = T::TAU() / grid.period();
        let mut k1 = vec![T::zero(); res];
        let mut k2 = vec![T::zero(); res];
        for (i, (a, b)) in k1.iter_mut().zip(k2.iter_mut()).enumerate() {
            let signed = if i < res / 2 { i as f64 } else { i as f64 - res as f64 };
            let k = base * lit::<T>(signed);
            *b = k * k;
            if 2 * i != res {
                *a = k;
            }
        }
        Self { res, dim: grid.dim(), len: grid.len(), forward, inverse, k1, k2 }
    }

    pub fn len(&self) -> usize {
        self.len
    }
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn res(&self) -> usize {
        self.res
    }

    /// First-derivative wavenumber along an axis at a 1-D mode index.
    #[inline]
    pub fn k1(&self, mode: usize) -> T {
        self.k1[mode]
    }
    #[inline]
    pub fn k2(&self, mode: usize) -> T {
        self.k2[mode]
    }

    /// Unnormalised forward transform in place.
    pub fn forward(&self, data: &mut [C<T>]) {
        self.transform(data, &self.forward);
    }

    /// Inverse transform in place, including the `1/len` normalisation.
    pub fn inverse(&self, data: &mut [C<T>]) {
        self.transform(data, &self.inverse);
        let s = T::one() / from_usize::<T>(self.len);
        for z in data.iter_mut() {
            *z = *z * s;
        }
    }

    fn transform(&self, data: &mut [C<T>], fft: &Arc<dyn Fft<T>>) {
        assert_eq!(data.len(), self.len);
        let res = self.res;
        let mut scratch = vec![C::zero(); fft.get_inplace_scratch_len()];
        // last axis is contiguous
        fft.process_with_scratch(data, &mut scratch);
        let mut stride = res;
        let mut buf = Vec::new();
        for _axis in 1..self.dim {
            let block = stride * res;
            buf.resize(block, C::zero());
            for chunk in data.chunks_mut(block) {
                // gather the `stride` lines of this block into rows of `buf`
                for (line, row) in buf.chunks_mut(res).enumerate() {
                    for (i, z) in row.iter_mut().enumerate() {
                        *z = chunk[i * stride + line];
                    }
                }
                fft.process_with_scratch(&mut buf, &mut scratch);
                for (line, row) in buf.chunks(res).enumerate() {
                    for (i, z) in row.iter().enumerate() {
                        chunk[i * stride + line] = *z;
                    }
                }
            }
            stride = block;
        }
    }

    /// Calls `f(flat_index, modes)` for every Fourier mode, with `modes` the
    /// per-axis mode indices.
    pub fn for_each_mode(&self, mut f: impl FnMut(usize, &[usize])) {
        let mut modes = vec![0usize; self.dim];
        for idx in 0..self.len {
            f(idx, &modes);
            for a in (0..self.dim).rev() {
                modes[a] += 1;
                if modes[a] < self.res {
                    break;
                }
                modes[a] = 0;
            }
        }
    }

    /// Symbol `a_i = (i kx_i + ky_i)/2` of `∂/∂z_i` at a mode.
    #[inline]
    pub fn dz_symbol(&self, modes: &[usize], i: usize) -> C<T> {
        let half = lit::<T>(0.5);
        C::new(self.k1[modes[2 * i + 1]] * half, self.k1[modes[2 * i]] * half)
    }

    /// Symbol of `∂²/∂z_i∂z̄_j`.
    #[inline]
    pub fn hessian_symbol(&self, modes: &[usize], i: usize, j: usize) -> C<T> {
        if i == j {
            let q = lit::<T>(-0.25) * (self.k2[modes[2 * i]] + self.k2[modes[2 * i + 1]]);
            C::new(q, T::zero())
        } else {
            -(self.dz_symbol(modes, i) * self.dz_symbol(modes, j).conj())
        }
    }

    /// `-|k|^2` at a mode, the symbol of the ordinary Laplacian in real coordinates.
    #[inline]
    pub fn laplacian_symbol(&self, modes: &[usize]) -> T {
        -modes.iter().fold(T::zero(), |s, &m| s + self.k2[m])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_identity() {
        let g = TorusGrid::<f64>::new(1, 6, 1.3).unwrap();
        let sp = Spectral::new(&g);
        let orig: Vec<C<f64>> = (0..g.len()).map(|i| C::new((i as f64 * 0.37).sin(), (i as f64).cos())).collect();
        let mut d = orig.clone();
        sp.forward(&mut d);
        sp.inverse(&mut d);
        for (a, b) in d.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn single_mode_lands_on_its_index() {
        let g = TorusGrid::<f64>::new(1, 4, 1.0).unwrap();
        let sp = Spectral::new(&g);
        // exp(2 pi i (x_1 + 2 y_2)) on the unit torus: modes (1, 0, 0, 2)
        let mut d: Vec<C<f64>> = (0..g.len())
            .map(|i| {
                let x = g.coords(i);
                let ph = std::f64::consts::TAU * (x[0] + 2.0 * x[3]);
                C::new(ph.cos(), ph.sin())
            })
            .collect();
        sp.forward(&mut d);
        let hit = g.flat_index(&[1, 0, 0, 2]);
        for (i, z) in d.iter().enumerate() {
            if i == hit {
                assert!((z.re - 256.0).abs() < 1e-10);
            } else {
                assert!(z.norm() < 1e-10);
            }
        }
    }
}
