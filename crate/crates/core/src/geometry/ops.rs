//! Complex Hessians, the twisted Hessian, the canonical Laplacian and quadrature.

use std::sync::Arc;

use num_traits::Zero;

use super::field::{packed_index, packed_len, same_grid, HermitianField, ScalarField};
use super::grid::{BallGrid, Grid, NodeKind, TorusGrid};
use super::spectral::Spectral;
use super::structure::ComplexStructureJ;
use crate::error::{Error, Result};
use crate::linalg::dense::{chol_inverse, cholesky_in_place};
use crate::linalg::{CMat, C};
use crate::scalar::{lit, Real};

/// Flat model on the torus: the grid, `g = Id` and the standard `J`.
pub fn make_flat_model<T: Real>(
    m: usize,
    res: usize,
    period: T,
) -> Result<(Arc<Grid<T>>, HermitianField<T>, ComplexStructureJ<T>)> {
    let torus = TorusGrid::new(m, res, period)?;
    let n = torus.n();
    let grid = Arc::new(Grid::Torus(torus));
    let g = HermitianField::constant(grid.clone(), &CMat::identity(n));
    Ok((grid, g, ComplexStructureJ::standard(m)))
}

/// Matrix of mixed derivatives `φ_{i j̄} = ∂²φ/∂z_i∂z̄_j` at every node.
///
/// Spectral on torus grids. On ball grids, centered differences at interior
/// nodes; other nodes are left zero (see [`complex_hessian_at`]).
pub fn complex_hessian<T: Real>(phi: &ScalarField<T>) -> Result<HermitianField<T>> {
    match &**phi.grid() {
        Grid::Torus(t) => Ok(complex_hessian_spectral(&Spectral::new(t), phi)),
        Grid::Ball(b) => {
            let n = b.n();
            let mut out = HermitianField::zeros(phi.grid().clone(), n);
            let mut buf = vec![C::zero(); packed_len(n)];
            for node in b.interior_nodes() {
                ball_hessian_packed(b, phi.values(), node, &mut buf);
                out.node_packed_mut(node).copy_from_slice(&buf);
            }
            Ok(out)
        }
    }
}

/// Complex Hessian at a single ball node; fails for non-interior nodes.
pub fn complex_hessian_at<T: Real>(phi: &ScalarField<T>, node: usize) -> Result<CMat<T>> {
    let b = phi
        .grid()
        .as_ball()
        .ok_or_else(|| Error::InvalidArgument("pointwise Hessian is defined on ball grids".into()))?;
    if node >= b.len() || b.kind(node) != NodeKind::Interior {
        return Err(Error::NotInterior(node));
    }
    let n = b.n();
    let mut buf = vec![C::zero(); packed_len(n)];
    ball_hessian_packed(b, phi.values(), node, &mut buf);
    let mut m = CMat::zeros(n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            m[(i, j)] = buf[k];
            m[(j, i)] = buf[k].conj();
            k += 1;
        }
    }
    Ok(m)
}

/// Spectral complex Hessian with a prepared transform.
pub fn complex_hessian_spectral<T: Real>(sp: &Spectral<T>, phi: &ScalarField<T>) -> HermitianField<T> {
    let mut hat: Vec<C<T>> = phi.values().iter().map(|&v| C::new(v, T::zero())).collect();
    sp.forward(&mut hat);
    complex_hessian_from_hat(sp, phi.grid().clone(), &hat)
}

/// Complex Hessian from the forward transform of a real field.
pub fn complex_hessian_from_hat<T: Real>(sp: &Spectral<T>, grid: Arc<Grid<T>>, hat: &[C<T>]) -> HermitianField<T> {
    let n = sp.dim() / 2;
    let p = packed_len(n);
    let mut data = vec![C::zero(); hat.len() * p];
    let mut buf = vec![C::zero(); hat.len()];
    let i_unit = C::new(T::zero(), T::one());
    // diagonal entries are real; two of them share one inverse transform
    let mut i = 0;
    while i < n {
        let j = i + 1;
        sp.for_each_mode(|idx, modes| {
            let mut s = sp.hessian_symbol(modes, i, i);
            if j < n {
                s = s + i_unit * sp.hessian_symbol(modes, j, j);
            }
            buf[idx] = s * hat[idx];
        });
        sp.inverse(&mut buf);
        let (di, dj) = (packed_index(n, i, i), if j < n { packed_index(n, j, j) } else { 0 });
        for (node, z) in buf.iter().enumerate() {
            data[node * p + di] = C::new(z.re, T::zero());
            if j < n {
                data[node * p + dj] = C::new(z.im, T::zero());
            }
        }
        i += 2;
    }
    for i in 0..n {
        for j in i + 1..n {
            sp.for_each_mode(|idx, modes| buf[idx] = sp.hessian_symbol(modes, i, j) * hat[idx]);
            sp.inverse(&mut buf);
            let k = packed_index(n, i, j);
            for (node, z) in buf.iter().enumerate() {
                data[node * p + k] = *z;
            }
        }
    }
    HermitianField::from_packed(grid, n, data)
}

/// Centered-difference complex Hessian at an interior ball node, packed.
pub fn ball_hessian_packed<T: Real>(b: &BallGrid<T>, v: &[T], node: usize, out: &mut [C<T>]) {
    let n = b.n();
    let dim = 2 * n;
    let side = b.side();
    let mut stride = vec![1usize; dim];
    for a in (0..dim - 1).rev() {
        stride[a] = stride[a + 1] * side;
    }
    let h2 = b.spacing() * b.spacing();
    let quarter = lit::<T>(0.25);
    let d2 = |a: usize| (v[node + stride[a]] - v[node] - v[node] + v[node - stride[a]]) / h2;
    let dab = |a: usize, c: usize| {
        let (sa, sc) = (stride[a], stride[c]);
        (v[node + sa + sc] - v[node + sa - sc] - v[node - sa + sc] + v[node - sa - sc]) * quarter / h2
    };
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            out[k] = if i == j {
                C::new(quarter * (d2(2 * i) + d2(2 * i + 1)), T::zero())
            } else {
                let (xi, yi, xj, yj) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
                C::new(dab(xi, xj) + dab(yi, yj), dab(xi, yj) - dab(yi, xj)) * quarter
            };
            k += 1;
        }
    }
}

/// `H = (P + M conj(P) M^*)/2` applied to every node of a Hessian field.
pub fn twist<T: Real>(p: &HermitianField<T>, j: &ComplexStructureJ<T>) -> Result<HermitianField<T>> {
    let n = p.n();
    if j.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: j.n() });
    }
    let mut out = p.clone();
    let mut a = vec![C::zero(); n * n];
    let mut ja = vec![C::zero(); n * n];
    let mut work = vec![C::zero(); n * n];
    let half = lit::<T>(0.5);
    let nodes = if p.is_uniform() { 1 } else { p.nodes() };
    for node in 0..nodes {
        p.write_dense(node, &mut a);
        j.conjugate_action_into(&a, &mut ja, &mut work);
        for (x, y) in a.iter_mut().zip(&ja) {
            *x = (*x + *y) * half;
        }
        if p.is_uniform() {
            out = HermitianField::constant(p.grid().clone(), &CMat::from_row_major(n, a.clone()));
        } else {
            out.set_dense(node, &a);
        }
    }
    Ok(out)
}

/// Twisted Hessian `½(φ_{i j̄} + J_i^{ᾱ} J_{j̄}^{β} φ_{β ᾱ})`.
pub fn twisted_hessian<T: Real>(phi: &ScalarField<T>, j: &ComplexStructureJ<T>) -> Result<HermitianField<T>> {
    if j.n() != phi.grid().n() {
        return Err(Error::DimensionMismatch { expected: phi.grid().n(), got: j.n() });
    }
    twist(&complex_hessian(phi)?, j)
}

/// `tr(g^{-1} A)` at every node.
pub fn trace_against<T: Real>(g: &HermitianField<T>, a: &HermitianField<T>) -> Result<Vec<T>> {
    same_grid(g.grid(), a.grid())?;
    if g.n() != a.n() {
        return Err(Error::DimensionMismatch { expected: g.n(), got: a.n() });
    }
    let n = g.n();
    let mut l = vec![C::zero(); n * n];
    let mut inv = vec![C::zero(); n * n];
    let mut work = vec![C::zero(); n * n];
    let mut prepare = |node: usize, inv: &mut [C<T>]| -> Result<()> {
        g.write_dense(node, &mut l);
        if !cholesky_in_place(&mut l, n) {
            return Err(Error::NotPositiveDefinite { node });
        }
        chol_inverse(&l, n, inv, &mut work);
        Ok(())
    };
    if g.is_uniform() {
        prepare(0, &mut inv)?;
    }
    let mut out = Vec::with_capacity(a.nodes());
    for node in 0..a.nodes() {
        if !g.is_uniform() {
            prepare(node, &mut inv)?;
        }
        let mut s = T::zero();
        for i in 0..n {
            for k in 0..n {
                s = s + (inv[i * n + k] * a.entry(node, k, i)).re;
            }
        }
        out.push(s);
    }
    Ok(out)
}

/// Canonical Laplacian `Δ_{I,g} ψ = g^{i j̄} H(ψ)_{i j̄}`.
pub fn quaternionic_laplacian<T: Real>(
    psi: &ScalarField<T>,
    g: &HermitianField<T>,
    j: &ComplexStructureJ<T>,
) -> Result<ScalarField<T>> {
    let h = twisted_hessian(psi, j)?;
    ScalarField::new(psi.grid().clone(), trace_against(g, &h)?)
}

/// Node quadrature `∫ f w ωⁿ` with `ωⁿ` the Euclidean volume element.
/// Ball grids integrate over interior nodes.
pub fn integrate<T: Real>(f: &ScalarField<T>, weight: Option<&ScalarField<T>>) -> Result<T> {
    let grid = f.grid();
    if let Some(w) = weight {
        same_grid(grid, w.grid())?;
    }
    let mut acc = T::zero();
    let mut comp = T::zero();
    for (i, &v) in f.values().iter().enumerate() {
        let mut term = v * grid.weight(i);
        if let Some(w) = weight {
            term = term * w.values()[i];
        }
        // Kahan summation keeps f32 quadrature usable on large grids
        let y = term - comp;
        let t = acc + y;
        comp = (t - acc) - y;
        acc = t;
    }
    Ok(acc)
}
