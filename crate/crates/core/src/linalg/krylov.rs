//! Restarted GMRES with right preconditioning.

use crate::scalar::Real;
use num_traits::Float;

#[derive(Clone, Debug)]
pub struct GmresOptions<T> {
    /// Relative tolerance on `||b - A x|| / ||b||`.
    pub rtol: T,
    /// Absolute floor on the residual norm.
    pub atol: T,
    pub restart: usize,
    pub max_iter: usize,
}

#[derive(Clone, Debug)]
pub struct GmresOutcome<T> {
    pub iterations: usize,
    pub residual: T,
    pub converged: bool,
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Solves `A x = b` where `apply(v, out)` computes `out = A v` and
/// `precond(v, out)` computes `out = M^{-1} v` (right preconditioning).
/// `x` holds the initial guess on entry.
pub fn gmres<T, A, P>(
    mut apply: A,
    mut precond: P,
    b: &[T],
    x: &mut [T],
    opts: &GmresOptions<T>,
) -> GmresOutcome<T>
where
    T: Real,
    A: FnMut(&[T], &mut [T]),
    P: FnMut(&[T], &mut [T]),
{
    let len = b.len();
    let m = opts.restart.max(1);
    let bnorm = norm(b);
    let target = (opts.rtol * bnorm).max(opts.atol);
    let mut r = vec![T::zero(); len];
    let mut w = vec![T::zero(); len];
    let mut z = vec![T::zero(); len];
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(m + 1);
    let mut h = vec![T::zero(); (m + 1) * m];
    let mut cs = vec![T::zero(); m];
    let mut sn = vec![T::zero(); m];
    let mut g = vec![T::zero(); m + 1];
    let mut total = 0usize;

    let residual = |x: &[T], r: &mut [T], apply: &mut A| {
        apply(x, r);
        for (ri, &bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
    };

    residual(x, &mut r, &mut apply);
    let mut rnorm = norm(&r);
    if rnorm <= target || bnorm == T::zero() && rnorm == T::zero() {
        return GmresOutcome { iterations: 0, residual: rnorm, converged: true };
    }

    while total < opts.max_iter {
        basis.clear();
        basis.push(r.iter().map(|&v| v / rnorm).collect());
        for v in g.iter_mut() {
            *v = T::zero();
        }
        g[0] = rnorm;
        let mut k_used = 0;
        for k in 0..m {
            precond(&basis[k], &mut z);
            apply(&z, &mut w);
            total += 1;
            // modified Gram-Schmidt
            for (i, q) in basis.iter().enumerate() {
                let hik = dot(&w, q);
                h[i * m + k] = hik;
                for (wj, &qj) in w.iter_mut().zip(q.iter()) {
                    *wj = *wj - hik * qj;
                }
            }
            let wnorm = norm(&w);
            h[(k + 1) * m + k] = wnorm;
            for i in 0..k {
                let a = h[i * m + k];
                let bb = h[(i + 1) * m + k];
                h[i * m + k] = cs[i] * a + sn[i] * bb;
                h[(i + 1) * m + k] = -sn[i] * a + cs[i] * bb;
            }
            let a = h[k * m + k];
            let bb = h[(k + 1) * m + k];
            let den = a.hypot(bb);
            if den == T::zero() {
                cs[k] = T::one();
                sn[k] = T::zero();
            } else {
                cs[k] = a / den;
                sn[k] = bb / den;
            }
            h[k * m + k] = den;
            h[(k + 1) * m + k] = T::zero();
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k] * g[k];
            k_used = k + 1;
            let est = Float::abs(g[k + 1]);
            if est <= target || wnorm == T::zero() || total >= opts.max_iter {
                break;
            }
            basis.push(w.iter().map(|&v| v / wnorm).collect());
        }
        // back substitution
        let mut y = vec![T::zero(); k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s = s - h[i * m + j] * y[j];
            }
            y[i] = s / h[i * m + i];
        }
        for v in w.iter_mut() {
            *v = T::zero();
        }
        for (j, &yj) in y.iter().enumerate() {
            for (wi, &qi) in w.iter_mut().zip(basis[j].iter()) {
                *wi = *wi + yj * qi;
            }
        }
        precond(&w, &mut z);
        for (xi, &zi) in x.iter_mut().zip(&z) {
            *xi = *xi + zi;
        }
        residual(x, &mut r, &mut apply);
        rnorm = norm(&r);
        if rnorm <= target {
            return GmresOutcome { iterations: total, residual: rnorm, converged: true };
        }
    }
    GmresOutcome { iterations: total, residual: rnorm, converged: false }
}

/// Identity preconditioner.
pub fn no_precond<T: Copy>(v: &[T], out: &mut [T]) {
    out.copy_from_slice(v);
}
