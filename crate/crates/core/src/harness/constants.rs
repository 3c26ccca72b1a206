//! Geometric constants and the scalar inequalities used by the bound.

use num_traits::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{HermitianField, ScalarField};
use crate::linalg::dense::jacobi_eigh;
use crate::linalg::C;
use crate::scalar::{from_usize, lit, Real};

/// Safety factor applied to the largest admissible `c₀`.
pub const C0_SAFETY: f64 = 0.9;

/// `(C₀, c₀)` with `C₀ = max(λ_max(h), 1/λ_min(h))` and `c₀` the largest value
/// keeping `h - (c₀ C₀/(n-1)) tr(h) Id` non-negative, times [`C0_SAFETY`].
/// `nodes` restricts the search; `None` uses every node.
pub fn choose_constants<T: Real>(h: &HermitianField<T>, nodes: Option<&[usize]>) -> Result<(T, T)> {
    let n = h.n();
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    let all: Vec<usize>;
    let nodes = match nodes {
        Some(s) => s,
        None => {
            all = if h.is_uniform() { vec![0] } else { (0..h.nodes()).collect() };
            &all
        }
    };
    if nodes.is_empty() {
        return Err(Error::InvalidArgument("no nodes to inspect".into()));
    }
    let mut a = vec![C::new(T::zero(), T::zero()); n * n];
    let mut w = vec![T::zero(); n];
    let mut big_c = T::zero();
    let mut ratios = Vec::with_capacity(nodes.len());
    for &node in nodes {
        h.write_dense(node, &mut a);
        jacobi_eigh(&mut a, n, &mut w, None);
        let (lo, hi) = (w[0], w[n - 1]);
        if !(lo > T::zero()) || !hi.is_finite() {
            return Err(Error::NotPositiveDefinite { node });
        }
        let tr = w.iter().fold(T::zero(), |s, &x| s + x);
        big_c = big_c.max(hi).max(T::one() / lo);
        ratios.push(lo / tr);
    }
    let worst = ratios.into_iter().fold(T::infinity(), |m, r| m.min(r));
    let c0 = lit::<T>(C0_SAFETY) * worst * from_usize::<T>(n - 1) / big_c;
    Ok((big_c, c0))
}

/// `sup_{v ≥ 0, F} e^{F-v} ((v/2)^p - (1+|F|)^p)`, the smallest `C_p` making
/// `v^p e^F / 2^p ≤ e^F (1+|F|)^p + C_p e^v` hold, rounded up by `1e-12`
/// relative.
pub fn young_constant(p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::InvalidArgument("p must be positive".into()));
    }
    let best = maximise(|v| young_inner(p, v), 0.0, 40.0 * p.max(1.0) + 200.0, 40_000);
    Ok(best.max(0.0) * (1.0 + 1e-12))
}

/// Best `F ≥ 0` for fixed `v`, returned as the value of `e^{F-v}((v/2)^p - (1+F)^p)`.
fn young_inner(p: f64, v: f64) -> f64 {
    let a = (0.5 * v).powf(p);
    // the F-derivative is e^F (a - u^p - p u^{p-1}) with u = 1+F; it has one sign change
    let g = |u: f64| a - u.powf(p) - p * u.powf(p - 1.0);
    let u = if g(1.0) <= 0.0 {
        1.0
    } else {
        let (mut lo, mut hi) = (1.0, a.powf(1.0 / p).max(1.0));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        0.5 * (lo + hi)
    };
    ((u - 1.0) - v).exp() * (a - u.powf(p))
}

/// `sup_{x ≥ 0} p x^{1/p} - x`, the smallest `C'_p` with `p x^{1/p} ≤ x + C'_p`,
/// rounded up by `1e-12` relative.
pub fn power_constant(p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument("p must be at least 1".into()));
    }
    let best = maximise(|x| p * x.powf(1.0 / p) - x, 0.0, 50.0 * p, 40_000);
    Ok(best.max(0.0) * (1.0 + 1e-12) + 1e-300)
}

/// Dense scan followed by golden-section refinement around the best sample.
fn maximise(f: impl Fn(f64) -> f64, lo: f64, hi: f64, samples: usize) -> f64 {
    let h = (hi - lo) / samples as f64;
    let mut best_i = 0;
    let mut best = f(lo);
    for i in 1..=samples {
        let v = f(lo + h * i as f64);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let (mut a, mut b) = ((lo + h * (best_i as f64 - 1.0)).max(lo), (lo + h * (best_i as f64 + 1.0)).min(hi));
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut c, mut d) = (b - r * (b - a), a + r * (b - a));
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    best.max(fc).max(fd)
}

/// Nodewise `min (e^F (1+|F|)^p + C_p e^v - v^p e^F / 2^p)`.
pub fn young_check<T: Real>(v: &ScalarField<T>, f: &ScalarField<T>, p: T, c_p: T) -> Result<T> {
    if v.len() != f.len() {
        return Err(Error::GridMismatch("v and F differ in length".into()));
    }
    let mut worst = T::infinity();
    for (&vi, &fi) in v.values().iter().zip(f.values()) {
        if vi < T::zero() {
            return Err(Error::InvalidArgument("young_check needs v >= 0".into()));
        }
        worst = worst.min(young_margin(vi, fi, p, c_p));
    }
    Ok(worst)
}

pub fn young_margin<T: Real>(v: T, f: T, p: T, c_p: T) -> T {
    let ef = f.exp();
    ef * (T::one() + Float::abs(f)).powf(p) + c_p * v.exp() - v.powf(p) * ef / lit::<T>(2.0).powf(p)
}

/// Minimum Young margin over a `steps × steps` grid of `(v, F) ∈ [0, vmax] × [fmin, fmax]`.
pub fn young_scan(p: f64, c_p: f64, vmax: f64, fmin: f64, fmax: f64, steps: usize) -> f64 {
    let mut worst = f64::INFINITY;
    for i in 0..=steps {
        let v = vmax * i as f64 / steps as f64;
        for j in 0..=steps {
            let f = fmin + (fmax - fmin) * j as f64 / steps as f64;
            worst = worst.min(young_margin(v, f, p, c_p));
        }
    }
    worst
}

/// Minimum of `x + C'_p - p x^{1/p}` over `steps + 1` points of `[0, xmax]`.
pub fn power_scan(p: f64, c_pp: f64, xmax: f64, steps: usize) -> f64 {
    (0..=steps)
        .map(|i| {
            let x = xmax * i as f64 / steps as f64;
            x + c_pp - p * x.powf(1.0 / p)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Every constant of one bound computation.
#[derive(Clone, Debug, Default, Serialize, PartialEq)]
pub struct ConstantLedger {
    pub c0: f64,
    pub r0: f64,
    pub big_c0: f64,
    pub p: f64,
    pub delta0: f64,
    pub c4: f64,
    pub c1: f64,
    /// Empirical α and β; `None` when no comparison runs were made.
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub c_p: f64,
    pub c_p_prime: f64,
    pub c6: f64,
    /// Torus node where `ψ` is smallest.
    pub x0: usize,
}

impl ConstantLedger {
    /// Structural checks: `δ₀ > 0`, `c₀ > 0` and every measured constant
    /// finite and non-negative.
    pub fn validate(&self) -> Result<()> {
        if !(self.delta0 > 0.0) {
            return Err(Error::InvalidArgument(format!("p = {} does not exceed n", self.p)));
        }
        if !(self.c0 > 0.0) {
            return Err(Error::InvalidArgument("c0 must be positive".into()));
        }
        for (name, v) in [
            ("C4", self.c4),
            ("c1", self.c1),
            ("alpha", self.alpha.unwrap_or(0.0)),
            ("beta", self.beta.unwrap_or(0.0)),
            ("C_p", self.c_p),
            ("C'_p", self.c_p_prime),
            ("C6", self.c6),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Inconsistent(format!("{name} = {v} is not a finite non-negative number")));
            }
        }
        Ok(())
    }
}

/// `δ₀ = (p - n)/(p n)`.
pub fn delta0(p: f64, n: usize) -> f64 {
    (p - n as f64) / (p * n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_flat_model;
    use crate::linalg::CMat;

    #[test]
    fn identity_metric() {
        let (_, g, _) = make_flat_model::<f64>(1, 4, 1.0).unwrap();
        let (big, c0) = choose_constants(&g, None).unwrap();
        assert_eq!(big, 1.0);
        assert!((c0 - 0.45).abs() < 1e-15);
    }

    #[test]
    fn scaled_metric() {
        let (grid, _, _) = make_flat_model::<f64>(1, 4, 1.0).unwrap();
        let h = HermitianField::constant(grid.clone(), &CMat::scaled_identity(2, 2.0));
        let (big, c0) = choose_constants(&h, None).unwrap();
        assert_eq!(big, 2.0);
        // λ_min (n-1) / (C₀ tr h) = 2 / (2 * 4)
        assert!((c0 - 0.9 * 0.25).abs() < 1e-15);
        let h4 = HermitianField::constant(grid, &CMat::from_diag(&[1.0, 3.0]));
        let (big, c0) = choose_constants(&h4, None).unwrap();
        let m = &h4.at(0) - &CMat::scaled_identity(2, c0 * big * 4.0);
        assert!(m.eigvalsh()[0] >= 0.0);
    }

    #[test]
    fn degenerate_metric() {
        let (grid, _, _) = make_flat_model::<f64>(1, 4, 1.0).unwrap();
        let h = HermitianField::constant(grid, &CMat::from_diag(&[1.0, 0.0]));
        assert!(choose_constants(&h, None).is_err());
    }

    #[test]
    fn power_constant_closed_form() {
        for p in [2.0, 3.0, 4.0, 6.0] {
            assert!((power_constant(p).unwrap() - (p - 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn young_constant_is_tight() {
        for p in [3.0, 4.0, 6.0] {
            let cp = young_constant(p).unwrap();
            assert!(cp > 0.0);
            assert!(young_scan(p, cp, 50.0, 0.0, 50.0, 400) >= 0.0);
            // smaller constants fail somewhere
            assert!(young_scan(p, cp * 0.99, 60.0, 0.0, 20.0, 2000) < 0.0);
        }
    }

    #[test]
    fn delta0_values() {
        assert_eq!(delta0(4.0, 2), 0.25);
        assert!((delta0(8.0, 4) - 1.0 / 8.0).abs() < 1e-15);
    }
}
