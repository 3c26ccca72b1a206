//! Sublevel sets of `ψ_s = ψ - ψ(x₀) + c₀|z - x₀|² - s` on a ball around `x₀`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::field::same_grid;
use crate::geometry::{BallGrid, NodeKind, ScalarField};
use crate::scalar::{from_usize, lit, Real};
use crate::solver::SmoothingSequence;

/// `ψ` and `F` restricted to a ball centred at the minimum point `x₀`.
#[derive(Clone, Debug)]
pub struct BallData<T> {
    pub psi: ScalarField<T>,
    pub f: ScalarField<T>,
    pub c0: T,
}

impl<T: Real> BallData<T> {
    pub fn new(psi: ScalarField<T>, f: ScalarField<T>, c0: T) -> Result<Self> {
        same_grid(psi.grid(), f.grid())?;
        if psi.grid().as_ball().is_none() {
            return Err(Error::InvalidArgument("sublevel data must live on a ball grid".into()));
        }
        if !(c0 > T::zero()) {
            return Err(Error::InvalidArgument("c0 must be positive".into()));
        }
        Ok(Self { psi, f, c0 })
    }

    pub fn ball(&self) -> &BallGrid<T> {
        self.psi.grid().as_ball().expect("checked in new")
    }

    /// `ψ(x₀)`, the value at the centre node.
    pub fn psi_x0(&self) -> T {
        let b = self.ball();
        let centre = b.index_of_offsets(&vec![0; b.dim()]).expect("centre node");
        self.psi.values()[centre]
    }

    /// Top level `4 c₀ r₀² = c₀ R²`.
    pub fn s_max(&self) -> T {
        let r = self.ball().radius();
        self.c0 * r * r
    }

    /// `ψ_s` on the ball grid.
    pub fn psi_s(&self, s: T) -> ScalarField<T> {
        let b = self.ball();
        let p0 = self.psi_x0();
        let vals = (0..b.len()).map(|i| self.psi.values()[i] - p0 + self.c0 * b.dist2(i) - s).collect();
        ScalarField::new(self.psi.grid().clone(), vals).expect("same grid")
    }

    /// `(A(s), Φ(s), nodes of 𝔹_s)`.
    pub fn masses(&self, s: T) -> (T, T, Vec<usize>) {
        let b = self.ball();
        let w = b.cell_volume();
        let p0 = self.psi_x0();
        let (mut a, mut phi) = (T::zero(), T::zero());
        let mut nodes = Vec::new();
        for i in b.interior_nodes() {
            let v = self.psi.values()[i] - p0 + self.c0 * b.dist2(i) - s;
            if v < T::zero() {
                let e = self.f.values()[i].exp();
                a = a + (-v) * e * w;
                phi = phi + e * w;
                nodes.push(i);
            }
        }
        (a, phi, nodes)
    }

    pub fn phi(&self, s: T) -> T {
        self.masses(s).1
    }

    /// `A_k(s) = ∫_𝔹 τ_k(-ψ_s) e^F`.
    pub fn a_k(&self, s: T, k: &SmoothingSequence) -> T {
        let b = self.ball();
        let w = b.cell_volume();
        let p0 = self.psi_x0();
        b.interior_nodes()
            .map(|i| {
                let v = self.psi.values()[i] - p0 + self.c0 * b.dist2(i) - s;
                k.eval(-v) * self.f.values()[i].exp() * w
            })
            .fold(T::zero(), |acc, x| acc + x)
    }

    /// Smallest `ψ_s` over nodes on or outside the sphere; positive when
    /// `ψ(x₀)` is the minimum and `s < s_max`.
    pub fn boundary_min(&self, s: T) -> T {
        let b = self.ball();
        let p0 = self.psi_x0();
        (0..b.len())
            .filter(|&i| b.kind(i) == NodeKind::Boundary)
            .map(|i| self.psi.values()[i] - p0 + self.c0 * b.dist2(i) - s)
            .fold(T::infinity(), |m, v| m.min(v))
    }
}

/// Quadrature data of one level `s`.
#[derive(Clone, Debug, Serialize)]
pub struct SublevelStats<T> {
    pub s: T,
    /// Ball-grid nodes of `𝔹_s`.
    pub nodes: Vec<usize>,
    pub a: T,
    pub phi: T,
    /// `(k, A_k(s))`.
    pub a_k: Vec<(usize, T)>,
}

/// `count` values spaced logarithmically in `(lo, hi)·s_max`.
pub fn default_s_grid<T: Real>(s_max: T, count: usize, lo: T, hi: T) -> Vec<T> {
    if count == 1 {
        return vec![s_max * hi];
    }
    let (l0, l1) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| s_max * (l0 + (l1 - l0) * from_usize::<T>(i) / from_usize::<T>(count - 1)).exp())
        .collect()
}

pub fn sublevel_scan<T: Real>(data: &BallData<T>, s_grid: &[T], ks: &[usize]) -> Result<Vec<SublevelStats<T>>> {
    let s_max = data.s_max();
    let seqs = ks.iter().map(|&k| SmoothingSequence::new(k)).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        if !(s > T::zero() && s < s_max) {
            return Err(Error::InvalidArgument(format!(
                "level s must lie in (0, {:e})",
                crate::scalar::to_f64(s_max)
            )));
        }
        let bmin = data.boundary_min(s);
        if !(bmin > T::zero()) {
            return Err(Error::Inconsistent(format!(
                "psi_s is not positive on the sphere (min {:e}); is x0 the minimum of psi?",
                crate::scalar::to_f64(bmin)
            )));
        }
        let (a, phi, nodes) = data.masses(s);
        let a_k = ks.iter().zip(&seqs).map(|(&k, seq)| (k, data.a_k(s, seq))).collect();
        out.push(SublevelStats { s, nodes, a, phi, a_k });
    }
    Ok(out)
}

/// One sampled instance of `t Φ(s - t) ≤ A(s)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PhiACheck<T> {
    pub s: T,
    pub t: T,
    pub lhs: T,
    pub rhs: T,
}

impl<T: Real> PhiACheck<T> {
    pub fn margin(&self) -> T {
        self.rhs - self.lhs
    }
}

/// Checks `t Φ(s-t) ≤ A(s)` for each `s` in the stats and each `t = s·f`, `f` in `fractions`.
pub fn phi_a_check<T: Real>(data: &BallData<T>, stats: &[SublevelStats<T>], fractions: &[T]) -> Vec<PhiACheck<T>> {
    let mut out = Vec::new();
    for st in stats {
        for &fr in fractions {
            let t = st.s * fr;
            out.push(PhiACheck { s: st.s, t, lhs: t * data.phi(st.s - t), rhs: st.a });
        }
    }
    out
}

/// `(C₄, δ₀)` with `C₄ = max A(s)/Φ(s)^{1+δ₀}` over levels with `Φ > 0`.
pub fn a_phi_fit<T: Real>(stats: &[SublevelStats<T>], p: T, n: usize) -> Result<(T, T)> {
    let nn = from_usize::<T>(n);
    if !(p > nn) {
        return Err(Error::InvalidArgument("A-Phi fit needs p > n".into()));
    }
    let d0 = (p - nn) / (p * nn);
    let mut c4 = T::zero();
    let mut used = 0;
    for st in stats {
        if st.phi > T::zero() {
            c4 = c4.max(st.a / st.phi.powf(T::one() + d0));
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::Inconsistent("every sublevel set is empty".into()));
    }
    Ok((c4, d0))
}

/// Monotonicity of `Φ` and `A` across the (sorted) levels, and nesting of the sets.
pub fn check_monotone<T: Real>(stats: &[SublevelStats<T>]) -> Result<()> {
    let tol = lit::<T>(1e-12);
    for w in stats.windows(2) {
        let (x, y) = (&w[0], &w[1]);
        if x.s > y.s {
            continue;
        }
        if x.phi > y.phi * (T::one() + tol) || x.a > y.a * (T::one() + tol) + tol {
            return Err(Error::Inconsistent("A or Phi decreases in s".into()));
        }
        if !x.nodes.iter().all(|n| y.nodes.binary_search(n).is_ok()) {
            return Err(Error::Inconsistent("sublevel sets are not nested".into()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Grid;
    use std::sync::Arc;

    fn quadratic_data(kappa: f64) -> BallData<f64> {
        let b = BallGrid::new(2, vec![0.0; 4], 6, 0.5 / 6.0).unwrap();
        let grid = Arc::new(Grid::Ball(b.clone()));
        let psi = ScalarField::new(grid.clone(), (0..b.len()).map(|i| kappa * b.dist2(i) - 3.0).collect()).unwrap();
        let f = ScalarField::new(grid.clone(), (0..b.len()).map(|i| 0.3 * b.coords(i)[1]).collect()).unwrap();
        BallData::new(psi, f, 0.45).unwrap()
    }

    #[test]
    fn scan_properties() {
        let d = quadratic_data(0.7);
        assert!((d.s_max() - 0.45 * 0.25).abs() < 1e-15);
        let grid = default_s_grid(d.s_max(), 16, 0.01, 0.99);
        let stats = sublevel_scan(&d, &grid, &[4, 16, 64]).unwrap();
        check_monotone(&stats).unwrap();
        for st in &stats {
            assert!(st.a >= 0.0 && st.phi > 0.0);
            for w in st.a_k.windows(2) {
                assert!(w[0].1 >= w[1].1 && w[1].1 >= st.a);
            }
        }
        for c in phi_a_check(&d, &stats, &[0.5, 0.25]) {
            assert!(c.lhs <= c.rhs + 1e-12);
        }
        // Φ shrinks to the single centre node as s -> 0
        let tiny = d.masses(1e-9).2;
        assert_eq!(tiny.len(), 1);
    }

    #[test]
    fn fit_and_errors() {
        let d = quadratic_data(0.7);
        let stats = sublevel_scan(&d, &default_s_grid(d.s_max(), 8, 0.01, 0.99), &[]).unwrap();
        let (c4, d0) = a_phi_fit(&stats, 4.0, 2).unwrap();
        assert_eq!(d0, 0.25);
        for st in &stats {
            assert!(st.a <= c4 * st.phi.powf(1.25) * (1.0 + 1e-12));
        }
        assert!(a_phi_fit(&stats, 2.0, 2).is_err());
        assert!(sublevel_scan(&d, &[d.s_max()], &[]).is_err());
        // x0 not the minimum: psi_s negative on the sphere
        let bad = BallData::new(d.psi.map(|v| -v), d.f.clone(), 0.45).unwrap();
        assert!(sublevel_scan(&bad, &[0.01], &[]).is_err());
    }

    #[test]
    fn log_grid() {
        let g = default_s_grid(2.0f64, 3, 0.01, 1.0);
        assert!((g[0] - 0.02).abs() < 1e-15 && (g[1] - 0.2).abs() < 1e-14 && (g[2] - 2.0).abs() < 1e-14);
    }
}
