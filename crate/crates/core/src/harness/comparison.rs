//! The auxiliary Dirichlet problem, the comparison inequality and the
//! exponential integrability scans built on it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::field::same_grid;
use crate::geometry::ScalarField;
use crate::scalar::{from_usize, to_f64, Real};
use crate::solver::{solve_dirichlet_ma_ball_with, DirichletOptions, SmoothingSequence};

use super::sublevel::BallData;

/// `ε = A_k^{1/(n+1)} ((n+1)/n)^{n/(n+1)}`.
pub fn comparison_epsilon<T: Real>(a_k: T, n: usize) -> T {
    let (nn, n1) = (from_usize::<T>(n), from_usize::<T>(n + 1));
    a_k.powf(T::one() / n1) * (n1 / nn).powf(nn / n1)
}

/// `C_n = (n+1)/n`, so that `(-ψ_s)^{(n+1)/n} / A_k^{1/n} ≤ C_n (-ψ_{s,k})`
/// follows from the comparison inequality.
pub fn trudinger_constant<T: Real>(n: usize) -> T {
    from_usize::<T>(n + 1) / from_usize::<T>(n)
}

/// Density `τ_k(-ψ_s) e^F / A_k(s)` on the ball, and `A_k(s)`.
pub fn dirichlet_density<T: Real>(data: &BallData<T>, s: T, k: &SmoothingSequence) -> Result<(ScalarField<T>, T)> {
    let a_k = data.a_k(s, k);
    if !(a_k > T::zero()) {
        return Err(Error::Inconsistent("A_k(s) must be positive".into()));
    }
    let psi_s = data.psi_s(s);
    let dens = psi_s.zip_map(&data.f, |v, f| k.eval(-v) * f.exp() / a_k)?;
    Ok((dens, a_k))
}

/// `min over interior nodes of ε(-ψ_{s,k})^{n/(n+1)} - (-ψ_s)` and the node
/// where it is attained.
pub fn comparison_margin<T: Real>(psi_s: &ScalarField<T>, psi_sk: &ScalarField<T>, a_k: T, n: usize) -> Result<(T, usize)> {
    same_grid(psi_s.grid(), psi_sk.grid())?;
    if a_k < T::zero() {
        return Err(Error::InvalidArgument("A_k must be non-negative".into()));
    }
    let b = psi_s
        .grid()
        .as_ball()
        .ok_or_else(|| Error::InvalidArgument("comparison needs ball fields".into()))?;
    let eps = comparison_epsilon(a_k, n);
    let expo = from_usize::<T>(n) / from_usize::<T>(n + 1);
    let mut best = (T::infinity(), 0);
    for i in b.interior_nodes() {
        let u = (-psi_sk.values()[i]).max(T::zero());
        let m = eps * u.powf(expo) + psi_s.values()[i];
        if m < best.0 {
            best = (m, i);
        }
    }
    Ok(best)
}

/// [`comparison_margin`] without the node.
pub fn comparison_check<T: Real>(psi_s: &ScalarField<T>, psi_sk: &ScalarField<T>, a_k: T, n: usize) -> Result<T> {
    Ok(comparison_margin(psi_s, psi_sk, a_k, n)?.0)
}

/// One `(s, k)` run of the comparison pipeline.
#[derive(Clone, Debug, Serialize)]
pub struct ComparisonRun {
    pub s: f64,
    pub k: usize,
    pub a_k: f64,
    pub eps: f64,
    pub margin: f64,
    pub worst_node: usize,
    pub newton_iterations: usize,
    pub residual: f64,
}

/// Builds the density, solves the Dirichlet problem and evaluates the margin.
pub fn run_comparison<T: Real>(
    data: &BallData<T>,
    s: T,
    k: usize,
    opts: &DirichletOptions<T>,
) -> Result<(ComparisonRun, ScalarField<T>)> {
    let seq = SmoothingSequence::new(k)?;
    let (dens, a_k) = dirichlet_density(data, s, &seq)?;
    let rep = solve_dirichlet_ma_ball_with(&dens, opts)?;
    let n = data.ball().n();
    let (margin, node) = comparison_margin(&data.psi_s(s), &rep.solution, a_k, n)?;
    let run = ComparisonRun {
        s: to_f64(s),
        k,
        a_k: to_f64(a_k),
        eps: to_f64(comparison_epsilon(a_k, n)),
        margin: to_f64(margin),
        worst_node: node,
        newton_iterations: rep.iterations,
        residual: to_f64(*rep.residual_history.last().unwrap_or(&T::nan())),
    };
    Ok((run, rep.solution))
}

/// Table of `∫_𝔹 exp(-α u)` and the largest sampled `α` whose integral stays
/// below `cap`.
#[derive(Clone, Debug, Serialize)]
pub struct ExpScan {
    pub table: Vec<(f64, f64)>,
    pub best: Option<f64>,
}

fn scan_from(table: Vec<(f64, f64)>, cap: f64) -> ExpScan {
    let mut best = None;
    for &(x, v) in &table {
        if v <= cap {
            best = Some(best.map_or(x, |b: f64| b.max(x)));
        }
    }
    ExpScan { table, best }
}

pub fn alpha_scan<T: Real>(psi_sk: &ScalarField<T>, alphas: &[T], cap: T) -> Result<ExpScan> {
    let b = psi_sk
        .grid()
        .as_ball()
        .ok_or_else(|| Error::InvalidArgument("alpha scan needs a ball field".into()))?;
    let w = b.cell_volume();
    let nodes: Vec<usize> = b.interior_nodes().collect();
    if nodes.iter().any(|&i| psi_sk.values()[i] > T::zero()) {
        return Err(Error::InvalidArgument("alpha scan needs a non-positive function".into()));
    }
    let table = alphas
        .iter()
        .map(|&al| {
            let v = nodes.iter().fold(T::zero(), |acc, &i| acc + (-al * psi_sk.values()[i]).exp() * w);
            (to_f64(al), to_f64(v))
        })
        .collect();
    Ok(scan_from(table, to_f64(cap)))
}

/// Largest `x ≥ 0` with `Σ w exp(x u_i) ≤ cap`, for `u_i ≥ 0`, by bisection.
/// `None` when already `x = 0` exceeds the cap, `inf` when the sum never does.
pub fn exp_threshold(u: &[f64], w: f64, cap: f64) -> Option<f64> {
    let total = |x: f64| u.iter().map(|&v| (x * v).exp() * w).sum::<f64>();
    if total(0.0) > cap {
        return None;
    }
    let top = u.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return Some(f64::INFINITY);
    }
    let (mut lo, mut hi) = (0.0, 1.0 / top);
    while total(hi) <= cap {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if total(mid) <= cap {
            lo = mid
        } else {
            hi = mid
        }
    }
    Some(lo)
}

/// Empirical α: the largest `α` with `∫_𝔹 exp(-α ψ_{s,k}) ≤ cap`.
pub fn alpha_threshold<T: Real>(psi_sk: &ScalarField<T>, cap: f64) -> Result<Option<f64>> {
    let b = psi_sk
        .grid()
        .as_ball()
        .ok_or_else(|| Error::InvalidArgument("alpha scan needs a ball field".into()))?;
    let u: Vec<f64> = b.interior_nodes().map(|i| (-to_f64(psi_sk.values()[i])).max(0.0)).collect();
    Ok(exp_threshold(&u, to_f64(b.cell_volume()), cap))
}

/// Empirical β: the largest `β` with `∫_{𝔹_s} exp(β U_s) ≤ cap`, `U_s`
/// normalised by `a`.
pub fn beta_threshold<T: Real>(psi_s: &ScalarField<T>, a: T, n: usize, cap: f64) -> Result<Option<f64>> {
    let b = psi_s
        .grid()
        .as_ball()
        .ok_or_else(|| Error::InvalidArgument("Trudinger scan needs a ball field".into()))?;
    let uf = trudinger_field(psi_s, a, n)?;
    let u: Vec<f64> = b
        .interior_nodes()
        .filter(|&i| psi_s.values()[i] < T::zero())
        .map(|i| to_f64(uf.values()[i]))
        .collect();
    Ok(exp_threshold(&u, to_f64(b.cell_volume()), cap))
}

/// `U_s = (-ψ_s)_+^{(n+1)/n} / A^{1/n}`.
pub fn trudinger_field<T: Real>(psi_s: &ScalarField<T>, a: T, n: usize) -> Result<ScalarField<T>> {
    let nonempty = psi_s.values().iter().any(|&v| v < T::zero());
    if nonempty && !(a > T::zero()) {
        return Err(Error::Inconsistent("A(s) = 0 with a non-empty sublevel set".into()));
    }
    let (nn, n1) = (from_usize::<T>(n), from_usize::<T>(n + 1));
    let scale = if a > T::zero() { a.powf(-T::one() / nn) } else { T::zero() };
    Ok(psi_s.map(|v| (-v).max(T::zero()).powf(n1 / nn) * scale))
}

/// `∫_{𝔹_s} exp(β U_s)` per `β`, with `U_s` normalised by `a`.
pub fn trudinger_check<T: Real>(psi_s: &ScalarField<T>, a: T, n: usize, betas: &[T], cap: T) -> Result<(ExpScan, ScalarField<T>)> {
    let b = psi_s
        .grid()
        .as_ball()
        .ok_or_else(|| Error::InvalidArgument("Trudinger scan needs a ball field".into()))?;
    let u = trudinger_field(psi_s, a, n)?;
    let w = b.cell_volume();
    let nodes: Vec<usize> = b.interior_nodes().filter(|&i| psi_s.values()[i] < T::zero()).collect();
    let table = betas
        .iter()
        .map(|&be| {
            let v = nodes.iter().fold(T::zero(), |acc, &i| acc + (be * u.values()[i]).exp() * w);
            (to_f64(be), to_f64(v))
        })
        .collect();
    Ok((scan_from(table, to_f64(cap)), u))
}

/// For each `β`: `(β, ∫_{𝔹_s} exp(β U_s), ∫_𝔹 exp(β C_n (-ψ_{s,k})))` with
/// `U_s` normalised by `A_k`. The first integral is bounded by the second
/// wherever the comparison inequality holds.
pub fn trudinger_alpha_chain<T: Real>(
    psi_s: &ScalarField<T>,
    psi_sk: &ScalarField<T>,
    a_k: T,
    n: usize,
    betas: &[T],
) -> Result<Vec<(f64, f64, f64)>> {
    same_grid(psi_s.grid(), psi_sk.grid())?;
    let cn = trudinger_constant::<T>(n);
    let (lhs, _) = trudinger_check(psi_s, a_k, n, betas, T::infinity())?;
    let alphas: Vec<T> = betas.iter().map(|&b| b * cn).collect();
    let rhs = alpha_scan(&psi_sk.map(|v| v.min(T::zero())), &alphas, T::infinity())?;
    Ok(lhs.table.iter().zip(&rhs.table).map(|(l, r)| (l.0, l.1, r.1)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BallGrid, Grid};
    use std::sync::Arc;

    #[test]
    fn threshold_matches_closed_form() {
        // w (e^{x} + e^{2x}) = cap at e^x = 2 for w = 1, cap = 6
        let x = exp_threshold(&[1.0, 2.0], 1.0, 6.0).unwrap();
        assert!((x - 2f64.ln()).abs() < 1e-12);
        assert!(exp_threshold(&[1.0, 2.0], 1.0, 1.0).is_none());
        assert_eq!(exp_threshold(&[0.0, 0.0], 1.0, 3.0), Some(f64::INFINITY));
    }

    #[test]
    fn epsilon_value() {
        assert!((comparison_epsilon(1.0f64, 2) - 1.5f64.powf(2.0 / 3.0)).abs() < 1e-15);
        assert!((comparison_epsilon(1.0f64, 2) - 1.310_370_697).abs() < 1e-9);
        assert_eq!(trudinger_constant::<f64>(2), 1.5);
    }

    fn ball() -> Arc<Grid<f64>> {
        Arc::new(Grid::Ball(BallGrid::new(2, vec![0.0; 4], 4, 0.125).unwrap()))
    }

    #[test]
    fn empty_sublevel_is_trivial() {
        let g = ball();
        let psi_s = ScalarField::constant(g.clone(), 0.1);
        let psi_sk = ScalarField::zeros(g);
        assert!(comparison_check(&psi_s, &psi_sk, 1.0, 2).unwrap() >= 0.0);
    }

    #[test]
    fn exp_scans() {
        let g = ball();
        let b = g.as_ball().unwrap().clone();
        let vol = b.interior_nodes().count() as f64 * b.cell_volume();
        let zero = ScalarField::zeros(g.clone());
        let s = alpha_scan(&zero, &[0.0, 1.0, 5.0], 1e9).unwrap();
        for (_, v) in &s.table {
            assert!((v - vol).abs() < 1e-14);
        }
        let u = ScalarField::new(g.clone(), (0..b.len()).map(|i| b.dist2(i) - 0.25).collect()).unwrap();
        let s = alpha_scan(&u, &[0.0, 1.0, 2.0, 4.0], vol * 1.3).unwrap();
        assert!(s.table.windows(2).all(|w| w[1].1 > w[0].1));
        assert!(s.best.is_some());
        assert!(alpha_scan(&u.map(|v| -v), &[1.0], 1.0).is_err());
        let (t, field) = trudinger_check(&u, 0.5, 2, &[0.0, 1.0], 1e9).unwrap();
        let inside = b.interior_nodes().filter(|&i| u.values()[i] < 0.0).count() as f64 * b.cell_volume();
        assert!((t.table[0].1 - inside).abs() < 1e-14);
        assert!(field.inf() >= 0.0);
        assert!(trudinger_check(&u, 0.0, 2, &[1.0], 1.0).is_err());
    }
}
