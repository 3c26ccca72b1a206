//! Pointwise tensors built from metrics and potentials: `g̃`, `ĝ`, `Θ̃`, `Θ̂`,
//! the determinant identities they satisfy, the operators `L` and `𝓛`, and cone
//! membership.
//!
//! Upper-index tensors `T^{i j̄}` are stored as the matrix with entries
//! `T[i][j] = T^{i j̄}`; for a metric `G` this makes `g^{i j̄} = conj(G^{-1})`.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::geometry::field::{packed_len, same_grid};
use crate::geometry::{trace_against, twisted_hessian, ComplexStructureJ};
use crate::geometry::{complex_hessian, HermitianField, ScalarField};
use crate::linalg::dense::jacobi_eigh;
use crate::linalg::{CMat, C};
use crate::scalar::{from_usize, lit, to_f64, Real};

/// Result of a cone test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConeMembership<T> {
    pub member: bool,
    /// Minimum eigenvalue of the defining matrix over all nodes.
    pub margin: T,
    /// Node attaining the margin.
    pub node: usize,
}

/// Which potential space to test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConeKind {
    /// `ω + H(φ) > 0`.
    PshJ,
    /// `ĝ(ψ) > 0`.
    PshJN1,
}

/// `G^{-1}` and the eigenvalues of a Hermitian positive definite matrix via
/// its eigen-decomposition; `None` if some eigenvalue is not positive.
pub fn inverse_eig<T: Real>(a: &CMat<T>) -> Option<(CMat<T>, Vec<T>)> {
    a.inverse_hpd()
}

/// `½(conj(A) + M^* A M)` for a Hermitian `A = G^{-1}`: the J-symmetrised
/// upper-index tensor `½(g^{i j̄} + g^{βᾱ} J_β^{j̄} J_ᾱ^{i})`.
pub fn j_symmetrise<T: Real>(inv: &CMat<T>, j: &ComplexStructureJ<T>) -> CMat<T> {
    let m = j.matrix();
    let twisted = &(&m.adjoint() * inv) * m;
    (&inv.conj() + &twisted).scale(lit(0.5))
}

/// Whether `conj(A) = M^* A M` to `tol`, the q-real (J-invariance) property
/// of a lower-index Hermitian matrix.
pub fn q_real_defect<T: Real>(a: &CMat<T>, j: &ComplexStructureJ<T>) -> T {
    let m = j.matrix();
    (&(&m.adjoint() * a) * m).max_abs_diff(&a.conj())
}

/// `Θ̃` of one matrix.
pub fn theta_tilde_matrix<T: Real>(gt: &CMat<T>, j: &ComplexStructureJ<T>) -> Option<CMat<T>> {
    let (inv, _) = inverse_eig(gt)?;
    Some(j_symmetrise(&inv, j))
}

/// `Θ̂` of one matrix pair: `(1/(n-1))[tr(Ĝ^{-1} g) conj(g^{-1}) - ½(Û + M^* Û^T M)]`.
pub fn theta_hat_matrix<T: Real>(gh: &CMat<T>, g: &CMat<T>, j: &ComplexStructureJ<T>) -> Option<CMat<T>> {
    let n = gh.n();
    if n < 2 {
        return None;
    }
    let (inv_h, _) = inverse_eig(gh)?;
    let (inv_g, _) = inverse_eig(g)?;
    let tr = (&inv_h * g).trace().re;
    let sym = j_symmetrise(&inv_h, j);
    Some((&inv_g.conj().scale(tr) - &sym).scale(T::one() / from_usize::<T>(n - 1)))
}

/// Diagonal of `Θ̂` in a frame where `g = Id` and `ĝ = diag(μ)` with the
/// J-symmetrisation acting trivially: `Θ̂_ii = (1/(n-1)) sum_{k != i} 1/μ_k`.
pub fn theta_hat_diagonal<T: Real>(mu: &[T]) -> Result<Vec<T>> {
    let n = mu.len();
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    if let Some(k) = mu.iter().position(|&m| !(m > T::zero())) {
        return Err(Error::NotPositiveDefinite { node: k });
    }
    let total = mu.iter().fold(T::zero(), |s, &m| s + T::one() / m);
    let scale = T::one() / from_usize::<T>(n - 1);
    Ok(mu.iter().map(|&m| (total - T::one() / m) * scale).collect())
}

/// Gap `prod Θ̂_ii - prod 1/μ_i` of the eigenframe formula.
pub fn lemma22_gap_diagonal<T: Real>(mu: &[T]) -> Result<T> {
    let th = theta_hat_diagonal(mu)?;
    let lhs = th.iter().fold(T::one(), |p, &x| p * x);
    let rhs = mu.iter().fold(T::one(), |p, &m| p / m);
    Ok(lhs - rhs)
}

fn check_n<T: Real>(a: &HermitianField<T>, j: &ComplexStructureJ<T>) -> Result<()> {
    if a.n() != j.n() {
        return Err(Error::DimensionMismatch { expected: a.n(), got: j.n() });
    }
    Ok(())
}

/// Applies `f` at every node (once for uniform inputs).
fn map_nodes<T: Real>(
    a: &HermitianField<T>,
    mut f: impl FnMut(usize, &CMat<T>) -> Result<CMat<T>>,
) -> Result<HermitianField<T>> {
    if a.is_uniform() {
        return Ok(HermitianField::constant(a.grid().clone(), &f(0, &a.at(0))?));
    }
    let mut out = HermitianField::zeros(a.grid().clone(), a.n());
    let mut m = CMat::zeros(a.n());
    for node in 0..a.nodes() {
        a.write_dense(node, m.as_mut_slice());
        out.set(node, &f(node, &m)?);
    }
    Ok(out)
}

/// `g̃ = g + H(φ)`.
pub fn g_tilde<T: Real>(
    g: &HermitianField<T>,
    phi: &ScalarField<T>,
    j: &ComplexStructureJ<T>,
) -> Result<HermitianField<T>> {
    check_n(g, j)?;
    g.axpby(T::one(), &twisted_hessian(phi, j)?, T::one())
}

/// `ĝ = h + (1/(n-1))[(Δ_{I,g} ψ) g - H(ψ)]`.
pub fn g_hat<T: Real>(
    h: &HermitianField<T>,
    g: &HermitianField<T>,
    psi: &ScalarField<T>,
    j: &ComplexStructureJ<T>,
) -> Result<HermitianField<T>> {
    let n = g.n();
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    check_n(g, j)?;
    check_n(h, j)?;
    g_hat_from_hessian(h, g, &twisted_hessian(psi, j)?)
}

/// [`g_hat`] from a precomputed twisted Hessian `H(ψ)`.
pub fn g_hat_from_hessian<T: Real>(
    h: &HermitianField<T>,
    g: &HermitianField<T>,
    hess: &HermitianField<T>,
) -> Result<HermitianField<T>> {
    let n = g.n();
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    for other in [h, hess] {
        if other.n() != n {
            return Err(Error::DimensionMismatch { expected: n, got: other.n() });
        }
    }
    same_grid(h.grid(), g.grid())?;
    same_grid(hess.grid(), g.grid())?;
    let lap = trace_against(g, hess)?;
    let inv = T::one() / from_usize::<T>(n - 1);
    let mut out = HermitianField::zeros(g.grid().clone(), n);
    let p = packed_len(n);
    let mut buf = vec![C::zero(); p];
    for node in 0..g.nodes() {
        let (hn, gn, hs) = (h.node_packed(node), g.node_packed(node), hess.node_packed(node));
        for k in 0..p {
            buf[k] = hn[k] + (gn[k] * lap[node] - hs[k]) * inv;
        }
        out.node_packed_mut(node).copy_from_slice(&buf);
    }
    Ok(out)
}

/// `Θ̃^{i j̄} = ½(g̃^{i j̄} + g̃^{βᾱ} J_β^{j̄} J_ᾱ^{i})`.
pub fn theta_tilde<T: Real>(gt: &HermitianField<T>, j: &ComplexStructureJ<T>) -> Result<HermitianField<T>> {
    check_n(gt, j)?;
    map_nodes(gt, |node, m| theta_tilde_matrix(m, j).ok_or(Error::NotPositiveDefinite { node }))
}

/// `Θ̂^{i j̄} = (1/(n-1)){tr_ω̂ ω g^{i j̄} - ½(ĝ^{i j̄} + ĝ^{βᾱ} J_β^{j̄} J_ᾱ^{i})}`.
pub fn theta_hat<T: Real>(
    gh: &HermitianField<T>,
    g: &HermitianField<T>,
    j: &ComplexStructureJ<T>,
) -> Result<HermitianField<T>> {
    if gh.n() < 2 {
        return Err(Error::DimensionTooSmall(gh.n()));
    }
    check_n(gh, j)?;
    same_grid(gh.grid(), g.grid())?;
    if gh.is_uniform() && g.is_uniform() {
        let t = theta_hat_matrix(&gh.at(0), &g.at(0), j).ok_or(Error::NotPositiveDefinite { node: 0 })?;
        return Ok(HermitianField::constant(gh.grid().clone(), &t));
    }
    let mut out = HermitianField::zeros(gh.grid().clone(), gh.n());
    for node in 0..gh.nodes() {
        let t = theta_hat_matrix(&gh.at(node), &g.at(node), j).ok_or(Error::NotPositiveDefinite { node })?;
        out.set(node, &t);
    }
    Ok(out)
}

fn log_det_field<T: Real>(a: &HermitianField<T>) -> Result<Vec<T>> {
    let n = a.n();
    let mut m = vec![C::zero(); n * n];
    let mut w = vec![T::zero(); n];
    let mut one = |node: usize| -> Result<T> {
        a.write_dense(node, &mut m);
        jacobi_eigh(&mut m, n, &mut w, None);
        if !(w[0] > T::zero()) {
            return Err(Error::NotPositiveDefinite { node });
        }
        Ok(w.iter().fold(T::zero(), |s, &x| s + x.ln()))
    };
    if a.is_uniform() {
        Ok(vec![one(0)?; a.nodes()])
    } else {
        (0..a.nodes()).map(one).collect()
    }
}

/// `log det A - log det B` at every node.
pub fn log_det_ratio<T: Real>(a: &HermitianField<T>, b: &HermitianField<T>) -> Result<ScalarField<T>> {
    same_grid(a.grid(), b.grid())?;
    let la = log_det_field(a)?;
    let lb = log_det_field(b)?;
    ScalarField::new(a.grid().clone(), la.iter().zip(&lb).map(|(&x, &y)| x - y).collect())
}

/// Residual of `det(Θ̃) = e^{-F} det(g^{i j̄})`, normalised as
/// `det(Θ̃) e^F det(g) - 1`. Without `F` the consistent value
/// `log det g̃ - log det g` is used, making this `det(Θ̃) det(g̃) - 1`.
pub fn lemma21_residual<T: Real>(
    gt: &HermitianField<T>,
    g: &HermitianField<T>,
    j: &ComplexStructureJ<T>,
    f: Option<&ScalarField<T>>,
) -> Result<ScalarField<T>> {
    let th = theta_tilde(gt, j)?;
    let ldt = log_det_field(&th)?;
    let lg = log_det_field(g)?;
    let f_vals = match f {
        Some(f) => {
            same_grid(f.grid(), gt.grid())?;
            f.values().to_vec()
        }
        None => log_det_ratio(gt, g)?.into_values(),
    };
    let vals = (0..gt.nodes()).map(|i| (ldt[i] + f_vals[i] + lg[i]).exp() - T::one()).collect();
    ScalarField::new(gt.grid().clone(), vals)
}

/// `det(Θ̂) - e^{-F} det(g^{-1})` at every node; `F` defaults to
/// `log det ĝ - log det g`.
pub fn lemma22_gap<T: Real>(
    gh: &HermitianField<T>,
    g: &HermitianField<T>,
    j: &ComplexStructureJ<T>,
    f: Option<&ScalarField<T>>,
) -> Result<ScalarField<T>> {
    let th = theta_hat(gh, g, j)?;
    let ldt = log_det_field(&th)?;
    let lg = log_det_field(g)?;
    let f_vals = match f {
        Some(f) => {
            same_grid(f.grid(), gh.grid())?;
            f.values().to_vec()
        }
        None => log_det_ratio(gh, g)?.into_values(),
    };
    let vals = (0..gh.nodes()).map(|i| ldt[i].exp() - (-f_vals[i] - lg[i]).exp()).collect();
    ScalarField::new(gh.grid().clone(), vals)
}

/// `Σ Θ^{i j̄} A_{i j̄}` for packed Hermitian `Θ` and `A`.
#[inline]
pub fn contract_packed<T: Real>(theta: &[C<T>], a: &[C<T>], n: usize) -> T {
    let two = lit::<T>(2.0);
    let mut s = T::zero();
    let mut k = 0;
    for i in 0..n {
        s = s + theta[k].re * a[k].re;
        k += 1;
        for _ in i + 1..n {
            s = s + two * (theta[k] * a[k]).re;
            k += 1;
        }
    }
    s
}

/// `Θ^{i j̄} v_{i j̄}` at every node.
pub fn operator_l<T: Real>(v: &ScalarField<T>, theta: &HermitianField<T>) -> Result<ScalarField<T>> {
    same_grid(v.grid(), theta.grid())?;
    let p = complex_hessian(v)?;
    if p.n() != theta.n() {
        return Err(Error::DimensionMismatch { expected: p.n(), got: theta.n() });
    }
    let n = p.n();
    let vals = (0..p.nodes()).map(|node| contract_packed(theta.node_packed(node), p.node_packed(node), n)).collect();
    ScalarField::new(v.grid().clone(), vals)
}

/// `n - tr_A B` at every node, the right-hand side of both operator identities.
pub fn n_minus_trace<T: Real>(a: &HermitianField<T>, b: &HermitianField<T>) -> Result<ScalarField<T>> {
    let tr = trace_against(a, b)?;
    let n = from_usize::<T>(a.n());
    ScalarField::new(a.grid().clone(), tr.into_iter().map(|t| n - t).collect())
}

fn min_eig_over<T: Real>(a: &HermitianField<T>) -> ConeMembership<T> {
    let eig = a.min_eigenvalues();
    let mut node = 0;
    for (i, &e) in eig.iter().enumerate() {
        if e < eig[node] || e.is_nan() {
            node = i;
        }
    }
    let margin = eig[node];
    ConeMembership { member: margin > T::zero(), margin, node }
}

/// Cone test. On ball grids only interior nodes are inspected.
pub fn cone_check<T: Real>(
    kind: ConeKind,
    potential: &ScalarField<T>,
    g: &HermitianField<T>,
    h: Option<&HermitianField<T>>,
    j: &ComplexStructureJ<T>,
) -> Result<ConeMembership<T>> {
    let mat = match kind {
        ConeKind::PshJ => g_tilde(g, potential, j)?,
        ConeKind::PshJN1 => g_hat(h.ok_or(Error::Missing("h is required for the (n-1)-form cone"))?, g, potential, j)?,
    };
    Ok(restrict_to_interior(&mat, potential))
}

fn restrict_to_interior<T: Real>(mat: &HermitianField<T>, potential: &ScalarField<T>) -> ConeMembership<T> {
    match potential.grid().as_ball() {
        None => min_eig_over(mat),
        Some(b) => {
            let eig = mat.min_eigenvalues();
            let mut best: Option<(usize, T)> = None;
            for node in b.interior_nodes() {
                if best.map_or(true, |(_, m)| eig[node] < m) {
                    best = Some((node, eig[node]));
                }
            }
            let (node, margin) = best.unwrap_or((0, T::infinity()));
            ConeMembership { member: margin > T::zero(), margin, node }
        }
    }
}

/// `min (tr_ω ω_h + Δ_ω ψ)` with `Δ_ω ψ = g^{i j̄} ψ_{i j̄}` the ordinary
/// complex Laplacian.
pub fn laplace_positivity_check<T: Real>(
    psi: &ScalarField<T>,
    g: &HermitianField<T>,
    h: &HermitianField<T>,
    j: &ComplexStructureJ<T>,
) -> Result<T> {
    check_n(g, j)?;
    let tr_h = trace_against(g, h)?;
    let lap = trace_against(g, &complex_hessian(psi)?)?;
    let vals: Vec<T> = tr_h.iter().zip(&lap).map(|(&a, &b)| a + b).collect();
    let nodes: Vec<usize> = match psi.grid().as_ball() {
        Some(b) => b.interior_nodes().collect(),
        None => (0..vals.len()).collect(),
    };
    Ok(nodes.into_iter().fold(T::infinity(), |m, i| m.min(vals[i])))
}

/// Reports a cone violation as an error.
pub fn require_member<T: Real>(c: &ConeMembership<T>) -> Result<()> {
    if c.member {
        Ok(())
    } else {
        Err(Error::ConeViolation { node: c.node, margin: to_f64(c.margin) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_flat_model, Grid, TorusGrid};
    use std::f64::consts::TAU;
    use std::sync::Arc;

    #[test]
    fn theta_tilde_examples() {
        let j = ComplexStructureJ::<f64>::standard(1);
        let t = theta_tilde_matrix(&CMat::scaled_identity(2, 3.0), &j).unwrap();
        assert!(t.max_abs_diff(&CMat::scaled_identity(2, 1.0 / 3.0)) < 1e-15);
        let j2 = ComplexStructureJ::<f64>::with_phase(2, 0.4);
        let t = theta_tilde_matrix(&CMat::identity(4), &j2).unwrap();
        assert!(t.max_abs_diff(&CMat::identity(4)) < 1e-15);
    }

    #[test]
    fn theta_tilde_of_paired_eigenvalues() {
        // q-real at n = 4 with eigenvalue pairs (2, 2, 3, 3) in a rotated frame
        let j = ComplexStructureJ::<f64>::standard(2);
        let mut g = CMat::from_diag(&[2.0, 2.0, 3.0, 3.0]);
        // unitary commuting with the J-action: a quaternionic rotation mixing the blocks
        let c = 0.6f64;
        let s = 0.8f64;
        let mut u = CMat::<f64>::zeros(4);
        u[(0, 0)] = C::new(c, 0.0);
        u[(0, 2)] = C::new(s, 0.0);
        u[(2, 0)] = C::new(-s, 0.0);
        u[(2, 2)] = C::new(c, 0.0);
        u[(1, 1)] = C::new(c, 0.0);
        u[(1, 3)] = C::new(s, 0.0);
        u[(3, 1)] = C::new(-s, 0.0);
        u[(3, 3)] = C::new(c, 0.0);
        g = &(&u * &g) * &u.adjoint();
        assert!(q_real_defect(&g, &j) < 1e-14);
        let t = theta_tilde_matrix(&g, &j).unwrap();
        assert!((t.det().re - 1.0 / 36.0).abs() < 1e-14);
    }

    #[test]
    fn theta_hat_examples() {
        let j = ComplexStructureJ::<f64>::standard(1);
        let t = theta_hat_matrix(&CMat::identity(2), &CMat::identity(2), &j).unwrap();
        assert!(t.max_abs_diff(&CMat::identity(2)) < 1e-15);
        let d = theta_hat_diagonal::<f64>(&[2.0, 5.0]).unwrap();
        assert!((d[0] - 0.2).abs() < 1e-15 && (d[1] - 0.5).abs() < 1e-15);
        let d = theta_hat_diagonal::<f64>(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        for (x, num) in d.iter().zip([13.0, 19.0, 21.0, 22.0]) {
            assert!((x - num / 36.0).abs() < 1e-15);
        }
        let gap = lemma22_gap_diagonal::<f64>(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((gap - (114114.0 / 1679616.0 - 1.0 / 24.0)).abs() < 1e-15);
        assert!((gap - 0.0263).abs() < 1e-4);
        assert!(lemma22_gap_diagonal::<f64>(&[0.7, 3.1]).unwrap().abs() < 1e-15);
        assert!(matches!(theta_hat_diagonal(&[1.0]), Err(Error::DimensionTooSmall(1))));
    }

    #[test]
    fn lemma21_negative_control() {
        let j = ComplexStructureJ::<f64>::standard(1);
        let g = CMat::from_diag(&[1.0, 4.0]);
        let t = theta_tilde_matrix(&g, &j).unwrap();
        let r = t.det().re * g.det().re - 1.0;
        assert!((r - 0.5625).abs() < 1e-14);
    }

    #[test]
    fn field_level_examples() {
        let (grid, g, j) = make_flat_model::<f64>(1, 8, 1.0).unwrap();
        let zero = ScalarField::zeros(grid.clone());
        assert_eq!(g_tilde(&g, &zero, &j).unwrap().max_abs_diff(&g).unwrap(), 0.0);
        assert_eq!(g_hat(&g, &g, &zero, &j).unwrap().max_abs_diff(&g).unwrap(), 0.0);
        let c = cone_check(ConeKind::PshJ, &zero, &g, None, &j).unwrap();
        assert!(c.member && (c.margin - 1.0).abs() < 1e-15);
        let c = cone_check(ConeKind::PshJN1, &zero, &g, Some(&g), &j).unwrap();
        assert!(c.member && (c.margin - 1.0).abs() < 1e-15);
        assert!(matches!(cone_check(ConeKind::PshJN1, &zero, &g, None, &j), Err(Error::Missing(_))));
        assert!((laplace_positivity_check(&zero, &g, &g, &j).unwrap() - 2.0).abs() < 1e-15);
        let big = ScalarField::from_fn(grid.clone(), |x| -1.0 * (TAU * x[0]).cos());
        let c = cone_check(ConeKind::PshJ, &big, &g, None, &j).unwrap();
        assert!(!c.member && c.margin < 0.0);
        assert!(require_member(&c).is_err());
    }

    #[test]
    fn operator_identities_on_torus() {
        let (grid, g, j) = make_flat_model::<f64>(1, 8, 1.0).unwrap();
        let phi = ScalarField::from_fn(grid.clone(), |x| {
            0.01 * ((TAU * x[0]).cos() + (TAU * (x[1] - x[3])).sin() + 0.5 * (TAU * (x[0] + x[2])).cos())
        });
        let gt = g_tilde(&g, &phi, &j).unwrap();
        let th = theta_tilde(&gt, &j).unwrap();
        let lhs = operator_l(&phi, &th).unwrap();
        let rhs = n_minus_trace(&gt, &g).unwrap();
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
        let r = lemma21_residual(&gt, &g, &j, None).unwrap();
        assert!(r.sup_abs() < 1e-12);

        let gh = g_hat(&g, &g, &phi, &j).unwrap();
        let th = theta_hat(&gh, &g, &j).unwrap();
        let lhs = operator_l(&phi, &th).unwrap();
        let rhs = n_minus_trace(&gh, &g).unwrap();
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
        let gap = lemma22_gap(&gh, &g, &j, None).unwrap();
        assert!(gap.sup_abs() < 1e-12);

        let v = ScalarField::constant(grid, 2.5);
        assert!(operator_l(&v, &th).unwrap().sup_abs() < 1e-12);
    }

    #[test]
    fn g_hat_trace_identity() {
        let grid = Arc::new(Grid::Torus(TorusGrid::new(2, 4, 1.0).unwrap()));
        let j = ComplexStructureJ::standard(2);
        let g = HermitianField::constant(grid.clone(), &CMat::identity(4));
        let h = HermitianField::constant(grid.clone(), &CMat::from_diag(&[1.0, 1.0, 2.0, 2.0]));
        let psi = ScalarField::from_fn(grid.clone(), |x| 0.02 * (TAU * (x[0] - x[6])).cos() + 0.01 * (TAU * x[5]).sin());
        let gh = g_hat(&h, &g, &psi, &j).unwrap();
        let diff = gh.axpby(1.0, &h, -1.0).unwrap();
        let lhs = trace_against(&g, &diff).unwrap();
        let rhs = trace_against(&g, &twisted_hessian(&psi, &j).unwrap()).unwrap();
        for (a, b) in lhs.iter().zip(&rhs) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn theta_tilde_is_homogeneous_of_degree_minus_one() {
        let j = ComplexStructureJ::<f64>::standard(2);
        let mut a = CMat::from_diag(&[1.0, 2.0, 3.0, 5.0]);
        a[(0, 1)] = C::new(0.3, 0.1);
        a[(1, 0)] = C::new(0.3, -0.1);
        let t1 = theta_tilde_matrix(&a, &j).unwrap();
        let t2 = theta_tilde_matrix(&a.scale(4.0), &j).unwrap();
        assert!(t2.scale(4.0).max_abs_diff(&t1) < 1e-15);
    }
}
