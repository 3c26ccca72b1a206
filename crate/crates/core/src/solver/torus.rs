//! Newton-Krylov solvers for the two torus equations
//!
//! ```text
//! log det g̃(φ) - log det g = F + b        (complex Monge-Ampère)
//! log det ĝ(ψ) - log det g = F + b        ((n-1)-form Monge-Ampère)
//! ```
//!
//! with the constant `b` as an extra unknown. Each Newton step solves
//! `Θ^{i j̄} δφ_{i j̄} - δb = -R` with GMRES, right-preconditioned by the
//! constant-coefficient operator built from the mean of `Θ`, inverted by FFT.

use std::sync::Arc;

use num_traits::{Float, Zero};

use crate::error::{Error, Result};
use crate::geometry::field::{packed_index, packed_len, same_grid};
use crate::geometry::ops::complex_hessian_from_hat;
use crate::geometry::{ComplexStructureJ, Grid, HermitianField, ScalarField, Spectral, TorusGrid};
use crate::linalg::dense::{chol_inverse, chol_logdet, cholesky_in_place, jacobi_eigh};
use crate::linalg::{gmres, CMat, GmresOptions, C};
use crate::scalar::{from_usize, lit, to_f64, Real};

/// Which torus equation to solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Equation {
    Cma,
    N1ma,
}

impl Equation {
    pub fn name(self) -> &'static str {
        match self {
            Equation::Cma => "cma",
            Equation::N1ma => "n1ma",
        }
    }
}

/// Solver output.
#[derive(Clone, Debug)]
pub struct SolveReport<T> {
    /// Solution normalised to `sup = 0`.
    pub potential: ScalarField<T>,
    pub b: T,
    /// Sup-norm residual before each Newton step and after the last one.
    pub residual_history: Vec<T>,
    /// Minimum eigenvalue of `g̃` (or `ĝ`) over all nodes.
    pub cone_margin: T,
    /// Newton steps over all continuation stages.
    pub iterations: usize,
    pub continuation_steps: usize,
    pub linear_iterations: usize,
}

impl<T: Real> SolveReport<T> {
    pub fn final_residual(&self) -> T {
        *self.residual_history.last().unwrap_or(&T::infinity())
    }
}

#[derive(Clone, Debug)]
pub struct TorusSolveOptions<T> {
    /// Sup-norm tolerance on the equation residual.
    pub tol: T,
    /// Newton steps per continuation stage.
    pub max_newton: usize,
    /// Step halvings allowed in a Newton line search.
    pub max_halvings: usize,
    /// Smallest continuation increment before giving up.
    pub min_continuation_step: T,
    pub gmres_restart: usize,
    pub gmres_max_iter: usize,
    pub initial_guess: Option<ScalarField<T>>,
}

impl<T: Real> Default for TorusSolveOptions<T> {
    fn default() -> Self {
        Self {
            tol: lit(1e-8),
            max_newton: 40,
            max_halvings: 30,
            min_continuation_step: lit(1.0 / 1024.0),
            gmres_restart: 40,
            gmres_max_iter: 400,
            initial_guess: None,
        }
    }
}

/// `solve_cma_torus_with` with default options and tolerance `tol`.
pub fn solve_cma_torus<T: Real>(
    f: &ScalarField<T>,
    g: &HermitianField<T>,
    j: &ComplexStructureJ<T>,
    tol: T,
) -> Result<SolveReport<T>> {
    let opts = TorusSolveOptions { tol, ..Default::default() };
    solve_torus(Equation::Cma, f, g, None, j, &opts)
}

/// `solve_torus` for the (n-1)-form equation with default options.
pub fn solve_n1ma_torus<T: Real>(
    f: &ScalarField<T>,
    g: &HermitianField<T>,
    h: &HermitianField<T>,
    j: &ComplexStructureJ<T>,
    tol: T,
) -> Result<SolveReport<T>> {
    let opts = TorusSolveOptions { tol, ..Default::default() };
    solve_torus(Equation::N1ma, f, g, Some(h), j, &opts)
}

/// Metric-side data shared by every node.
struct Problem<'a, T: Real> {
    eq: Equation,
    grid: Arc<Grid<T>>,
    sp: Spectral<T>,
    n: usize,
    g: CMat<T>,
    g_inv_conj: CMat<T>,
    log_det_g: T,
    h: Option<&'a HermitianField<T>>,
    m: CMat<T>,
    m_adj: CMat<T>,
    f: &'a [T],
}

/// Per-node state at the current iterate.
struct Eval<T> {
    /// `log det` of the equation matrix minus `log det g`.
    log_det: Vec<T>,
    /// Packed `Θ` per node.
    theta: Vec<C<T>>,
}

impl<'a, T: Real> Problem<'a, T> {
    fn new(
        eq: Equation,
        f: &'a ScalarField<T>,
        g: &HermitianField<T>,
        h: Option<&'a HermitianField<T>>,
        j: &ComplexStructureJ<T>,
    ) -> Result<Self> {
        let grid = f.grid().clone();
        let torus: &TorusGrid<T> =
            grid.as_torus().ok_or_else(|| Error::InvalidArgument("torus solvers need a torus grid".into()))?;
        same_grid(&grid, g.grid())?;
        let n = torus.n();
        if g.n() != n || j.n() != n {
            return Err(Error::DimensionMismatch { expected: n, got: if g.n() != n { g.n() } else { j.n() } });
        }
        j.validate()?;
        let gm = g.uniform_matrix().ok_or_else(|| Error::InvalidArgument("torus solvers need a constant metric g".into()))?;
        let (g_inv, w) = gm.inverse_hpd().ok_or(Error::NotPositiveDefinite { node: 0 })?;
        let log_det_g = w.iter().fold(T::zero(), |s, &x| s + x.ln());
        if eq == Equation::N1ma {
            let h = h.ok_or(Error::Missing("h is required for the (n-1)-form equation"))?;
            same_grid(&grid, h.grid())?;
            if h.n() != n {
                return Err(Error::DimensionMismatch { expected: n, got: h.n() });
            }
        }
        if f.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("F has non-finite values".into()));
        }
        let sp = Spectral::new(torus);
        Ok(Self {
            eq,
            sp,
            n,
            g_inv_conj: g_inv.conj(),
            g: gm,
            log_det_g,
            h,
            m: j.matrix().clone(),
            m_adj: j.matrix().adjoint(),
            f: f.values(),
            grid,
        })
    }

    fn hat(&self, phi: &[T]) -> Vec<C<T>> {
        let mut hat: Vec<C<T>> = phi.iter().map(|&v| C::new(v, T::zero())).collect();
        self.sp.forward(&mut hat);
        hat
    }

    /// Equation matrix at each node from the packed complex Hessian, written
    /// as a dense row-major slice into `a`.
    fn node_matrix(&self, node: usize, p: &[C<T>], a: &mut [C<T>], work: &mut Work<T>) {
        let n = self.n;
        unpack(p, n, &mut work.p);
        // H = (P + M conj(P) M^*)/2
        mul_conj_adj(&self.m, &work.p, &self.m_adj, &mut work.t, &mut work.jp, n);
        let half = lit::<T>(0.5);
        for k in 0..n * n {
            work.hs[k] = (work.p[k] + work.jp[k]) * half;
        }
        let g = self.g.as_slice();
        match self.eq {
            Equation::Cma => {
                for k in 0..n * n {
                    a[k] = g[k] + work.hs[k];
                }
            }
            Equation::N1ma => {
                let gi = self.g_inv_conj.as_slice();
                // tr(g^{-1} H) = sum_ik (g^{-1})_{ik} H_{ki} = sum_ik conj(g^{-1})_{ki} H_{ki}... use Hermitian symmetry
                let mut lap = T::zero();
                for i in 0..n {
                    for k in 0..n {
                        lap = lap + (gi[k * n + i].conj() * work.hs[k * n + i]).re;
                    }
                }
                let hn = self.h.expect("checked").node_packed(node);
                unpack(hn, n, &mut work.t);
                let inv = T::one() / from_usize::<T>(n - 1);
                for k in 0..n * n {
                    a[k] = work.t[k] + (g[k] * lap - work.hs[k]) * inv;
                }
            }
        }
    }

    /// Evaluates `log det` and `Θ` at every node. On failure returns the
    /// first node where the equation matrix is not positive definite.
    fn eval(&self, hat: &[C<T>]) -> std::result::Result<Eval<T>, usize> {
        let n = self.n;
        let pl = packed_len(n);
        let hess = complex_hessian_from_hat(&self.sp, self.grid.clone(), hat);
        let mut theta = hess_into_data(hess);
        let nodes = self.sp.len();
        let mut log_det = vec![T::zero(); nodes];
        let mut work = Work::new(n);
        let mut a = vec![C::zero(); n * n];
        let mut inv = vec![C::zero(); n * n];
        let half = lit::<T>(0.5);
        let inv_n1 = if n > 1 { T::one() / from_usize::<T>(n - 1) } else { T::one() };
        for node in 0..nodes {
            let p = &mut theta[node * pl..(node + 1) * pl];
            self.node_matrix(node, p, &mut a, &mut work);
            if !cholesky_in_place(&mut a, n) {
                return Err(node);
            }
            log_det[node] = chol_logdet(&a, n) - self.log_det_g;
            chol_inverse(&a, n, &mut inv, &mut work.t);
            // sym = (conj(inv) + M^* inv M)/2
            mul3(&self.m_adj, &inv, &self.m, &mut work.t, &mut work.jp, n);
            for k in 0..n * n {
                work.hs[k] = (inv[k].conj() + work.jp[k]) * half;
            }
            if self.eq == Equation::N1ma {
                let g = self.g.as_slice();
                let mut tr = T::zero();
                for i in 0..n {
                    for k in 0..n {
                        tr = tr + (inv[i * n + k] * g[k * n + i]).re;
                    }
                }
                let gi = self.g_inv_conj.as_slice();
                for k in 0..n * n {
                    work.hs[k] = (gi[k] * tr - work.hs[k]) * inv_n1;
                }
            }
            pack_into(&work.hs, n, p);
        }
        Ok(Eval { log_det, theta })
    }

    fn residual(&self, ev: &Eval<T>, t: T, b: T) -> Vec<T> {
        ev.log_det.iter().zip(self.f).map(|(&l, &f)| l - t * f - b).collect()
    }

    /// Minimum eigenvalue of the equation matrix over all nodes.
    fn cone_margin(&self, hat: &[C<T>]) -> T {
        let n = self.n;
        let pl = packed_len(n);
        let data = hess_into_data(complex_hessian_from_hat(&self.sp, self.grid.clone(), hat));
        let mut work = Work::new(n);
        let mut a = vec![C::zero(); n * n];
        let mut w = vec![T::zero(); n];
        let mut worst = T::infinity();
        for node in 0..self.sp.len() {
            self.node_matrix(node, &data[node * pl..(node + 1) * pl], &mut a, &mut work);
            jacobi_eigh(&mut a, n, &mut w, None);
            worst = worst.min(w[0]);
        }
        worst
    }

    /// Symbol of the constant-coefficient operator `Θ0^{i j̄} ∂_i ∂_j̄`.
    fn symbol(&self, theta0: &[C<T>]) -> Vec<T> {
        let n = self.n;
        let mut sym = vec![T::zero(); self.sp.len()];
        let two = lit::<T>(2.0);
        self.sp.for_each_mode(|idx, modes| {
            let mut s = T::zero();
            for i in 0..n {
                s = s + theta0[packed_index(n, i, i)].re * self.sp.hessian_symbol(modes, i, i).re;
                for k in i + 1..n {
                    s = s + two * (theta0[packed_index(n, i, k)] * self.sp.hessian_symbol(modes, i, k)).re;
                }
            }
            sym[idx] = s;
        });
        sym
    }

    /// `out = Θ^{i j̄} v_{i j̄}` from the transform `vhat` of `v`.
    fn apply_theta(&self, theta: &[C<T>], vhat: &[C<T>], buf: &mut [C<T>], out: &mut [T]) {
        let n = self.n;
        let pl = packed_len(n);
        let sp = &self.sp;
        let i_unit = C::new(T::zero(), T::one());
        let two = lit::<T>(2.0);
        for o in out.iter_mut() {
            *o = T::zero();
        }
        let mut i = 0;
        while i < n {
            let k = i + 1;
            sp.for_each_mode(|idx, modes| {
                let mut s = sp.hessian_symbol(modes, i, i);
                if k < n {
                    s = s + i_unit * sp.hessian_symbol(modes, k, k);
                }
                buf[idx] = s * vhat[idx];
            });
            sp.inverse(buf);
            let (di, dk) = (packed_index(n, i, i), if k < n { packed_index(n, k, k) } else { 0 });
            for (node, z) in buf.iter().enumerate() {
                let th = &theta[node * pl..];
                out[node] = out[node] + th[di].re * z.re;
                if k < n {
                    out[node] = out[node] + th[dk].re * z.im;
                }
            }
            i += 2;
        }
        for i in 0..n {
            for k in i + 1..n {
                sp.for_each_mode(|idx, modes| buf[idx] = sp.hessian_symbol(modes, i, k) * vhat[idx]);
                sp.inverse(buf);
                let e = packed_index(n, i, k);
                for (node, z) in buf.iter().enumerate() {
                    out[node] = out[node] + two * (theta[node * pl + e] * *z).re;
                }
            }
        }
    }
}

struct Work<T> {
    p: Vec<C<T>>,
    t: Vec<C<T>>,
    jp: Vec<C<T>>,
    hs: Vec<C<T>>,
}

impl<T: Real> Work<T> {
    fn new(n: usize) -> Self {
        let z = vec![C::zero(); n * n];
        Self { p: z.clone(), t: z.clone(), jp: z.clone(), hs: z }
    }
}

fn hess_into_data<T: Real>(h: HermitianField<T>) -> Vec<C<T>> {
    h.into_packed()
}

fn unpack<T: Real>(p: &[C<T>], n: usize, out: &mut [C<T>]) {
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            out[i * n + j] = p[k];
            out[j * n + i] = p[k].conj();
            k += 1;
        }
    }
}

fn pack_into<T: Real>(a: &[C<T>], n: usize, p: &mut [C<T>]) {
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            p[k] = if i == j { C::new(a[i * n + i].re, T::zero()) } else { a[i * n + j] };
            k += 1;
        }
    }
}

/// `out = A conj(B) C`.
fn mul_conj_adj<T: Real>(a: &CMat<T>, b: &[C<T>], c: &CMat<T>, tmp: &mut [C<T>], out: &mut [C<T>], n: usize) {
    let (a, c) = (a.as_slice(), c.as_slice());
    for i in 0..n {
        for j in 0..n {
            let mut s = C::zero();
            for k in 0..n {
                s = s + a[i * n + k] * b[k * n + j].conj();
            }
            tmp[i * n + j] = s;
        }
    }
    matmul(tmp, c, out, n);
}

/// `out = A B C`.
fn mul3<T: Real>(a: &CMat<T>, b: &[C<T>], c: &CMat<T>, tmp: &mut [C<T>], out: &mut [C<T>], n: usize) {
    matmul(a.as_slice(), b, tmp, n);
    matmul(tmp, c.as_slice(), out, n);
}

fn matmul<T: Real>(a: &[C<T>], b: &[C<T>], out: &mut [C<T>], n: usize) {
    for i in 0..n {
        for j in 0..n {
            let mut s = C::zero();
            for k in 0..n {
                let x = a[i * n + k];
                if x.re != T::zero() || x.im != T::zero() {
                    s = s + x * b[k * n + j];
                }
            }
            out[i * n + j] = s;
        }
    }
}

fn sup_abs<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, &x| if x.is_nan() { T::nan() } else { m.max(Float::abs(x)) })
}

fn mean<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |s, &x| s + x) / from_usize::<T>(v.len())
}

/// Iterate of one continuation stage.
struct State<T> {
    phi: Vec<T>,
    hat: Vec<C<T>>,
    b: T,
    eval: Eval<T>,
    res: Vec<T>,
}

enum StageFailure {
    ConeExit(usize),
    Stalled(String),
}

/// Solves either torus equation.
pub fn solve_torus<T: Real>(
    eq: Equation,
    f: &ScalarField<T>,
    g: &HermitianField<T>,
    h: Option<&HermitianField<T>>,
    j: &ComplexStructureJ<T>,
    opts: &TorusSolveOptions<T>,
) -> Result<SolveReport<T>> {
    if eq == Equation::N1ma && g.n() < 2 {
        return Err(Error::DimensionTooSmall(g.n()));
    }
    if !(opts.tol > T::zero()) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let prob = Problem::new(eq, f, g, h, j)?;
    let phi0 = match &opts.initial_guess {
        Some(p) => {
            same_grid(p.grid(), f.grid())?;
            p.values().to_vec()
        }
        None => vec![T::zero(); f.len()],
    };
    let hat0 = prob.hat(&phi0);
    let ev0 = prob.eval(&hat0).map_err(|node| Error::ConeViolation { node, margin: f64::NAN })?;
    let b0 = mean(&prob.residual(&ev0, T::zero(), T::zero()));
    let res0 = prob.residual(&ev0, T::zero(), b0);
    let mut state = State { phi: phi0, hat: hat0, b: b0, eval: ev0, res: res0 };

    let mut history = Vec::new();
    let mut iterations = 0usize;
    let mut linear_iterations = 0usize;
    let mut stages = 0usize;
    let mut t_done = T::zero();
    let mut dt = T::one();
    let stage_tol = opts.tol.max(lit(1e-6));
    loop {
        let t = (t_done + dt).min(T::one());
        let last = t >= T::one();
        let tol = if last { opts.tol } else { stage_tol };
        let mut trial = State {
            phi: state.phi.clone(),
            hat: state.hat.clone(),
            b: state.b,
            eval: Eval { log_det: state.eval.log_det.clone(), theta: state.eval.theta.clone() },
            res: Vec::new(),
        };
        // shift b so the stage starts with a mean-free residual
        let raw = prob.residual(&trial.eval, t, T::zero());
        trial.b = mean(&raw);
        trial.res = prob.residual(&trial.eval, t, trial.b);
        let mut stage_hist = Vec::new();
        match newton_stage(&prob, &mut trial, t, tol, opts, &mut stage_hist, &mut linear_iterations) {
            Ok(steps) => {
                iterations += steps;
                stages += 1;
                history.extend(stage_hist);
                state = trial;
                t_done = t;
                if last {
                    break;
                }
                dt = (dt * lit(2.0)).min(T::one());
            }
            Err(fail) => {
                iterations += stage_hist.len().saturating_sub(1);
                dt = dt * lit(0.5);
                if dt < opts.min_continuation_step {
                    let last_res = stage_hist.last().copied().unwrap_or(T::nan());
                    return Err(match fail {
                        StageFailure::ConeExit(node) => Error::NoConvergence(format!(
                            "continuation stalled at t = {:.6}: iterates leave the cone at node {node} (last residual {:e})",
                            to_f64(t_done),
                            to_f64(last_res)
                        )),
                        StageFailure::Stalled(msg) => Error::NoConvergence(format!(
                            "continuation stalled at t = {:.6}: {msg} (last residual {:e})",
                            to_f64(t_done),
                            to_f64(last_res)
                        )),
                    });
                }
            }
        }
    }

    let sup = state.phi.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
    let potential = ScalarField::new(prob.grid.clone(), state.phi.iter().map(|&v| v - sup).collect())?;
    let cone_margin = prob.cone_margin(&state.hat);
    Ok(SolveReport {
        potential,
        b: state.b,
        residual_history: history,
        cone_margin,
        iterations,
        continuation_steps: stages,
        linear_iterations,
    })
}

fn newton_stage<T: Real>(
    prob: &Problem<'_, T>,
    st: &mut State<T>,
    t: T,
    tol: T,
    opts: &TorusSolveOptions<T>,
    hist: &mut Vec<T>,
    linear_iterations: &mut usize,
) -> std::result::Result<usize, StageFailure> {
    let len = st.phi.len();
    let n = prob.n;
    let pl = packed_len(n);
    let mut buf = vec![C::zero(); len];
    let mut rn = sup_abs(&st.res);
    hist.push(rn);
    for step in 0..opts.max_newton {
        if rn <= tol {
            return Ok(step);
        }
        if rn.is_nan() {
            return Err(StageFailure::Stalled("residual is not finite".into()));
        }
        // mean tensor for the preconditioner
        let mut theta0 = vec![C::zero(); pl];
        for node in 0..len {
            for (a, b) in theta0.iter_mut().zip(&st.eval.theta[node * pl..(node + 1) * pl]) {
                *a = *a + *b;
            }
        }
        let inv_len = T::one() / from_usize::<T>(len);
        for a in theta0.iter_mut() {
            *a = *a * inv_len;
        }
        let sym = prob.symbol(&theta0);
        let theta = &st.eval.theta;
        // v = L0^{-1}(w - mean w)
        let l0_inv = |w: &[T], buf: &mut [C<T>]| -> T {
            let wm = mean(w);
            for (z, &x) in buf.iter_mut().zip(w) {
                *z = C::new(x - wm, T::zero());
            }
            prob.sp.forward(buf);
            for (z, &s) in buf.iter_mut().zip(&sym) {
                *z = if s == T::zero() { C::zero() } else { *z / s };
            }
            wm
        };
        let mut hat_v = vec![C::zero(); len];
        let mut scratch = vec![C::zero(); len];
        let apply = |w: &[T], out: &mut [T]| {
            let wm = l0_inv(w, &mut hat_v);
            prob.apply_theta(theta, &hat_v, &mut scratch, out);
            for o in out.iter_mut() {
                *o = *o + wm;
            }
        };
        let rhs: Vec<T> = st.res.iter().map(|&r| -r).collect();
        let mut w = vec![T::zero(); len];
        let eta = rn.min(lit(0.1)).max(lit(1e-13));
        let gopts = GmresOptions { rtol: eta, atol: T::zero(), restart: opts.gmres_restart, max_iter: opts.gmres_max_iter };
        let out = gmres(apply, crate::linalg::krylov::no_precond, &rhs, &mut w, &gopts);
        *linear_iterations += out.iterations;
        // recover (δφ, δb)
        let wm = l0_inv(&w, &mut buf);
        let dhat = buf.clone();
        prob.sp.inverse(&mut buf);
        let dphi: Vec<T> = buf.iter().map(|z| z.re).collect();
        let db = -wm;

        let mut alpha = T::one();
        let mut accepted = false;
        let mut last_fail = None;
        for _ in 0..=opts.max_halvings {
            let phi: Vec<T> = st.phi.iter().zip(&dphi).map(|(&p, &d)| p + alpha * d).collect();
            let hat: Vec<C<T>> = st.hat.iter().zip(&dhat).map(|(&p, &d)| p + d * alpha).collect();
            let b = st.b + alpha * db;
            match prob.eval(&hat) {
                Ok(ev) => {
                    let res = prob.residual(&ev, t, b);
                    let rn_new = sup_abs(&res);
                    if rn_new <= (T::one() - lit::<T>(1e-4) * alpha) * rn {
                        st.phi = phi;
                        st.hat = hat;
                        st.b = b;
                        st.eval = ev;
                        st.res = res;
                        rn = rn_new;
                        accepted = true;
                        break;
                    }
                    last_fail = None;
                }
                Err(node) => last_fail = Some(node),
            }
            alpha = alpha * lit(0.5);
        }
        hist.push(rn);
        if !accepted {
            return Err(match last_fail {
                Some(node) => StageFailure::ConeExit(node),
                None => StageFailure::Stalled("line search found no decrease".into()),
            });
        }
    }
    if rn <= tol {
        Ok(opts.max_newton)
    } else {
        Err(StageFailure::Stalled(format!("no convergence in {} Newton steps", opts.max_newton)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_flat_model;
    use crate::pointalg::{g_hat, g_tilde, log_det_ratio};
    use std::f64::consts::TAU;

    #[test]
    fn zero_data_gives_zero_solution() {
        let (grid, g, j) = make_flat_model::<f64>(1, 8, 1.0).unwrap();
        let f = ScalarField::zeros(grid);
        let r = solve_cma_torus(&f, &g, &j, 1e-10).unwrap();
        assert_eq!(r.b, 0.0);
        assert_eq!(r.potential.sup_abs(), 0.0);
        assert_eq!(r.iterations, 0);
        assert!((r.cone_margin - 1.0).abs() < 1e-14);
    }

    #[test]
    fn manufactured_cma_small_grid() {
        let (grid, g, j) = make_flat_model::<f64>(1, 8, 1.0).unwrap();
        let star = ScalarField::from_fn(grid.clone(), |x| 0.05 * (TAU * x[0]).cos() + 0.02 * (TAU * (x[1] + x[2])).sin());
        let gt = g_tilde(&g, &star, &j).unwrap();
        let f = log_det_ratio(&gt, &g).unwrap();
        let r = solve_cma_torus(&f, &g, &j, 1e-10).unwrap();
        let want = star.add_constant(-star.sup());
        assert!(r.potential.max_abs_diff(&want).unwrap() < 1e-9, "{:?}", r.residual_history);
        assert!(r.b.abs() < 1e-9);
        assert!(r.final_residual() <= 1e-10);
    }

    #[test]
    fn manufactured_n1ma_small_grid() {
        let (grid, g, j) = make_flat_model::<f64>(1, 8, 1.0).unwrap();
        let h = g.clone();
        let star = ScalarField::from_fn(grid.clone(), |x| 0.05 * (TAU * x[2]).cos() - 0.03 * (TAU * (x[0] - x[3])).cos());
        let gh = g_hat(&h, &g, &star, &j).unwrap();
        let f = log_det_ratio(&gh, &g).unwrap();
        let r = solve_n1ma_torus(&f, &g, &h, &j, 1e-10).unwrap();
        let want = star.add_constant(-star.sup());
        assert!(r.potential.max_abs_diff(&want).unwrap() < 1e-9);
    }

    #[test]
    fn constant_shift_moves_b() {
        let (grid, g, j) = make_flat_model::<f64>(1, 8, 1.0).unwrap();
        let f = ScalarField::from_fn(grid.clone(), |x| 0.3 * (TAU * x[0]).sin() * (TAU * x[3]).cos());
        let r1 = solve_cma_torus(&f, &g, &j, 1e-10).unwrap();
        let r2 = solve_cma_torus(&f.add_constant(0.7), &g, &j, 1e-10).unwrap();
        assert!((r2.b - (r1.b - 0.7)).abs() < 1e-10);
        assert!(r1.potential.max_abs_diff(&r2.potential).unwrap() < 1e-9);
    }

    #[test]
    fn large_data_needs_continuation() {
        let (grid, g, j) = make_flat_model::<f64>(1, 8, 1.0).unwrap();
        let f = ScalarField::from_fn(grid.clone(), |x| 3.0 * (TAU * x[0]).cos() + 2.0 * (TAU * x[2]).sin());
        let r = solve_cma_torus(&f, &g, &j, 1e-9).unwrap();
        assert!(r.cone_margin > 0.0);
        let gt = g_tilde(&g, &r.potential, &j).unwrap();
        let lhs = log_det_ratio(&gt, &g).unwrap();
        let res = lhs.axpby(1.0, &f, -1.0).unwrap().add_constant(-r.b);
        assert!(res.sup_abs() < 1e-9);
    }

    #[test]
    fn n1ma_requires_h() {
        let (grid, g, j) = make_flat_model::<f64>(1, 8, 1.0).unwrap();
        let f = ScalarField::zeros(grid);
        let opts = TorusSolveOptions::default();
        assert!(matches!(solve_torus(Equation::N1ma, &f, &g, None, &j, &opts), Err(Error::Missing(_))));
    }
}
