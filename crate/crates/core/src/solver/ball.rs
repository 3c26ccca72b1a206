//! Dirichlet problem `(∂∂̄u)^n = f dV` in a ball, `u = 0` on the sphere.
//!
//! Unknowns live at interior nodes. Second derivatives are taken along the
//! axes and along the diagonals `e_a ± e_b`; arms that leave the ball are cut
//! at the exact sphere crossing, where `u = 0` (Shortley-Weller). The discrete
//! equation `log det(u_{i j̄}) = log f` is solved by damped Newton with
//! continuation from the constant density, each linear step by ILU(0)
//! preconditioned GMRES.

use std::sync::Arc;

use num_traits::{Float, Zero};

use crate::error::{Error, Result};
use crate::geometry::field::{packed_index, packed_len};
use crate::geometry::{BallGrid, Grid, NodeKind, ScalarField, TorusGrid};
use crate::linalg::dense::{chol_inverse, chol_logdet, cholesky_in_place, jacobi_eigh};
use crate::linalg::{gmres, Csr, GmresOptions, Ilu0, C};
use crate::scalar::{from_usize, lit, to_f64, Real};

#[derive(Clone, Debug)]
pub struct DirichletOptions<T> {
    /// Sup-norm tolerance on `log det(u_{i j̄}) - log f`.
    pub tol: T,
    pub max_newton: usize,
    pub max_halvings: usize,
    pub min_continuation_step: T,
    /// Densities below `floor * max f` are raised to it.
    pub density_floor: T,
    pub gmres_restart: usize,
    pub gmres_max_iter: usize,
}

impl<T: Real> Default for DirichletOptions<T> {
    fn default() -> Self {
        Self {
            tol: lit(1e-6),
            max_newton: 50,
            max_halvings: 30,
            min_continuation_step: lit(1.0 / 1024.0),
            density_floor: lit(1e-10),
            gmres_restart: 60,
            gmres_max_iter: 600,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DirichletReport<T> {
    /// Solution on the ball grid; zero at non-interior nodes.
    pub solution: ScalarField<T>,
    pub residual_history: Vec<T>,
    pub iterations: usize,
    pub continuation_steps: usize,
    pub linear_iterations: usize,
    /// Smallest eigenvalue of `u_{i j̄}` over interior nodes.
    pub min_eigenvalue: T,
}

/// Solves with default options and tolerance `tol`. The density must live on
/// a ball grid; it is read at interior nodes only.
pub fn solve_dirichlet_ma_ball<T: Real>(density: &ScalarField<T>, tol: T) -> Result<ScalarField<T>> {
    let opts = DirichletOptions { tol, ..Default::default() };
    Ok(solve_dirichlet_ma_ball_with(density, &opts)?.solution)
}

/// Discrete operator: one sparse matrix per real component of `u_{i j̄}`.
struct Stencil<T> {
    n: usize,
    /// Grid node of each unknown.
    nodes: Vec<usize>,
    /// Per packed index: real part, and imaginary part for off-diagonal entries.
    re: Vec<Csr<T>>,
    im: Vec<Option<Csr<T>>>,
    pattern: Csr<T>,
}

impl<T: Real> Stencil<T> {
    fn new(b: &BallGrid<T>) -> Self {
        let n = b.n();
        let dim = 2 * n;
        let nodes: Vec<usize> = b.interior_nodes().collect();
        let mut unknown = vec![usize::MAX; b.len()];
        for (r, &node) in nodes.iter().enumerate() {
            unknown[node] = r;
        }
        let pl = packed_len(n);
        let mut re_rows: Vec<Vec<Vec<(usize, T)>>> = vec![vec![Vec::new(); nodes.len()]; pl];
        let mut im_rows: Vec<Vec<Vec<(usize, T)>>> = vec![vec![Vec::new(); nodes.len()]; pl];
        let h2 = b.spacing() * b.spacing();
        let big = (b.half() * b.half()) as i64;
        let quarter = lit::<T>(0.25);
        let sixteenth = lit::<T>(1.0 / 16.0);

        let mut off = vec![0i64; dim];
        let mut d = vec![0i64; dim];
        let mut nb = vec![0i64; dim];
        // three-point second difference along d, as (column, coefficient)
        let stencil = |off: &[i64], d: &[i64], nb: &mut Vec<i64>, row: usize| -> Vec<(usize, T)> {
            let od: i64 = off.iter().zip(d).map(|(a, b)| a * b).sum();
            let dd: i64 = d.iter().map(|a| a * a).sum();
            let oo: i64 = off.iter().map(|a| a * a).sum();
            let mut arms = [(T::one(), None::<usize>); 2];
            for (k, s) in [1i64, -1].into_iter().enumerate() {
                for a in 0..dim {
                    nb[a] = off[a] + s * d[a];
                }
                let r2: i64 = nb.iter().map(|a| a * a).sum();
                if r2 < big {
                    let idx = b.index_of_offsets(nb).expect("interior neighbour");
                    arms[k] = (T::one(), Some(unknown[idx]));
                } else {
                    let (od, dd, rest) = (lit::<T>((s * od) as f64), lit::<T>(dd as f64), lit::<T>((big - oo) as f64));
                    let theta = (-od + (od * od + dd * rest).sqrt()) / dd;
                    arms[k] = (theta, None);
                }
            }
            let (tp, tm) = (arms[0].0, arms[1].0);
            let cp = lit::<T>(2.0) / (tp * (tp + tm) * h2);
            let cm = lit::<T>(2.0) / (tm * (tp + tm) * h2);
            let mut out = vec![(row, -(cp + cm))];
            if let Some(c) = arms[0].1 {
                out.push((c, cp));
            }
            if let Some(c) = arms[1].1 {
                out.push((c, cm));
            }
            out
        };
        let add = |rows: &mut Vec<(usize, T)>, st: Vec<(usize, T)>, w: T| {
            rows.extend(st.into_iter().map(|(c, v)| (c, v * w)));
        };

        for (row, &node) in nodes.iter().enumerate() {
            b.offsets(node, &mut off);
            let mut dir = |d: &mut Vec<i64>, a: usize, sa: i64, c: Option<(usize, i64)>| {
                d.iter_mut().for_each(|x| *x = 0);
                d[a] = sa;
                if let Some((c, sc)) = c {
                    d[c] = sc;
                }
                stencil(&off, d, &mut nb, row)
            };
            for i in 0..n {
                let k = packed_index(n, i, i);
                for a in [2 * i, 2 * i + 1] {
                    let st = dir(&mut d, a, 1, None);
                    add(&mut re_rows[k][row], st, quarter);
                }
                for j in i + 1..n {
                    let k = packed_index(n, i, j);
                    let (xi, yi, xj, yj) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
                    // Re: (D_{xi+xj} - D_{xi-xj}) + (D_{yi+yj} - D_{yi-yj})
                    for (a, c, w) in [(xi, xj, T::one()), (yi, yj, T::one())] {
                        let st = dir(&mut d, a, 1, Some((c, 1)));
                        add(&mut re_rows[k][row], st, w * sixteenth);
                        let st = dir(&mut d, a, 1, Some((c, -1)));
                        add(&mut re_rows[k][row], st, -w * sixteenth);
                    }
                    // Im: (D_{xi+yj} - D_{xi-yj}) - (D_{yi+xj} - D_{yi-xj})
                    for (a, c, w) in [(xi, yj, T::one()), (yi, xj, -T::one())] {
                        let st = dir(&mut d, a, 1, Some((c, 1)));
                        add(&mut im_rows[k][row], st, w * sixteenth);
                        let st = dir(&mut d, a, 1, Some((c, -1)));
                        add(&mut im_rows[k][row], st, -w * sixteenth);
                    }
                }
            }
        }
        let cols = nodes.len();
        let mut re = Vec::with_capacity(pl);
        let mut im = Vec::with_capacity(pl);
        for i in 0..n {
            for j in i..n {
                let k = packed_index(n, i, j);
                re.push(Csr::from_rows(cols, std::mem::take(&mut re_rows[k])));
                im.push((i != j).then(|| Csr::from_rows(cols, std::mem::take(&mut im_rows[k]))));
            }
        }
        let all: Vec<&Csr<T>> = re.iter().chain(im.iter().flatten()).collect();
        let pattern = Csr::union_pattern(&all);
        Self { n, nodes, re, im, pattern }
    }

    fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Packed `u_{i j̄}` at every unknown.
    fn hessian(&self, u: &[T]) -> Vec<C<T>> {
        let pl = packed_len(self.n);
        let len = self.len();
        let mut out = vec![C::zero(); len * pl];
        let mut re = vec![T::zero(); len];
        let mut im = vec![T::zero(); len];
        for k in 0..pl {
            self.re[k].matvec(u, &mut re);
            match &self.im[k] {
                Some(m) => m.matvec(u, &mut im),
                None => im.iter_mut().for_each(|v| *v = T::zero()),
            }
            for r in 0..len {
                out[r * pl + k] = C::new(re[r], im[r]);
            }
        }
        out
    }
}

struct Eval<T> {
    log_det: Vec<T>,
    /// Jacobian row scales: per packed index, real and imaginary parts.
    coef_re: Vec<Vec<T>>,
    coef_im: Vec<Vec<T>>,
}

/// `None` if `u_{i j̄}` is not positive definite at some unknown.
fn evaluate<T: Real>(st: &Stencil<T>, u: &[T]) -> Option<Eval<T>> {
    let n = st.n;
    let pl = packed_len(n);
    let len = st.len();
    let hess = st.hessian(u);
    let mut log_det = vec![T::zero(); len];
    let mut coef_re = vec![vec![T::zero(); len]; pl];
    let mut coef_im = vec![vec![T::zero(); len]; pl];
    let mut a = vec![C::zero(); n * n];
    let mut inv = vec![C::zero(); n * n];
    let mut work = vec![C::zero(); n * n];
    let two = lit::<T>(2.0);
    for r in 0..len {
        let p = &hess[r * pl..(r + 1) * pl];
        for i in 0..n {
            for j in i..n {
                let v = p[packed_index(n, i, j)];
                a[i * n + j] = v;
                a[j * n + i] = v.conj();
            }
        }
        if !cholesky_in_place(&mut a, n) {
            return None;
        }
        log_det[r] = chol_logdet(&a, n);
        chol_inverse(&a, n, &mut inv, &mut work);
        for i in 0..n {
            coef_re[packed_index(n, i, i)][r] = inv[i * n + i].re;
            for j in i + 1..n {
                // d log det = sum (P^{-1})_{ji} dP_{ij}
                let q = inv[j * n + i];
                let k = packed_index(n, i, j);
                coef_re[k][r] = two * q.re;
                coef_im[k][r] = -two * q.im;
            }
        }
    }
    Some(Eval { log_det, coef_re, coef_im })
}

fn jacobian<T: Real>(st: &Stencil<T>, ev: &Eval<T>) -> Csr<T> {
    let mut mats: Vec<&Csr<T>> = Vec::new();
    let mut scales: Vec<&[T]> = Vec::new();
    for (k, m) in st.re.iter().enumerate() {
        mats.push(m);
        scales.push(&ev.coef_re[k]);
        if let Some(m) = &st.im[k] {
            mats.push(m);
            scales.push(&ev.coef_im[k]);
        }
    }
    Csr::combine_rows(&st.pattern, &mats, &scales)
}

fn sup_abs<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, &x| if x.is_nan() { T::nan() } else { m.max(Float::abs(x)) })
}

/// Full solver with options and diagnostics.
pub fn solve_dirichlet_ma_ball_with<T: Real>(
    density: &ScalarField<T>,
    opts: &DirichletOptions<T>,
) -> Result<DirichletReport<T>> {
    let grid = density.grid().clone();
    let b = grid
        .as_ball()
        .ok_or_else(|| Error::InvalidArgument("the Dirichlet solver needs a ball grid".into()))?;
    if !(opts.tol > T::zero()) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let n = b.n();
    let interior: Vec<usize> = b.interior_nodes().collect();
    let mut fmax = T::zero();
    for &node in &interior {
        let f = density.values()[node];
        if !(f >= T::zero()) || !f.is_finite() {
            return Err(Error::InvalidArgument(format!("density must be finite and non-negative (node {node})")));
        }
        fmax = fmax.max(f);
    }
    if fmax == T::zero() {
        return Ok(DirichletReport {
            solution: ScalarField::zeros(grid),
            residual_history: vec![T::zero()],
            iterations: 0,
            continuation_steps: 0,
            linear_iterations: 0,
            min_eigenvalue: T::zero(),
        });
    }
    let floor = fmax * opts.density_floor;
    let f: Vec<T> = interior.iter().map(|&node| density.values()[node].max(floor)).collect();
    let fbar = f.iter().fold(T::zero(), |s, &x| s + x) / from_usize::<T>(f.len());
    let log_f: Vec<T> = f.iter().map(|x| x.ln()).collect();
    let log_fbar = fbar.ln();

    let st = Stencil::new(b);
    let r2 = b.radius() * b.radius();
    let scale = fbar.powf(T::one() / from_usize::<T>(n));
    let mut u: Vec<T> = interior.iter().map(|&node| scale * (b.dist2(node) - r2)).collect();
    evaluate(&st, &u).ok_or(Error::NotPositiveDefinite { node: interior[0] })?;

    let mut history = Vec::new();
    let mut iterations = 0;
    let mut linear_iterations = 0;
    let mut stages = 0;
    let mut t_done = T::zero();
    let mut dt = T::one();
    let stage_tol = opts.tol.max(lit(1e-4));
    loop {
        let t = (t_done + dt).min(T::one());
        let last = t >= T::one();
        let target: Vec<T> = log_f.iter().map(|&l| (T::one() - t) * log_fbar + t * l).collect();
        let tol = if last { opts.tol } else { stage_tol };
        let mut trial_u = u.clone();
        let mut hist = Vec::new();
        let out = newton(&st, &mut trial_u, &target, tol, opts, &mut hist, &mut linear_iterations);
        iterations += hist.len().saturating_sub(1);
        match out {
            Ok(()) => {
                history.extend(hist);
                stages += 1;
                u = trial_u;
                t_done = t;
                if last {
                    break;
                }
                dt = (dt * lit(2.0)).min(T::one());
            }
            Err(msg) => {
                dt = dt * lit(0.5);
                if dt < opts.min_continuation_step {
                    return Err(Error::NoConvergence(format!(
                        "Dirichlet continuation stalled at t = {:.6}: {msg} (last residual {:e})",
                        to_f64(t_done),
                        to_f64(hist.last().copied().unwrap_or(T::nan()))
                    )));
                }
            }
        }
    }

    let mut values = vec![T::zero(); b.len()];
    for (r, &node) in interior.iter().enumerate() {
        values[node] = u[r];
    }
    let hess = st.hessian(&u);
    let pl = packed_len(n);
    let mut min_eig = T::infinity();
    let mut a = vec![C::zero(); n * n];
    let mut w = vec![T::zero(); n];
    for r in 0..st.len() {
        for i in 0..n {
            for j in i..n {
                let v = hess[r * pl + packed_index(n, i, j)];
                a[i * n + j] = v;
                a[j * n + i] = v.conj();
            }
        }
        jacobi_eigh(&mut a, n, &mut w, None);
        min_eig = min_eig.min(w[0]);
    }
    Ok(DirichletReport {
        solution: ScalarField::new(grid, values)?,
        residual_history: history,
        iterations,
        continuation_steps: stages,
        linear_iterations,
        min_eigenvalue: min_eig,
    })
}

fn newton<T: Real>(
    st: &Stencil<T>,
    u: &mut Vec<T>,
    target: &[T],
    tol: T,
    opts: &DirichletOptions<T>,
    hist: &mut Vec<T>,
    linear_iterations: &mut usize,
) -> std::result::Result<(), String> {
    let mut ev = evaluate(st, u).ok_or("initial iterate is not plurisubharmonic")?;
    let mut res: Vec<T> = ev.log_det.iter().zip(target).map(|(&a, &b)| a - b).collect();
    let mut rn = sup_abs(&res);
    hist.push(rn);
    for _ in 0..opts.max_newton {
        if rn <= tol {
            return Ok(());
        }
        if rn.is_nan() {
            return Err("residual is not finite".into());
        }
        let jac = jacobian(st, &ev);
        let ilu = Ilu0::new(&jac).ok_or("ILU(0) breakdown")?;
        let rhs: Vec<T> = res.iter().map(|&r| -r).collect();
        let mut du = vec![T::zero(); u.len()];
        let eta = rn.min(lit(0.1)).max(lit(1e-13));
        let gopts = GmresOptions { rtol: eta, atol: T::zero(), restart: opts.gmres_restart, max_iter: opts.gmres_max_iter };
        let out = gmres(|v, o| jac.matvec(v, o), |v, o| ilu.solve(v, o), &rhs, &mut du, &gopts);
        *linear_iterations += out.iterations;

        let mut alpha = T::one();
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let cand: Vec<T> = u.iter().zip(&du).map(|(&a, &d)| a + alpha * d).collect();
            if let Some(e) = evaluate(st, &cand) {
                let r: Vec<T> = e.log_det.iter().zip(target).map(|(&a, &b)| a - b).collect();
                let rn_new = sup_abs(&r);
                if rn_new <= (T::one() - lit::<T>(1e-4) * alpha) * rn {
                    *u = cand;
                    ev = e;
                    res = r;
                    rn = rn_new;
                    accepted = true;
                    break;
                }
            }
            alpha = alpha * lit(0.5);
        }
        hist.push(rn);
        if !accepted {
            return Err("line search found no decrease".into());
        }
    }
    if rn <= tol {
        Ok(())
    } else {
        Err(format!("no convergence in {} Newton steps", opts.max_newton))
    }
}

/// Ball grid centred at a torus node with `ratio` torus steps per ball step.
pub fn ball_on_torus<T: Real>(torus: &TorusGrid<T>, center_node: usize, half: usize, ratio: usize) -> Result<BallGrid<T>> {
    if ratio == 0 {
        return Err(Error::InvalidArgument("ratio must be >= 1".into()));
    }
    // the open ball must embed in the torus: diameter at most one period
    if 2 * half * ratio > torus.res() {
        return Err(Error::InvalidGrid(format!(
            "ball of {half} steps at ratio {ratio} does not fit in a torus of resolution {}",
            torus.res()
        )));
    }
    BallGrid::new(torus.n(), torus.coords(center_node), half, torus.spacing() * from_usize::<T>(ratio))
}

/// Restriction of a torus field to a ball grid whose nodes are torus nodes
/// (wrapping periodically).
pub fn sample_on_ball<T: Real>(field: &ScalarField<T>, ball: &BallGrid<T>) -> Result<ScalarField<T>> {
    let torus = field
        .grid()
        .as_torus()
        .ok_or_else(|| Error::InvalidArgument("sampling needs a torus field".into()))?;
    if torus.dim() != ball.dim() {
        return Err(Error::DimensionMismatch { expected: torus.dim(), got: ball.dim() });
    }
    let h = torus.spacing();
    let ratio_f = ball.spacing() / h;
    let ratio = ratio_f.round();
    let tol = lit::<T>(1e-9);
    if ratio < T::one() || Float::abs(ratio_f - ratio) > tol * ratio_f {
        return Err(Error::GridMismatch("ball spacing is not a multiple of the torus spacing".into()));
    }
    let ratio = to_f64(ratio) as i64;
    let mut center = vec![0usize; torus.dim()];
    for (a, &c) in ball.center().iter().enumerate() {
        let q = c / h;
        let qr = q.round();
        if Float::abs(q - qr) > tol * (T::one() + Float::abs(q)) {
            return Err(Error::GridMismatch("ball center is not a torus node".into()));
        }
        let r = torus.res() as i64;
        center[a] = ((to_f64(qr) as i64 % r + r) % r) as usize;
    }
    let mut off = vec![0i64; ball.dim()];
    let values = (0..ball.len())
        .map(|idx| {
            ball.offsets(idx, &mut off);
            for o in off.iter_mut() {
                *o *= ratio;
            }
            field.values()[torus.shifted(&center, &off)]
        })
        .collect();
    ScalarField::new(Arc::new(Grid::Ball(ball.clone())), values)
}

/// Interior nodes of a ball grid.
pub fn interior_count<T: Real>(b: &BallGrid<T>) -> usize {
    b.mask().iter().filter(|k| **k == NodeKind::Interior).count()
}
