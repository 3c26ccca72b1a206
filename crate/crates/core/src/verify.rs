//! Property suites: pointwise identities, cone and positivity facts, the
//! Young constants and a small end-to-end harness run.

use std::f64::consts::TAU;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::geometry::{
    make_flat_model, trace_against, twisted_hessian, ComplexStructureJ, Grid, HermitianField, ScalarField, TorusGrid,
};
use crate::harness::{self, FSpec, HarnessConfig, ModelConfig, RunConfig, SolverConfig};
use crate::linalg::{CMat, C};
use crate::pointalg::{
    cone_check, g_hat, g_hat_from_hessian, g_tilde, laplace_positivity_check, lemma21_residual, lemma22_gap, n_minus_trace, operator_l,
    theta_hat, theta_tilde, ConeKind,
};
use crate::solver::{solve_torus, Equation, TorusSolveOptions};

pub const SUITES: [&str; 9] =
    ["structure", "lemma21", "lemma22", "lemma23", "cone", "positivity", "young", "phi_a", "comparison"];

#[derive(Clone, Debug, Serialize)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub checks: usize,
    /// Smallest margin observed (negative means violated).
    pub worst: f64,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Random instances per randomized suite.
    pub instances: usize,
    /// Replaces the standard `J` in every suite; used to inject faults.
    pub j_override: Option<CMat<f64>>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { seed: 0, instances: 200, j_override: None }
    }
}

impl VerifyConfig {
    fn rng(&self, suite: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ suite.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }

    fn j(&self, m: usize) -> ComplexStructureJ<f64> {
        match &self.j_override {
            Some(mat) if mat.n() == 2 * m => ComplexStructureJ::new_unchecked(mat.clone()),
            _ => ComplexStructureJ::standard(m),
        }
    }
}

/// `J` with `M^T ≠ -M`, for negative controls.
pub fn broken_j(m: usize) -> CMat<f64> {
    let mut a = ComplexStructureJ::<f64>::standard(m).matrix().clone();
    a[(1, 0)] = C::new(0.5, 0.0);
    a
}

fn outcome(name: &'static str, checks: usize, worst: f64, detail: String) -> SuiteOutcome {
    SuiteOutcome { name, passed: worst >= 0.0 && worst.is_finite(), checks, worst, detail }
}

/// Random trigonometric potential with modes in `[-2, 2]`.
pub fn random_trig(grid: &Arc<Grid<f64>>, rng: &mut impl Rng, terms: usize) -> ScalarField<f64> {
    let t = grid.as_torus().expect("torus grid");
    let pot = TrigPotential::random(t.m(), t.period(), rng, terms);
    ScalarField::from_fn(grid.clone(), |x| pot.value(x))
}

/// `Σ c cos(2π k·x / L + θ)` with an exact complex Hessian.
#[derive(Clone, Debug)]
pub struct TrigPotential {
    pub m: usize,
    pub period: f64,
    pub modes: Vec<(Vec<f64>, f64, f64)>,
}

impl TrigPotential {
    pub fn random(m: usize, period: f64, rng: &mut impl Rng, terms: usize) -> Self {
        let modes = (0..terms)
            .map(|_| {
                let k: Vec<f64> = (0..4 * m).map(|_| rng.gen_range(-2i32..=2) as f64).collect();
                (k, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..TAU))
            })
            .collect();
        Self { m, period, modes }
    }

    fn phase(&self, k: &[f64], ph: f64, x: &[f64]) -> f64 {
        TAU * k.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() / self.period + ph
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.modes.iter().map(|(k, c, ph)| c * self.phase(k, *ph, x).cos()).sum()
    }

    /// `∂²/∂z_i∂z̄_j` at `x`.
    pub fn complex_hessian(&self, x: &[f64]) -> CMat<f64> {
        let n = 2 * self.m;
        let d = 2 * n;
        let mut real = vec![0.0; d * d];
        for (k, c, ph) in &self.modes {
            let w = -c * self.phase(k, *ph, x).cos() * (TAU / self.period).powi(2);
            for a in 0..d {
                for b in 0..d {
                    real[a * d + b] += w * k[a] * k[b];
                }
            }
        }
        let r = |a: usize, b: usize| real[a * d + b];
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let (xi, yi, xj, yj) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
                out[(i, j)] = C::new(r(xi, xj) + r(yi, yj), r(xi, yj) - r(yi, xj)) * 0.25;
            }
        }
        out
    }
}

/// Grid whose nodes index sample points of pointwise checks.
fn carrier() -> Arc<Grid<f64>> {
    Arc::new(Grid::Torus(TorusGrid::new(1, 4, 1.0).expect("valid grid")))
}

/// Twisted Hessian of a random potential at random points, one per node of
/// `carrier`.
fn sampled_hessian(
    carrier: &Arc<Grid<f64>>,
    j: &ComplexStructureJ<f64>,
    rng: &mut impl Rng,
    twisted: bool,
) -> HermitianField<f64> {
    let m = j.n() / 2;
    let pot = TrigPotential::random(m, 1.0, rng, 4);
    let points: Vec<Vec<f64>> = (0..carrier.len()).map(|_| (0..4 * m).map(|_| rng.gen::<f64>()).collect()).collect();
    HermitianField::from_fn(carrier.clone(), j.n(), |node| {
        let p = pot.complex_hessian(&points[node]);
        if twisted {
            let q = j.conjugate_action(&p);
            (&p + &q).scale(0.5)
        } else {
            p
        }
    })
}

fn min_eig(a: &HermitianField<f64>) -> f64 {
    a.min_eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
}

/// Scale `a` with `min eig(Id + a · shape) ≥ margin`; `u ∈ (0, 1]` picks how
/// close to that limit the result is.
pub fn cone_scale(shape: &HermitianField<f64>, margin: f64, u: f64) -> f64 {
    u * (1.0 - margin) / (-min_eig(shape)).max(1e-12)
}

/// Rescales `phi` into the cone described by `shape` (see [`cone_scale`]).
pub fn scale_into_cone(phi: &ScalarField<f64>, shape: &HermitianField<f64>, margin: f64, u: f64) -> ScalarField<f64> {
    phi.scale(cone_scale(shape, margin, u))
}

/// `ĝ - Id` for `g = h = Id`, as a function of the twisted Hessian.
fn hat_shape(hess: &HermitianField<f64>) -> Result<HermitianField<f64>> {
    let id = HermitianField::constant(hess.grid().clone(), &CMat::identity(hess.n()));
    g_hat_from_hessian(&id, &id, hess)?.axpby(1.0, &id, -1.0)
}

/// Random member of `PSH_J` (`kind = PshJ`) or of the `(n-1)`-form cone
/// with minimum eigenvalue at least `margin`, for `g = h = Id`.
pub fn random_member(
    kind: ConeKind,
    grid: &Arc<Grid<f64>>,
    g: &HermitianField<f64>,
    j: &ComplexStructureJ<f64>,
    rng: &mut impl Rng,
    margin: f64,
) -> Result<ScalarField<f64>> {
    let phi = random_trig(grid, rng, 4);
    let shape = match kind {
        ConeKind::PshJ => twisted_hessian(&phi, j)?,
        ConeKind::PshJN1 => g_hat(g, g, &phi, j)?.axpby(1.0, g, -1.0)?,
    };
    let u = rng.gen_range(0.2..1.0);
    Ok(scale_into_cone(&phi, &shape, margin, u))
}

/// Sampled `(g̃, g)` or `(ĝ, g)` of a random cone member with margin 0.1.
fn sampled_metric(kind: ConeKind, j: &ComplexStructureJ<f64>, rng: &mut impl Rng) -> Result<(HermitianField<f64>, HermitianField<f64>)> {
    let grid = carrier();
    let id = HermitianField::constant(grid.clone(), &CMat::identity(j.n()));
    let hess = sampled_hessian(&grid, j, rng, true);
    let shape = match kind {
        ConeKind::PshJ => hess,
        ConeKind::PshJN1 => hat_shape(&hess)?,
    };
    let a = cone_scale(&shape, 0.1, rng.gen_range(0.2..1.0));
    Ok((id.axpby(1.0, &shape, a)?, id))
}

fn structure(cfg: &VerifyConfig) -> SuiteOutcome {
    let mut failing = Vec::new();
    let mut worst = f64::INFINITY;
    for m in 1..=2 {
        let j = cfg.j(m);
        for (name, defect) in j.defects() {
            worst = worst.min(1e-12 - defect);
            if !(defect <= 1e-12) {
                failing.push(format!("m={m}: {name} (defect {defect:.3e})"));
            }
        }
    }
    let detail = if failing.is_empty() { "J invariants hold at m = 1, 2".into() } else { failing.join("; ") };
    outcome("structure", 6, worst, detail)
}

/// Largest `|det Θ̃ det g̃ - 1|` over random `PSH_J` potentials at
/// `m ∈ {1, 2}`, and the smallest value over untwisted (not q-real)
/// Hessians, the negative control.
pub fn lemma21_scan(cfg: &VerifyConfig, instances: usize) -> Result<(f64, f64)> {
    let mut rng = cfg.rng(21);
    let (mut worst, mut control) = (0.0f64, f64::INFINITY);
    for i in 0..instances {
        let j = cfg.j(1 + i % 2);
        let (gt, g) = sampled_metric(ConeKind::PshJ, &j, &mut rng)?;
        worst = worst.max(lemma21_residual(&gt, &g, &j, None)?.sup_abs());
        let raw = sampled_hessian(gt.grid(), &j, &mut rng, false);
        let broken = g.axpby(1.0, &raw, cone_scale(&raw, 0.1, 0.9))?;
        control = control.min(lemma21_residual(&broken, &g, &j, None)?.sup_abs());
    }
    Ok((worst, control))
}

fn lemma21(cfg: &VerifyConfig) -> Result<SuiteOutcome> {
    let (worst, control) = lemma21_scan(cfg, cfg.instances)?;
    let margin = (1e-8 - worst).min(control - 1e-2);
    Ok(outcome(
        "lemma21",
        2 * cfg.instances,
        margin,
        format!("max |det(Theta~) det(g~) - 1| = {worst:.3e}; negative control min = {control:.3e}"),
    ))
}

/// `(min gap at n = 4, max |gap| at n = 2)` over random `(n-1)`-cone members.
pub fn lemma22_scan(cfg: &VerifyConfig, instances: usize) -> Result<(f64, f64)> {
    let mut rng = cfg.rng(22);
    let (mut min4, mut max2) = (f64::INFINITY, 0.0f64);
    for i in 0..instances {
        for m in [2, 1] {
            if m == 1 && i % 4 != 0 {
                continue;
            }
            let j = cfg.j(m);
            let (gh, g) = sampled_metric(ConeKind::PshJN1, &j, &mut rng)?;
            let gap = lemma22_gap(&gh, &g, &j, None)?;
            if m == 2 {
                min4 = min4.min(gap.inf());
            } else {
                max2 = max2.max(gap.sup_abs());
            }
        }
    }
    Ok((min4, max2))
}

fn lemma22(cfg: &VerifyConfig) -> Result<SuiteOutcome> {
    let (min4, max2) = lemma22_scan(cfg, cfg.instances)?;
    Ok(outcome(
        "lemma22",
        cfg.instances,
        (min4 + 1e-10).min(1e-10 - max2),
        format!("min gap at n = 4: {min4:.3e}; max |gap| at n = 2: {max2:.3e}"),
    ))
}

/// `max |L φ - (n - tr_A g)|` for `Θ̃` and `Θ̂` built from `potential`.
pub fn operator_identity_defects(
    potential: &ScalarField<f64>,
    g: &HermitianField<f64>,
    j: &ComplexStructureJ<f64>,
) -> Result<(f64, f64)> {
    let gt = g_tilde(g, potential, j)?;
    let lt = operator_l(potential, &theta_tilde(&gt, j)?)?.max_abs_diff(&n_minus_trace(&gt, g)?)?;
    let gh = g_hat(g, g, potential, j)?;
    let lh = operator_l(potential, &theta_hat(&gh, g, j)?)?.max_abs_diff(&n_minus_trace(&gh, g)?)?;
    Ok((lt, lh))
}

fn lemma23(cfg: &VerifyConfig) -> Result<SuiteOutcome> {
    let mut rng = cfg.rng(23);
    let (grid, g, _) = make_flat_model::<f64>(1, 8, 1.0)?;
    let j = cfg.j(1);
    let mut worst = 0.0f64;
    for eq in [Equation::Cma, Equation::N1ma] {
        let f = random_trig(&grid, &mut rng, 3);
        let rep = solve_torus(eq, &f, &g, Some(&g), &j, &TorusSolveOptions::default())?;
        let (a, b) = match eq {
            Equation::Cma => (operator_identity_defects(&rep.potential, &g, &j)?.0, 0.0),
            Equation::N1ma => (0.0, operator_identity_defects(&rep.potential, &g, &j)?.1),
        };
        worst = worst.max(a).max(b);
    }
    Ok(outcome("lemma23", 2, 1e-8 - worst, format!("max identity defect on solver output = {worst:.3e}")))
}

fn cone(cfg: &VerifyConfig) -> Result<SuiteOutcome> {
    let mut rng = cfg.rng(31);
    let (grid, g, _) = make_flat_model::<f64>(1, 6, 1.0)?;
    let j = cfg.j(1);
    let mut worst = f64::INFINITY;
    let n = cfg.instances.min(100);
    for i in 0..n {
        let kind = if i % 2 == 0 { ConeKind::PshJ } else { ConeKind::PshJN1 };
        let phi = random_member(kind, &grid, &g, &j, &mut rng, 0.1)?;
        let inside = cone_check(kind, &phi, &g, Some(&g), &j)?;
        worst = worst.min(inside.margin - 0.1 + 1e-12);
        // far outside along the same direction
        let out = cone_check(kind, &phi.scale(50.0), &g, Some(&g), &j)?;
        worst = worst.min(if out.member { -1.0 } else { 1.0 });
    }
    Ok(outcome("cone", 2 * n, worst, format!("{n} members kept margin 0.1, scaled copies left the cone")))
}

fn positivity(cfg: &VerifyConfig) -> Result<SuiteOutcome> {
    let mut rng = cfg.rng(41);
    let mut worst = f64::INFINITY;
    let n = cfg.instances;
    for i in 0..n {
        let j = cfg.j(1 + i % 2);
        let (gh, g) = sampled_metric(ConeKind::PshJN1, &j, &mut rng)?;
        // tr h + Δψ = tr ĝ since the twist preserves traces
        let tr: Vec<f64> = trace_against(&g, &gh)?;
        worst = worst.min(tr.into_iter().fold(f64::INFINITY, f64::min));
        worst = worst.min(min_eig(&theta_hat(&gh, &g, &j)?));
        let (gt, _) = sampled_metric(ConeKind::PshJ, &j, &mut rng)?;
        worst = worst.min(min_eig(&theta_tilde(&gt, &j)?));
    }
    let (grid, g, j) = make_flat_model::<f64>(1, 6, 1.0)?;
    let psi = random_member(ConeKind::PshJN1, &grid, &g, &j, &mut rng, 0.05)?;
    worst = worst.min(laplace_positivity_check(&psi, &g, &g, &cfg.j(1))?);
    Ok(outcome("positivity", 3 * n + 1, worst, format!("min of tr h + Laplacian, Theta^ and Theta~ eigenvalues = {worst:.3e}")))
}

/// `(young margin, power margin)` over `[0, xmax]²` and `[0, xmax]` at `p`.
pub fn young_margins(p: f64, xmax: f64, steps: usize) -> Result<(f64, f64)> {
    let c_p = harness::young_constant(p)?;
    let c_pp = harness::power_constant(p)?;
    Ok((
        harness::constants::young_scan(p, c_p, xmax, 0.0, xmax, steps),
        harness::constants::power_scan(p, c_pp, xmax, steps * steps),
    ))
}

fn young() -> Result<SuiteOutcome> {
    let mut worst = f64::INFINITY;
    let mut parts = Vec::new();
    for p in [3.0, 4.0, 6.0] {
        let (y, q) = young_margins(p, 50.0, 500)?;
        worst = worst.min(y).min(q);
        parts.push(format!("p={p}: {y:.3e}/{q:.3e}"));
    }
    Ok(outcome("young", 6, worst, format!("young/power scan minima {}", parts.join(", "))))
}

fn small_run(levels: usize) -> RunConfig {
    RunConfig {
        model: ModelConfig { m: 1, res: 8, period: 1.0 },
        equation: Equation::N1ma,
        f: None,
        family: None,
        solver: SolverConfig::default(),
        harness: HarnessConfig { p: 4.0, ball_half: 4, s_count: 8, ks: vec![4], comparison_levels: levels, ..Default::default() },
        output: None,
    }
}

fn phi_a(cfg: &VerifyConfig) -> Result<SuiteOutcome> {
    let f = FSpec::RandomTrig { amplitude: 1.0, max_mode: 1, terms: 4, seed: cfg.seed };
    let r = harness::run_experiment::<f64>(&small_run(0), &f)?;
    let m = r.phi_a_margin() + 1e-10;
    Ok(outcome("phi_a", r.phi_a.len(), m, format!("min A(s) - t Phi(s-t) = {:.3e}", r.phi_a_margin())))
}

fn comparison(cfg: &VerifyConfig) -> Result<SuiteOutcome> {
    let f = FSpec::RandomTrig { amplitude: 1.0, max_mode: 1, terms: 4, seed: cfg.seed };
    let r = harness::run_experiment::<f64>(&small_run(2), &f)?;
    let m = r.comparison_margin();
    Ok(outcome("comparison", r.comparison.len(), m + 1e-4, format!("min comparison margin = {m:.3e}")))
}

/// Runs one suite; errors inside a suite count as a failure.
pub fn run_suite(name: &str, cfg: &VerifyConfig) -> SuiteOutcome {
    let res = match name {
        "structure" => Ok(structure(cfg)),
        "lemma21" => lemma21(cfg),
        "lemma22" => lemma22(cfg),
        "lemma23" => lemma23(cfg),
        "cone" => cone(cfg),
        "positivity" => positivity(cfg),
        "young" => young(),
        "phi_a" => phi_a(cfg),
        "comparison" => comparison(cfg),
        _ => return outcome("unknown", 0, -1.0, format!("no suite named {name}")),
    };
    let key = SUITES.iter().find(|s| **s == name).copied().unwrap_or("unknown");
    res.unwrap_or_else(|e| outcome(key, 0, f64::NAN, format!("error: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_by_default() {
        let cfg = VerifyConfig { instances: 20, ..Default::default() };
        for name in SUITES {
            let o = run_suite(name, &cfg);
            assert!(o.passed, "{name}: {}", o.detail);
        }
    }

    #[test]
    fn broken_j_is_named() {
        let cfg = VerifyConfig { instances: 4, j_override: Some(broken_j(1)), ..Default::default() };
        let o = run_suite("structure", &cfg);
        assert!(!o.passed);
        assert!(o.detail.contains("antisymmetric"), "{}", o.detail);
    }

    #[test]
    fn analytic_hessian_matches_spectral() {
        use crate::geometry::complex_hessian;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (grid, _, _) = make_flat_model::<f64>(1, 8, 1.0).unwrap();
        let pot = TrigPotential::random(1, 1.0, &mut rng, 5);
        let phi = ScalarField::from_fn(grid.clone(), |x| pot.value(x));
        let spec = complex_hessian(&phi).unwrap();
        for node in [0, 17, 300, 4095] {
            let x = grid.coords(node);
            let d = &spec.at(node) - &pot.complex_hessian(&x);
            assert!(d.as_slice().iter().all(|z| z.norm() < 1e-9), "node {node}");
        }
        let (grid, _, _) = make_flat_model::<f64>(2, 4, 1.0).unwrap();
        let pot = TrigPotential { m: 2, period: 1.0, modes: vec![(vec![1.0, 0.0, -1.0, 1.0, 0.0, 1.0, 0.0, -1.0], 0.7, 0.3)] };
        let phi = ScalarField::from_fn(grid.clone(), |x| pot.value(x));
        let spec = complex_hessian(&phi).unwrap();
        let x = grid.coords(1234);
        let d = &spec.at(1234) - &pot.complex_hessian(&x);
        assert!(d.as_slice().iter().all(|z| z.norm() < 1e-9));
    }

    #[test]
    fn members_respect_margin() {
        let (grid, g, j) = make_flat_model::<f64>(2, 4, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for kind in [ConeKind::PshJ, ConeKind::PshJN1] {
            let phi = random_member(kind, &grid, &g, &j, &mut rng, 0.1).unwrap();
            let c = cone_check(kind, &phi, &g, Some(&g), &j).unwrap();
            assert!(c.margin >= 0.1 - 1e-12);
        }
    }
}
