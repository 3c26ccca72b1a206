//! End-to-end experiments: solve on the torus, restrict to a ball around the
//! minimum point and measure every constant of the estimate.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{make_flat_model, ScalarField};
use crate::pointalg::ConeKind;
use crate::scalar::{lit, to_f64, Real};
use crate::solver::{ball_on_torus, sample_on_ball, solve_torus, DirichletOptions, Equation, TorusSolveOptions};

use super::certify::{certify_bound, chain_terms, Certificate, CertifyInputs, ChainTerms};
use super::comparison::{alpha_threshold, beta_threshold, run_comparison, trudinger_field};
use super::constants::{
    choose_constants, delta0, power_constant, power_scan, young_check, young_constant, young_scan, ConstantLedger,
};
use super::degiorgi::{c1_closed_form, degiorgi_iterate, table_profile};
use super::entropy::{entropy_norm, l1_estimate};
use super::families::{generate, spike_family, trig_field, FSpec, Geometry, TrigTerm};
use super::sublevel::{a_phi_fit, check_monotone, default_s_grid, phi_a_check, sublevel_scan, BallData, PhiACheck};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub m: usize,
    pub res: usize,
    pub period: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_newton: usize,
    pub dirichlet_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: 1e-8, max_newton: 40, dirichlet_tol: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HarnessConfig {
    pub p: f64,
    /// Ball radius in ball-grid steps.
    pub ball_half: usize,
    /// Torus steps per ball step.
    pub ball_ratio: usize,
    pub s_count: usize,
    pub s_lo: f64,
    pub s_hi: f64,
    pub t_fractions: Vec<f64>,
    pub ks: Vec<usize>,
    /// Levels sent through the Dirichlet comparison pipeline; 0 disables it.
    pub comparison_levels: usize,
    /// α-scan grid and cap (relative to the ball volume).
    pub alphas: Vec<f64>,
    pub alpha_cap: f64,
    /// β-scan grid and cap (relative to the ball volume).
    pub betas: Vec<f64>,
    pub beta_cap: f64,
    pub degiorgi_max_steps: usize,
    /// Dense scan range `[0, scan_max]` for the Young and power constants.
    pub scan_max: f64,
    pub scan_steps: usize,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            p: 3.0,
            ball_half: 8,
            ball_ratio: 1,
            s_count: 32,
            s_lo: 0.01,
            s_hi: 0.99,
            t_fractions: vec![0.5, 0.25],
            ks: vec![4, 16, 64],
            comparison_levels: 0,
            alphas: vec![0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
            alpha_cap: 2.0,
            betas: vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0],
            beta_cap: 2.0,
            degiorgi_max_steps: 100_000,
            scan_max: 50.0,
            scan_steps: 400,
        }
    }
}

/// Families of right-hand sides for sweeps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    /// Spikes of the given heights with widths tuned to a common entropy.
    Spike {
        heights: Vec<f64>,
        center: Vec<f64>,
        #[serde(default)]
        background: Vec<TrigTerm>,
        /// Entropy budget; defaults to the tallest member's entropy at `reference_width`.
        #[serde(default)]
        budget: Option<f64>,
        reference_width: f64,
    },
    Constant {
        values: Vec<f64>,
    },
    /// Random trigonometric polynomials; member `i` uses seed `seed + i`.
    RandomTrig {
        amplitude: f64,
        max_mode: i64,
        terms: usize,
        members: usize,
        seed: u64,
    },
    Explicit {
        members: Vec<FSpec>,
    },
}

/// Complete run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub equation: Equation,
    /// Right-hand side of single runs.
    #[serde(default)]
    pub f: Option<FSpec>,
    /// Family of right-hand sides for sweeps.
    #[serde(default)]
    pub family: Option<FamilySpec>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub harness: HarnessConfig,
    #[serde(default)]
    pub output: Option<String>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.model.m == 0 || self.model.res < 4 || !(self.model.period > 0.0) {
            return bad("model needs m >= 1, res >= 4 and a positive period");
        }
        if !(self.solver.tol > 0.0 && self.solver.dirichlet_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        let h = &self.harness;
        if !(h.p > 0.0) {
            return bad("p must be positive");
        }
        if h.ball_half < 2 || h.ball_ratio == 0 {
            return bad("ball_half must be >= 2 and ball_ratio >= 1");
        }
        if h.s_count == 0 || !(0.0 < h.s_lo && h.s_lo <= h.s_hi && h.s_hi < 1.0) {
            return bad("s grid needs s_count >= 1 and 0 < s_lo <= s_hi < 1");
        }
        if h.t_fractions.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
            return bad("t fractions must lie in (0, 1)");
        }
        if h.ks.contains(&0) {
            return bad("smoothing indices k must be >= 1");
        }
        if !(h.alpha_cap > 0.0 && h.beta_cap > 0.0) {
            return bad("alpha_cap and beta_cap must be positive");
        }
        if !(h.scan_max > 0.0) || h.scan_steps == 0 {
            return bad("scan range must be non-empty");
        }
        Ok(())
    }

    /// The same configuration with a different right-hand side.
    pub fn with_f(&self, f: FSpec) -> Self {
        Self { f: Some(f), family: None, ..self.clone() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveSummary {
    pub equation: Equation,
    pub b: f64,
    pub residual: f64,
    pub iterations: usize,
    pub continuation_steps: usize,
    pub linear_iterations: usize,
    pub cone_margin: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SublevelRow {
    pub s: f64,
    pub nodes: usize,
    pub a: f64,
    pub phi: f64,
    pub a_k: Vec<(usize, f64)>,
}

/// One `(s, k)` run of the comparison pipeline with the scans built on it.
#[derive(Clone, Debug, Serialize)]
pub struct ComparisonRow {
    pub s: f64,
    pub k: usize,
    pub a_s: f64,
    pub a_k: f64,
    pub eps: f64,
    pub margin: f64,
    pub worst_node: usize,
    pub newton_iterations: usize,
    pub residual: f64,
    pub alpha_emp: Option<f64>,
    pub trudinger_beta: Option<f64>,
    /// `min over β of ∫ exp(β C_n (-ψ_{s,k})) - ∫_{𝔹_s} exp(β U_s)` with `U_s` normalised by `A_k`.
    pub chain_margin: f64,
    /// Young margin for `v = β U_s`.
    pub young_margin: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DeGiorgiSummary {
    pub c1_closed: f64,
    pub c1_iterated: Option<f64>,
    pub steps: usize,
    pub converged: bool,
    pub violation: Option<String>,
    pub phi_top: f64,
}

/// Everything measured in one experiment.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentRecord {
    pub solve: SolveSummary,
    /// `sup F` and the entropy of `F` as generated.
    pub sup_f: f64,
    pub entropy_p: f64,
    /// Entropy of `F + b`, the quantity entering the certificate.
    pub entropy_eff: f64,
    pub sup_abs_psi: f64,
    pub psi_x0: f64,
    pub x0_coords: Vec<f64>,
    pub ledger: ConstantLedger,
    pub sublevel: Vec<SublevelRow>,
    pub phi_a: Vec<PhiACheck<f64>>,
    pub degiorgi: DeGiorgiSummary,
    pub comparison: Vec<ComparisonRow>,
    pub chain: ChainTerms,
    pub certificate: Certificate,
    pub young_scan_margin: f64,
    pub power_scan_margin: f64,
}

impl ExperimentRecord {
    pub fn phi_a_margin(&self) -> f64 {
        self.phi_a.iter().map(|c| c.rhs - c.lhs).fold(f64::INFINITY, f64::min)
    }

    pub fn comparison_margin(&self) -> f64 {
        self.comparison.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min)
    }
}

/// Torus solution and the data the harness needs from it.
pub struct Solved<T> {
    pub psi: ScalarField<T>,
    pub f: ScalarField<T>,
    /// `F + b`, the right-hand side the potential actually solves.
    pub f_eff: ScalarField<T>,
    pub summary: SolveSummary,
}

pub fn solve_instance<T: Real>(cfg: &RunConfig, f: &FSpec) -> Result<Solved<T>> {
    let (grid, g, j) = make_flat_model::<T>(cfg.model.m, cfg.model.res, lit(cfg.model.period))?;
    let kind = match cfg.equation {
        Equation::Cma => ConeKind::PshJ,
        Equation::N1ma => ConeKind::PshJN1,
    };
    let fld = generate(f, &grid, Some(&Geometry { g: &g, h: &g, j: &j, kind }))?;
    let opts = TorusSolveOptions { tol: lit(cfg.solver.tol), max_newton: cfg.solver.max_newton, ..Default::default() };
    let rep = solve_torus(cfg.equation, &fld, &g, Some(&g), &j, &opts)?;
    let summary = SolveSummary {
        equation: cfg.equation,
        b: to_f64(rep.b),
        residual: to_f64(rep.final_residual()),
        iterations: rep.iterations,
        continuation_steps: rep.continuation_steps,
        linear_iterations: rep.linear_iterations,
        cone_margin: to_f64(rep.cone_margin),
    };
    let f_eff = fld.add_constant(rep.b);
    Ok(Solved { psi: rep.potential, f: fld, f_eff, summary })
}

fn min_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Runs the full measurement pipeline on one right-hand side.
pub fn run_experiment<T: Real>(cfg: &RunConfig, f: &FSpec) -> Result<ExperimentRecord> {
    cfg.validate()?;
    let solved = solve_instance::<T>(cfg, f)?;
    measure(cfg, &solved)
}

/// Sup-distance between a solved potential and the normalised manufactured one.
pub fn recovery_error<T: Real>(solved: &Solved<T>, potential: &[TrigTerm]) -> Result<f64> {
    let exact = trig_field(solved.psi.grid(), potential)?;
    let exact = exact.add_constant(-exact.sup());
    Ok(to_f64(solved.psi.max_abs_diff(&exact)?))
}

/// Harness measurements on an existing solve.
pub fn measure<T: Real>(cfg: &RunConfig, solved: &Solved<T>) -> Result<ExperimentRecord> {
    let hc = &cfg.harness;
    let n = cfg.model.m * 2;
    let p = hc.p;

    // ball around the minimum point
    let torus_grid = solved.psi.grid().clone();
    let torus = torus_grid.as_torus().expect("torus solve");
    let x0 = solved.psi.argmin();
    let ball = Arc::new(crate::geometry::Grid::Ball(ball_on_torus(torus, x0, hc.ball_half, hc.ball_ratio)?));
    let ball_grid = ball.as_ball().expect("ball grid");
    let psi_b = sample_on_ball(&solved.psi, ball_grid)?;
    let f_b = sample_on_ball(&solved.f_eff, ball_grid)?;
    let h = crate::geometry::HermitianField::constant(ball.clone(), &crate::linalg::CMat::identity(n));
    let (big_c0, c0) = choose_constants(&h, None)?;
    let data = BallData::new(psi_b, f_b, c0)?;
    let s_top = data.s_max();

    // sublevel statistics
    let s_grid = default_s_grid(s_top, hc.s_count, lit(hc.s_lo), lit(hc.s_hi));
    let stats = sublevel_scan(&data, &s_grid, &hc.ks)?;
    check_monotone(&stats)?;
    let fractions: Vec<T> = hc.t_fractions.iter().map(|&t| lit(t)).collect();
    let phi_a: Vec<PhiACheck<f64>> = phi_a_check(&data, &stats, &fractions)
        .into_iter()
        .map(|c| PhiACheck { s: to_f64(c.s), t: to_f64(c.t), lhs: to_f64(c.lhs), rhs: to_f64(c.rhs) })
        .collect();

    // A-Phi exponent and the De Giorgi lower bound
    let d0 = delta0(p, n);
    let (c4, c1) = if d0 > 0.0 {
        let (c4, _) = a_phi_fit(&stats, lit(p), n)?;
        (to_f64(c4), to_f64(c1_closed_form(c4, lit(d0), s_top)))
    } else {
        (f64::NAN, f64::NAN)
    };
    let phi_top = to_f64(data.phi(s_top));
    let mut dg = DeGiorgiSummary { c1_closed: c1, c1_iterated: None, steps: 0, converged: false, violation: None, phi_top };
    if d0 > 0.0 && c4 > 0.0 {
        let mut samples: Vec<(f64, f64)> = stats.iter().map(|st| (to_f64(st.s), to_f64(st.phi))).collect();
        samples.push((to_f64(s_top), phi_top));
        match degiorgi_iterate(c4, d0, table_profile(samples), to_f64(s_top), hc.degiorgi_max_steps) {
            Ok(out) => {
                dg.c1_iterated = Some(out.c1);
                dg.steps = out.steps;
                dg.converged = out.converged;
            }
            Err(Error::HypothesisViolated { s, t, lhs, rhs }) => {
                dg.violation = Some(format!("s={s:e} t={t:e} lhs={lhs:e} rhs={rhs:e}"))
            }
            Err(e) => return Err(e),
        }
    }

    // Young and power constants
    let c_p = young_constant(p)?;
    let c_pp = power_constant(p)?;
    let young_scan_margin = young_scan(p, c_p, hc.scan_max, 0.0, hc.scan_max, hc.scan_steps);
    let power_scan_margin = power_scan(p, c_pp, hc.scan_max, hc.scan_steps * 10);

    // comparison pipeline
    let mut comparison = Vec::new();
    let (mut alpha, mut beta) = (None, None);
    if hc.comparison_levels > 0 {
        let vol = to_f64(ball_grid.cell_volume()) * ball_grid.interior_nodes().count() as f64;
        let picks = pick_levels(stats.len(), hc.comparison_levels);
        let dopts = DirichletOptions { tol: lit(cfg.solver.dirichlet_tol), ..Default::default() };
        let betas: Vec<T> = hc.betas.iter().map(|&b| lit(b)).collect();
        for &i in &picks {
            let st = &stats[i];
            if st.nodes.is_empty() {
                continue;
            }
            let psi_s = data.psi_s(st.s);
            let beta_emp = beta_threshold(&psi_s, st.a, n, hc.beta_cap * vol)?;
            let young = match beta_emp {
                Some(b) if b.is_finite() => {
                    let u = trudinger_field(&psi_s, st.a, n)?;
                    Some(to_f64(young_check(&u.scale(lit(b)), &data.f, lit(p), lit(c_p))?))
                }
                _ => None,
            };
            for &k in &hc.ks {
                let (run, psi_sk) = run_comparison(&data, st.s, k, &dopts)?;
                let alpha_emp = alpha_threshold(&psi_sk, hc.alpha_cap * vol)?;
                let chain = super::comparison::trudinger_alpha_chain(&psi_s, &psi_sk, lit(run.a_k), n, &betas)?;
                let chain_margin = chain.iter().map(|&(_, l, r)| r - l).fold(f64::INFINITY, f64::min);
                alpha = min_opt(alpha, alpha_emp);
                beta = min_opt(beta, beta_emp);
                comparison.push(ComparisonRow {
                    s: run.s,
                    k,
                    a_s: to_f64(st.a),
                    a_k: run.a_k,
                    eps: run.eps,
                    margin: run.margin,
                    worst_node: run.worst_node,
                    newton_iterations: run.newton_iterations,
                    residual: run.residual,
                    alpha_emp,
                    trudinger_beta: beta_emp,
                    chain_margin,
                    young_margin: young,
                });
            }
        }
    }

    // certification
    let c6 = to_f64(l1_estimate(&solved.psi)?);
    let entropy_eff = to_f64(entropy_norm(&solved.f_eff, lit(p))?);
    let entropy_p = to_f64(entropy_norm(&solved.f, lit(p))?);
    let psi_x0 = to_f64(data.psi_x0());
    let chain = chain_terms(&data, p);
    let certificate = certify_bound(&CertifyInputs {
        depth: -psi_x0,
        s_top: to_f64(s_top),
        c1,
        entropy: entropy_eff,
        c6,
        c_p,
        c_p_prime: c_pp,
        p,
    })?;
    let ledger = ConstantLedger {
        c0: to_f64(c0),
        r0: 0.5 * to_f64(ball_grid.radius()),
        big_c0: to_f64(big_c0),
        p,
        delta0: d0,
        c4,
        c1,
        alpha,
        beta,
        c_p,
        c_p_prime: c_pp,
        c6,
        x0,
    };
    ledger.validate()?;
    let sublevel = stats
        .iter()
        .map(|st| SublevelRow {
            s: to_f64(st.s),
            nodes: st.nodes.len(),
            a: to_f64(st.a),
            phi: to_f64(st.phi),
            a_k: st.a_k.iter().map(|&(k, v)| (k, to_f64(v))).collect(),
        })
        .collect();
    Ok(ExperimentRecord {
        solve: solved.summary.clone(),
        sup_f: to_f64(solved.f.sup()),
        entropy_p,
        entropy_eff,
        sup_abs_psi: to_f64(solved.psi.sup_abs()),
        psi_x0,
        x0_coords: torus.coords(x0).into_iter().map(to_f64).collect(),
        ledger,
        sublevel,
        phi_a,
        degiorgi: dg,
        comparison,
        chain,
        certificate,
        young_scan_margin,
        power_scan_margin,
    })
}

/// `count` indices spread evenly over `0..len`, largest last.
fn pick_levels(len: usize, count: usize) -> Vec<usize> {
    if len == 0 {
        return Vec::new();
    }
    let count = count.min(len);
    if count == 1 {
        return vec![len - 1];
    }
    let mut out: Vec<usize> = (0..count).map(|i| i * (len - 1) / (count - 1)).collect();
    out.dedup();
    out
}

/// Member of a sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepMember {
    pub label: String,
    pub f: FSpec,
}

/// Expands a family into concrete right-hand sides. `seed` overrides the
/// family's base seed when given.
pub fn sweep_members(cfg: &RunConfig, seed: Option<u64>) -> Result<Vec<SweepMember>> {
    let fam = cfg.family.as_ref().ok_or(Error::Missing("sweep needs a [family] table"))?;
    Ok(match fam {
        FamilySpec::Spike { heights, center, background, budget, reference_width } => {
            let (grid, _, _) = make_flat_model::<f64>(cfg.model.m, cfg.model.res, cfg.model.period)?;
            let (_, members) =
                spike_family(&grid, heights, center, background, cfg.harness.p, *budget, *reference_width)?;
            members
                .into_iter()
                .map(|m| SweepMember {
                    label: format!("spike_h{}", m.height),
                    f: FSpec::Spike { height: m.height, width: m.width, center: center.clone(), background: background.clone() },
                })
                .collect()
        }
        FamilySpec::Constant { values } => values
            .iter()
            .map(|&v| SweepMember { label: format!("constant_{v}"), f: FSpec::Constant { value: v } })
            .collect(),
        FamilySpec::RandomTrig { amplitude, max_mode, terms, members, seed: base } => {
            let base = seed.unwrap_or(*base);
            (0..*members)
                .map(|i| SweepMember {
                    label: format!("random_{i}"),
                    f: FSpec::RandomTrig {
                        amplitude: *amplitude,
                        max_mode: *max_mode,
                        terms: *terms,
                        seed: base.wrapping_add(i as u64),
                    },
                })
                .collect()
        }
        FamilySpec::Explicit { members } => members
            .iter()
            .enumerate()
            .map(|(i, f)| SweepMember { label: format!("member_{i}"), f: f.clone() })
            .collect(),
    })
}

/// One row of a sweep table.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub label: String,
    pub sup_f: f64,
    pub entropy_p: f64,
    pub entropy_eff: f64,
    pub sup_abs_psi: f64,
    pub psi_x0: f64,
    #[serde(rename = "C4")]
    pub c4: f64,
    pub c1: f64,
    pub c6: f64,
    pub implied_bound: f64,
    pub log10_implied_bound: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub vacuous: bool,
    pub holds: bool,
    pub phi_a_margin: f64,
}

impl SweepRow {
    pub fn new(label: &str, r: &ExperimentRecord) -> Self {
        Self {
            label: label.to_string(),
            sup_f: r.sup_f,
            entropy_p: r.entropy_p,
            entropy_eff: r.entropy_eff,
            sup_abs_psi: r.sup_abs_psi,
            psi_x0: r.psi_x0,
            c4: r.ledger.c4,
            c1: r.ledger.c1,
            c6: r.ledger.c6,
            implied_bound: r.certificate.implied_bound,
            log10_implied_bound: r.certificate.log10_implied_bound,
            lhs: r.certificate.lhs,
            rhs: r.certificate.rhs,
            vacuous: r.certificate.vacuous,
            holds: r.certificate.holds,
            phi_a_margin: r.phi_a_margin(),
        }
    }

    /// `sup |ψ| ≤ implied_bound` and the certificate holds.
    pub fn bounded(&self) -> bool {
        self.holds && self.sup_abs_psi <= self.implied_bound
    }
}

/// Summary row: maxima over the sweep.
pub fn sweep_summary(rows: &[SweepRow]) -> Option<SweepRow> {
    if rows.is_empty() {
        return None;
    }
    let max = |f: fn(&SweepRow) -> f64| rows.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let min = |f: fn(&SweepRow) -> f64| rows.iter().map(f).fold(f64::INFINITY, f64::min);
    Some(SweepRow {
        label: "summary".into(),
        sup_f: max(|r| r.sup_f),
        entropy_p: max(|r| r.entropy_p),
        entropy_eff: max(|r| r.entropy_eff),
        sup_abs_psi: max(|r| r.sup_abs_psi),
        psi_x0: min(|r| r.psi_x0),
        c4: max(|r| r.c4),
        c1: min(|r| r.c1),
        c6: max(|r| r.c6),
        implied_bound: max(|r| r.implied_bound),
        log10_implied_bound: max(|r| r.log10_implied_bound),
        lhs: f64::NAN,
        rhs: f64::NAN,
        vacuous: rows.iter().all(|r| r.vacuous),
        holds: rows.iter().all(|r| r.holds),
        phi_a_margin: min(|r| r.phi_a_margin),
    })
}

fn write_rows<S: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = S>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn opt(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

/// Writes the tabular files of one experiment into `dir`.
pub fn write_experiment_tables(dir: &Path, r: &ExperimentRecord) -> Result<()> {
    let mut sub = Vec::new();
    for row in &r.sublevel {
        for &(k, ak) in &row.a_k {
            sub.push((row.s, k, row.nodes, row.a, row.phi, ak));
        }
        if row.a_k.is_empty() {
            sub.push((row.s, 0, row.nodes, row.a, row.phi, f64::NAN));
        }
    }
    write_rows(&dir.join("sublevel.csv"), &["s", "k", "nodes", "A_s", "Phi_s", "A_k_s"], sub)?;
    write_rows(
        &dir.join("phi_a.csv"),
        &["s", "t", "lhs", "A_s", "margin"],
        r.phi_a.iter().map(|c| (c.s, c.t, c.lhs, c.rhs, c.rhs - c.lhs)),
    )?;
    write_rows(
        &dir.join("comparison.csv"),
        &[
            "s",
            "k",
            "A_s",
            "A_k_s",
            "eps",
            "comparison_margin",
            "worst_node",
            "newton_iterations",
            "residual",
            "alpha_emp",
            "trudinger_beta",
            "chain_margin",
            "young_margin",
        ],
        r.comparison.iter().map(|c| {
            (
                c.s,
                c.k,
                c.a_s,
                c.a_k,
                c.eps,
                c.margin,
                c.worst_node,
                c.newton_iterations,
                c.residual,
                opt(c.alpha_emp),
                opt(c.trudinger_beta),
                c.chain_margin,
                opt(c.young_margin),
            )
        }),
    )?;
    let l = &r.ledger;
    let c = &r.certificate;
    let cmp = if r.comparison.is_empty() { f64::NAN } else { r.comparison_margin() };
    let fields: Vec<(&str, String)> = vec![
        ("equation", r.solve.equation.name().to_string()),
        ("b", r.solve.b.to_string()),
        ("residual", r.solve.residual.to_string()),
        ("sup_F", r.sup_f.to_string()),
        ("entropy_p", r.entropy_p.to_string()),
        ("entropy_eff", r.entropy_eff.to_string()),
        ("sup_abs_psi", r.sup_abs_psi.to_string()),
        ("psi_x0", r.psi_x0.to_string()),
        ("c0", l.c0.to_string()),
        ("r0", l.r0.to_string()),
        ("C0", l.big_c0.to_string()),
        ("p", l.p.to_string()),
        ("delta0", l.delta0.to_string()),
        ("C4", l.c4.to_string()),
        ("c1", l.c1.to_string()),
        ("c1_iterated", opt(r.degiorgi.c1_iterated).to_string()),
        ("Phi_top", r.degiorgi.phi_top.to_string()),
        ("alpha_emp", opt(l.alpha).to_string()),
        ("trudinger_beta", opt(l.beta).to_string()),
        ("C_p", l.c_p.to_string()),
        ("C_p_prime", l.c_p_prime.to_string()),
        ("C6", l.c6.to_string()),
        ("lhs", c.lhs.to_string()),
        ("rhs", c.rhs.to_string()),
        ("vacuous", c.vacuous.to_string()),
        ("holds", c.holds.to_string()),
        ("implied_bound", c.implied_bound.to_string()),
        ("log10_implied_bound", c.log10_implied_bound.to_string()),
        ("positivity_margin", r.chain.positivity_margin.to_string()),
        ("phi_a_margin", r.phi_a_margin().to_string()),
        ("comparison_margin", cmp.to_string()),
        ("young_scan_margin", r.young_scan_margin.to_string()),
        ("power_scan_margin", r.power_scan_margin.to_string()),
    ];
    let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
    w.write_record(fields.iter().map(|f| f.0))?;
    w.write_record(fields.iter().map(|f| f.1.as_str()))?;
    w.flush()?;
    Ok(())
}

pub const SWEEP_COLUMNS: [&str; 16] = [
    "label",
    "sup_F",
    "entropy_p",
    "entropy_eff",
    "sup_abs_psi",
    "psi_x0",
    "C4",
    "c1",
    "C6",
    "implied_bound",
    "log10_implied_bound",
    "lhs",
    "rhs",
    "vacuous",
    "holds",
    "phi_a_margin",
];

/// Writes `sweep.csv`: one row per member, then the summary row.
pub fn write_sweep_table(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut all: Vec<SweepRow> = rows.to_vec();
    all.extend(sweep_summary(rows));
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(SWEEP_COLUMNS)?;
    for r in all {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
