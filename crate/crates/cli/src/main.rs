use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hcma_core::harness::{
    self, measure, recovery_error, solve_instance, sweep_members, write_experiment_tables, write_sweep_table, FSpec,
    RunConfig, SweepRow,
};
use hcma_core::io::{write_field, write_solve_report};
use hcma_core::solver::SolveReport;
use hcma_core::verify::{self, VerifyConfig, SUITES};
use rayon::prelude::*;

const EXIT_VALIDATION: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_VIOLATION: u8 = 3;

#[derive(Parser)]
#[command(name = "hcma", version, about = "Monge-Ampere solvers on the flat hypercomplex torus and the estimate harness")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the property suites.
    Verify(VerifyArgs),
    /// Solve one configuration and measure the harness quantities.
    Solve(RunArgs),
    /// Solve every member of the configured family.
    Sweep(SweepArgs),
    /// Re-evaluate the certificate of a completed run directory.
    Certify {
        run_dir: PathBuf,
    },
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random instances per randomized suite.
    #[arg(long, default_value_t = 200)]
    instances: usize,
    /// Restrict to these suites (repeatable).
    #[arg(long = "suite", value_parser = clap::builder::PossibleValuesParser::new(SUITES))]
    suites: Vec<String>,
    /// Also write the report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, hide = true)]
    broken_j: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Run directory; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overwrite an existing run directory.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Overrides the base seed of random families.
    #[arg(long)]
    seed: Option<u64>,
}

struct Failure {
    code: u8,
    msg: String,
}

fn fail(code: u8, msg: impl std::fmt::Display) -> Failure {
    Failure { code, msg: msg.to_string() }
}

fn io_fail(path: &Path, e: impl std::fmt::Display) -> Failure {
    fail(EXIT_VALIDATION, format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::Solve(a) => cmd_solve(a),
        Cmd::Sweep(a) => cmd_sweep(a),
        Cmd::Certify { run_dir } => cmd_certify(&run_dir),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn cmd_verify(a: VerifyArgs) -> Result<u8, Failure> {
    let cfg = VerifyConfig {
        seed: a.seed,
        instances: a.instances,
        j_override: a.broken_j.then(|| verify::broken_j(1)),
    };
    let names: Vec<&str> = if a.suites.is_empty() {
        SUITES.to_vec()
    } else {
        SUITES.iter().copied().filter(|s| a.suites.iter().any(|x| x == s)).collect()
    };
    let mut report = String::new();
    let mut failed = 0;
    for name in &names {
        let o = verify::run_suite(name, &cfg);
        let tag = if o.passed { "PASS" } else { "FAIL" };
        if !o.passed {
            failed += 1;
        }
        writeln!(report, "{tag} {:<11} checks={:<5} worst={:+.6e} seed={} {}", o.name, o.checks, o.worst, a.seed, o.detail)
            .expect("write to string");
    }
    writeln!(report, "{} suites, {} failed", names.len(), failed).expect("write to string");
    print!("{report}");
    if let Some(path) = &a.out {
        fs::write(path, &report).map_err(|e| io_fail(path, e))?;
    }
    Ok(if failed == 0 { 0 } else { EXIT_VIOLATION })
}

fn load_config(path: &Path) -> Result<(String, RunConfig), Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_fail(path, e))?;
    let cfg: RunConfig = toml::from_str(&text).map_err(|e| fail(EXIT_VALIDATION, format!("{}: {e}", path.display())))?;
    cfg.validate().map_err(|e| fail(EXIT_VALIDATION, e))?;
    Ok((text, cfg))
}

fn prepare_dir(args: &RunArgs, cfg: &RunConfig, text: &str) -> Result<PathBuf, Failure> {
    let dir = args
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .ok_or_else(|| fail(EXIT_VALIDATION, "no run directory: pass --out or set `output`"))?;
    if dir.exists() {
        if !args.force {
            return Err(fail(EXIT_VALIDATION, format!("{} exists; pass --force to overwrite", dir.display())));
        }
        fs::remove_dir_all(&dir).map_err(|e| io_fail(&dir, e))?;
    }
    fs::create_dir_all(&dir).map_err(|e| io_fail(&dir, e))?;
    let echo = dir.join("config.toml");
    fs::write(&echo, text).map_err(|e| io_fail(&echo, e))?;
    Ok(dir)
}

fn write_with<F>(path: &Path, f: F) -> Result<(), Failure>
where
    F: FnOnce(&mut BufWriter<fs::File>) -> hcma_core::Result<()>,
{
    let file = fs::File::create(path).map_err(|e| io_fail(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).map_err(|e| io_fail(path, e))
}

fn cmd_solve(args: RunArgs) -> Result<u8, Failure> {
    let (text, cfg) = load_config(&args.config)?;
    let f = cfg.f.clone().ok_or_else(|| fail(EXIT_VALIDATION, "solve needs an [f] table"))?;
    let dir = prepare_dir(&args, &cfg, &text)?;
    let solved = solve_instance::<f64>(&cfg, &f).map_err(|e| fail(EXIT_SOLVER, format!("solve failed: {e}")))?;
    let s = &solved.summary;
    let rep = SolveReport {
        potential: solved.psi.clone(),
        b: s.b,
        residual_history: vec![s.residual],
        cone_margin: s.cone_margin,
        iterations: s.iterations,
        continuation_steps: s.continuation_steps,
        linear_iterations: s.linear_iterations,
    };
    write_with(&dir.join("solve.hcma"), |w| write_solve_report(w, cfg.equation, &rep))?;
    write_with(&dir.join("rhs.hcma"), |w| write_field(w, &solved.f))?;
    println!("equation   {}", s.equation.name());
    println!("b          {:.12e}", s.b);
    println!("residual   {:.3e} (tol {:.1e})", s.residual, cfg.solver.tol);
    println!("iterations {} newton, {} continuation, {} linear", s.iterations, s.continuation_steps, s.linear_iterations);
    println!("sup|phi|   {:.12e}", solved.psi.sup_abs());
    if let FSpec::Manufactured { potential } = &f {
        let err = recovery_error(&solved, potential).map_err(|e| fail(EXIT_SOLVER, e))?;
        println!("recovery   {err:.3e} (limit {:.1e})", 10.0 * cfg.solver.tol);
    }
    let record = measure(&cfg, &solved).map_err(|e| fail(EXIT_SOLVER, format!("harness failed: {e}")))?;
    write_experiment_tables(&dir, &record).map_err(|e| io_fail(&dir, e))?;
    print_certificate(&record.certificate);
    Ok(0)
}

fn print_certificate(c: &harness::Certificate) {
    println!("lhs        {:.6e}", c.lhs);
    println!("rhs        {:.6e}", c.rhs);
    println!("implied    {:.6e} (log10 {:.6e})", c.implied_bound, c.log10_implied_bound);
    if c.vacuous {
        println!("certificate vacuous");
    } else {
        println!("certificate {}", if c.holds { "holds" } else { "FAILS" });
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<u8, Failure> {
    let (text, cfg) = load_config(&args.run.config)?;
    let members = sweep_members(&cfg, args.seed).map_err(|e| fail(EXIT_VALIDATION, e))?;
    if members.len() < 3 {
        return Err(fail(EXIT_VALIDATION, format!("sweep needs at least 3 members, got {}", members.len())));
    }
    let dir = prepare_dir(&args.run, &cfg, &text)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.workers.max(1))
        .build()
        .map_err(|e| fail(EXIT_VALIDATION, e))?;
    let results: Vec<Result<SweepRow, String>> = pool.install(|| {
        members
            .par_iter()
            .map(|m| {
                let r = harness::run_experiment::<f64>(&cfg, &m.f).map_err(|e| format!("{}: {e}", m.label))?;
                let sub = dir.join(&m.label);
                fs::create_dir_all(&sub).map_err(|e| format!("{}: {e}", sub.display()))?;
                write_experiment_tables(&sub, &r).map_err(|e| format!("{}: {e}", sub.display()))?;
                Ok(SweepRow::new(&m.label, &r))
            })
            .collect()
    });
    let rows: Vec<SweepRow> = results.iter().filter_map(|r| r.as_ref().ok().cloned()).collect();
    let path = dir.join("sweep.csv");
    write_sweep_table(&path, &rows).map_err(|e| io_fail(&path, e))?;
    let errors: Vec<&String> = results.iter().filter_map(|r| r.as_ref().err()).collect();
    for r in &rows {
        println!(
            "{:<16} sup_F={:<10.4} entropy={:<10.4} sup|psi|={:<10.4} log10_bound={:<12.4e} holds={}",
            r.label, r.sup_f, r.entropy_eff, r.sup_abs_psi, r.log10_implied_bound, r.holds
        );
    }
    if !errors.is_empty() {
        let msg = errors.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("; ");
        return Err(fail(EXIT_SOLVER, format!("{} of {} members failed ({msg}); partial table kept", errors.len(), results.len())));
    }
    let violated = rows.iter().filter(|r| !r.bounded()).count();
    Ok(if violated == 0 { 0 } else { EXIT_VIOLATION })
}

/// One certificate read back from a table.
struct Row {
    label: String,
    lhs: f64,
    rhs: f64,
    vacuous: bool,
    holds: bool,
    implied: f64,
    log10_implied: f64,
    sup_abs_psi: f64,
}

fn read_rows(path: &Path) -> Result<Vec<Row>, Failure> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| io_fail(path, e))?;
    let header = rd.headers().map_err(|e| io_fail(path, e))?.clone();
    let col = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| fail(EXIT_VALIDATION, format!("{}: missing column '{name}'", path.display())))
    };
    let names = ["lhs", "rhs", "vacuous", "holds", "implied_bound", "log10_implied_bound", "sup_abs_psi"];
    let idx = names.iter().map(|n| col(n)).collect::<Result<Vec<_>, _>>()?;
    let label = header.iter().position(|h| h == "label");
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| io_fail(path, e))?;
        let field = |k: usize| -> Result<&str, Failure> {
            rec.get(idx[k]).ok_or_else(|| fail(EXIT_VALIDATION, format!("{}: row {} lacks '{}'", path.display(), i + 1, names[k])))
        };
        let num = |k: usize| -> Result<f64, Failure> {
            field(k)?
                .parse()
                .map_err(|_| fail(EXIT_VALIDATION, format!("{}: row {}: bad value in column '{}'", path.display(), i + 1, names[k])))
        };
        let flag = |k: usize| -> Result<bool, Failure> {
            field(k)?
                .parse()
                .map_err(|_| fail(EXIT_VALIDATION, format!("{}: row {}: bad value in column '{}'", path.display(), i + 1, names[k])))
        };
        out.push(Row {
            label: label.and_then(|l| rec.get(l)).unwrap_or("run").to_string(),
            lhs: num(0)?,
            rhs: num(1)?,
            vacuous: flag(2)?,
            holds: flag(3)?,
            implied: num(4)?,
            log10_implied: num(5)?,
            sup_abs_psi: num(6)?,
        });
    }
    Ok(out)
}

fn cmd_certify(dir: &Path) -> Result<u8, Failure> {
    let sweep = dir.join("sweep.csv");
    let mut rows = if sweep.exists() { read_rows(&sweep)? } else { read_rows(&dir.join("summary.csv"))? };
    if sweep.exists() {
        // last row is the summary of the others
        rows.pop();
    }
    if rows.is_empty() {
        println!("no instances");
        return Ok(0);
    }
    let mut ok = true;
    for r in &rows {
        let status = if r.vacuous {
            "vacuous"
        } else if r.holds && r.lhs <= r.rhs {
            "holds"
        } else {
            ok = false;
            "FAILS"
        };
        let bounded = r.sup_abs_psi <= r.implied;
        ok &= bounded;
        println!(
            "{:<16} lhs={:.6e} rhs={:.6e} implied_bound={:.6e} log10={:.6e} sup|psi|={:.6e} {status}{}",
            r.label,
            r.lhs,
            r.rhs,
            r.implied,
            r.log10_implied,
            r.sup_abs_psi,
            if bounded { "" } else { " EXCEEDS BOUND" }
        );
    }
    Ok(if ok { 0 } else { EXIT_VIOLATION })
}
