//! One function per subcommand. Each writes its files into the output
//! directory and returns a summary line plus an optional numerical failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fracvar_core::fracops::{gl_weights, integral_weights, FracOp, OpKind};
use fracvar_core::noether::{classical_current_divergence, noether_sum};
use fracvar_core::solver::solve_with;
use fracvar_core::variational::{el_residual, gradient_check};
use fracvar_core::{Field, Generator, Grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::io::{into_string, read_field, write_field, write_json, Format, GridSpec};
use crate::spec::{ProblemSpec, Resolved};
use crate::verify::{self, Suite};

/// Settings shared by every command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub format: Format,
    pub seed: u64,
    /// Adds wall time to report files (which then differ run to run).
    pub timings: bool,
}

impl RunConfig {
    fn prepare(&self) -> CliResult<()> {
        fs::create_dir_all(&self.output_dir).map_err(|e| CliError::usage(format!("{}: {e}", self.output_dir.display())))
    }

    fn path(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }

    fn wall(&self, start: Instant) -> Option<f64> {
        self.timings.then(|| start.elapsed().as_secs_f64())
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub summary: String,
    pub failure: Option<String>,
}

impl Outcome {
    fn ok(summary: String) -> Self {
        Outcome { summary, failure: None }
    }

    fn check(summary: String, passed: bool, why: impl FnOnce() -> String) -> Self {
        Outcome { summary, failure: (!passed).then(why) }
    }
}

fn load(spec_path: &Path) -> CliResult<Resolved> {
    let (spec, base) = ProblemSpec::load(spec_path)?;
    spec.resolve(&base)
}

pub fn weights(cfg: &RunConfig, alpha: f64, count: usize, integral: bool) -> CliResult<Outcome> {
    if count == 0 {
        return Err(CliError::usage("count must be at least 1"));
    }
    let w = if integral { integral_weights(alpha, count)? } else { gl_weights(alpha, count)? };
    cfg.prepare()?;
    let kind = if integral { "integral" } else { "derivative" };
    let mut partial = 0.0;
    let rows: Vec<(usize, f64, f64)> = w
        .iter()
        .enumerate()
        .map(|(k, &wk)| {
            partial += wk;
            (k, wk, partial)
        })
        .collect();

    let path = match cfg.format {
        Format::Csv => {
            let mut wr = csv::Writer::from_writer(Vec::new());
            wr.write_record(["k", "w_k", "partial_sum"])?;
            for (k, wk, s) in &rows {
                wr.write_record([k.to_string(), wk.to_string(), s.to_string()])?;
            }
            let text = format!("# weights kind={kind} alpha={alpha} count={count}\n{}", into_string(wr)?);
            let path = cfg.path("weights.csv");
            fs::write(&path, text)?;
            path
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Table {
                kind: &'static str,
                alpha: f64,
                k: Vec<usize>,
                w_k: Vec<f64>,
                partial_sum: Vec<f64>,
            }
            let path = cfg.path("weights.json");
            write_json(
                &path,
                &Table {
                    kind,
                    alpha,
                    k: rows.iter().map(|r| r.0).collect(),
                    w_k: rows.iter().map(|r| r.1).collect(),
                    partial_sum: rows.iter().map(|r| r.2).collect(),
                },
            )?;
            path
        }
    };
    Ok(Outcome::ok(format!("weights: {count} {kind} weights of order {alpha} -> {}", path.display())))
}

/// Closed-form sample functions for `fracderiv` without an input file.
pub fn sample_function(name: &str, grid: &Grid) -> CliResult<Field> {
    let f: fn(f64) -> f64 = match name {
        "one" => |_| 1.0,
        "x" => |x| x,
        "sin" => f64::sin,
        "cos" => f64::cos,
        "exp" => f64::exp,
        _ => return Err(CliError::usage(format!("unknown function '{name}' (one, x, sin, cos, exp)"))),
    };
    Ok(Field::sample_scalar(grid, |x| x.iter().map(|&t| f(t)).product())?)
}

pub struct FracDerivArgs {
    pub alpha: f64,
    pub kind: OpKind,
    pub axis: usize,
    pub component: usize,
    pub field: Option<PathBuf>,
    pub function: Option<String>,
    pub grid: GridSpec,
}

pub fn fracderiv(cfg: &RunConfig, args: FracDerivArgs) -> CliResult<Outcome> {
    let field = match (&args.field, &args.function) {
        (Some(p), None) => read_field(p)?,
        (None, Some(name)) => sample_function(name, &args.grid.build()?)?,
        _ => return Err(CliError::usage("give exactly one of --field or --function")),
    };
    let op = FracOp::for_grid(args.kind, args.alpha, args.axis, field.grid())?;
    let out = op.apply_axis(&field, args.component)?;
    cfg.prepare()?;
    let path = write_field(&cfg.output_dir, "fracderiv", &out, cfg.format)?;
    Ok(Outcome::ok(format!(
        "fracderiv: {:?} of order {} along axis {}, max |value| {:.6e} -> {}",
        args.kind,
        args.alpha,
        args.axis,
        out.max_abs(),
        path.display()
    )))
}

pub fn verify(cfg: &RunConfig, suite: Suite) -> CliResult<Outcome> {
    let report = verify::run(suite, cfg.seed)?;
    cfg.prepare()?;
    let path = cfg.path(&format!("verify-{}.json", suite.name()));
    write_json(&path, &report)?;
    let failed: Vec<String> = report.failures().map(|c| c.name.clone()).collect();
    let summary = format!(
        "verify {}: {}/{} cases passed -> {}",
        suite.name(),
        report.cases.len() - failed.len(),
        report.cases.len(),
        path.display()
    );
    Ok(Outcome::check(summary, report.passed, || format!("verify {} failed: {}", suite.name(), failed.join("; "))))
}

#[derive(Debug, Serialize)]
struct SolveReport {
    kind: String,
    grid: GridSpec,
    alpha: Vec<f64>,
    method: String,
    iterations: usize,
    converged: bool,
    tol: f64,
    linear_residual: f64,
    residual_norm: f64,
    condition_estimate: Option<f64>,
    near_singular: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_seconds: Option<f64>,
}

pub fn solve(cfg: &RunConfig, spec_path: &Path) -> CliResult<Outcome> {
    let start = Instant::now();
    let r = load(spec_path)?;
    let out = solve_with(&r.problem, r.spec.tol, r.spec.max_iter, r.method)?;
    cfg.prepare()?;
    // residual and noether read the JSON copy back
    let mut field_path = write_field(&cfg.output_dir, "solution", &out.u, Format::Json)?;
    if cfg.format == Format::Csv {
        field_path = write_field(&cfg.output_dir, "solution", &out.u, Format::Csv)?;
    }
    let report = SolveReport {
        kind: r.problem.kind().name().into(),
        grid: GridSpec::of(r.problem.grid()),
        alpha: r.problem.order().alpha().to_vec(),
        method: out.method.clone(),
        iterations: out.iterations,
        converged: out.converged,
        tol: r.spec.tol,
        linear_residual: out.linear_residual,
        residual_norm: out.residual_norm,
        condition_estimate: out.condition_estimate,
        near_singular: out.near_singular,
        wall_seconds: cfg.wall(start),
    };
    write_json(&cfg.path("solve-report.json"), &report)?;
    let mut summary = format!(
        "solve {}: {} in {} iterations, linear residual {:.3e}, residual norm {:.3e}, {:.2}s -> {}",
        report.kind,
        report.method,
        report.iterations,
        report.linear_residual,
        report.residual_norm,
        start.elapsed().as_secs_f64(),
        field_path.display()
    );
    if out.near_singular {
        summary.push_str(" [near-singular system]");
    }
    Ok(Outcome::check(summary, out.converged, || {
        format!("solver did not reach tol {} within {} iterations", r.spec.tol, r.spec.max_iter)
    }))
}

fn field_for(cfg: &RunConfig, given: &Option<PathBuf>, grid: &Grid) -> CliResult<Field> {
    let path = given.clone().unwrap_or_else(|| cfg.path(&format!("solution.{}", Format::Json.extension())));
    let u = read_field(&path)?;
    if u.grid() != grid || u.components() != 1 {
        return Err(CliError::usage(format!("{} does not match the spec grid", path.display())));
    }
    Ok(u)
}

/// Headroom between the linear residual bound and the recomputed residual.
pub const RESIDUAL_FACTOR: f64 = 10.0;

#[derive(Debug, Serialize)]
struct ResidualReport {
    interior_norm: f64,
    tol: f64,
    /// Euclidean norm of the lifted right-hand side, at least 1.
    rhs_scale: f64,
    bound: f64,
    passed: bool,
}

pub fn residual(cfg: &RunConfig, spec_path: &Path, field: &Option<PathBuf>) -> CliResult<Outcome> {
    let r = load(spec_path)?;
    let p = &r.problem;
    let u = field_for(cfg, field, p.grid())?;
    let density = p.density()?;
    let order = p.effective_order()?;
    let res = el_residual(density.as_ref(), &order, &u)?;

    // R(phi_b) = M phi_b - f is minus the right-hand side the solver saw
    let mut lifted = p.dirichlet().clone();
    for n in p.grid().interior_nodes() {
        lifted.values_mut()[n] = 0.0;
    }
    let rb = el_residual(density.as_ref(), &order, &lifted)?.field;
    let rhs = p.grid().interior_nodes().iter().map(|&n| rb.values()[n].powi(2)).sum::<f64>().sqrt();
    let rhs_scale = rhs.max(1.0);
    let bound = RESIDUAL_FACTOR * r.spec.tol * rhs_scale;
    let report = ResidualReport {
        interior_norm: res.interior_norm,
        tol: r.spec.tol,
        rhs_scale,
        bound,
        passed: res.interior_norm <= bound,
    };
    cfg.prepare()?;
    let path = write_field(&cfg.output_dir, "residual", &res.field, cfg.format)?;
    write_json(&cfg.path("residual-report.json"), &report)?;
    let summary =
        format!("residual: interior norm {:.3e} (bound {:.3e}) -> {}", report.interior_norm, bound, path.display());
    Ok(Outcome::check(summary, report.passed, || {
        format!("residual {:.3e} exceeds bound {:.3e}", report.interior_norm, bound)
    }))
}

#[derive(Debug, Serialize)]
struct GradTrial {
    quotient: f64,
    richardson: f64,
    pairing: f64,
    defect: f64,
    tolerance: f64,
    passed: bool,
}

#[derive(Debug, Serialize)]
struct GradReport {
    eps: f64,
    seed: u64,
    trials: Vec<GradTrial>,
    passed: bool,
}

pub fn gradcheck(
    cfg: &RunConfig,
    spec_path: &Path,
    field: &Option<PathBuf>,
    trials: usize,
    eps: f64,
) -> CliResult<Outcome> {
    let r = load(spec_path)?;
    let p = &r.problem;
    let grid = p.grid();
    let density = p.density()?;
    let order = p.effective_order()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let fixed = match field {
        Some(_) => Some(field_for(cfg, field, grid)?),
        None => None,
    };
    let mut random = |pinned: bool| -> CliResult<Field> {
        let v = (0..grid.len())
            .map(|n| if pinned && grid.is_boundary(n) { 0.0 } else { rng.gen_range(-1.0..1.0) })
            .collect();
        Ok(Field::from_values(grid, 1, v)?)
    };
    let mut out = Vec::with_capacity(trials);
    for _ in 0..trials {
        let u = match &fixed {
            Some(u) => u.clone(),
            None => random(false)?,
        };
        let h = random(true)?;
        let g = gradient_check(density.as_ref(), &order, &u, &h, eps)?;
        out.push(GradTrial {
            quotient: g.quotient,
            richardson: g.richardson,
            pairing: g.pairing,
            defect: g.defect,
            tolerance: g.tolerance,
            passed: g.passed,
        });
    }
    let passed = out.iter().all(|t| t.passed);
    let failed = out.iter().filter(|t| !t.passed).count();
    cfg.prepare()?;
    let path = cfg.path("gradcheck-report.json");
    write_json(&path, &GradReport { eps, seed: cfg.seed, trials: out, passed })?;
    let summary = format!("gradcheck: {}/{} trials passed at eps {eps} -> {}", trials - failed, trials, path.display());
    Ok(Outcome::check(summary, passed, || format!("{failed} gradient trials exceeded tolerance")))
}

pub fn generator(name: &str, r: &Resolved) -> CliResult<Generator> {
    let grid = r.problem.grid();
    if name == "paper-example" || name == "power-kernel" {
        return Ok(Generator::power_kernel(grid, &r.problem.effective_order()?)?);
    }
    if name == "constant" {
        return Ok(Generator::constant(grid, 1, 1.0)?);
    }
    if let Some(v) = name.strip_prefix("constant:") {
        let v: f64 = v.parse().map_err(|_| CliError::usage(format!("bad constant generator '{name}'")))?;
        return Ok(Generator::constant(grid, 1, v)?);
    }
    if let Some(p) = name.strip_prefix("file:") {
        let xi = read_field(Path::new(p))?;
        if xi.grid() != grid {
            return Err(CliError::usage(format!("generator file {p} is on a different grid")));
        }
        return Ok(Generator::new(xi, "file"));
    }
    Err(CliError::usage(format!("unknown generator '{name}' (paper-example, power-kernel, constant[:v], file:<path>)")))
}

#[derive(Debug, Serialize)]
struct NoetherFileReport {
    generator: String,
    identity_defect: f64,
    identity_tolerance: f64,
    identity_holds: bool,
    conservation_norm: f64,
    invariance_norm: f64,
    residual_norm: f64,
    generator_norm: f64,
    corollary_bound: f64,
    bound_holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    classical_divergence_defect: Option<f64>,
}

pub fn noether(cfg: &RunConfig, spec_path: &Path, field: &Option<PathBuf>, gen: &str) -> CliResult<Outcome> {
    let r = load(spec_path)?;
    let p = &r.problem;
    let u = field_for(cfg, field, p.grid())?;
    let density = p.density()?;
    let order = p.effective_order()?;
    let xi = generator(gen, &r)?;
    let rep = noether_sum(density.as_ref(), &order, &u, &xi)?;
    let classical_divergence_defect = if order.is_classical() {
        let div = classical_current_divergence(density.as_ref(), &order, &u, &xi)?;
        let d = p
            .grid()
            .interior_nodes()
            .iter()
            .map(|&n| (div.values()[n] - rep.noether_sum.values()[n]).abs())
            .fold(0.0, f64::max);
        Some(d)
    } else {
        None
    };
    let bound = rep.corollary_bound();
    let report = NoetherFileReport {
        generator: xi.label.clone(),
        identity_defect: rep.identity_defect,
        identity_tolerance: rep.identity_tolerance(),
        identity_holds: rep.identity_holds(),
        conservation_norm: rep.conservation_norm,
        invariance_norm: rep.invariance_norm,
        residual_norm: rep.residual_norm,
        generator_norm: rep.generator_norm,
        corollary_bound: bound,
        bound_holds: rep.conservation_norm <= bound + rep.identity_tolerance(),
        classical_divergence_defect,
    };
    cfg.prepare()?;
    write_field(&cfg.output_dir, "noether-sum", &rep.noether_sum, cfg.format)?;
    let path = cfg.path("noether-report.json");
    write_json(&path, &report)?;
    let summary = format!(
        "noether {}: conservation norm {:.3e}, bound {:.3e}, identity defect {:.3e} -> {}",
        report.generator,
        report.conservation_norm,
        bound,
        report.identity_defect,
        path.display()
    );
    let passed = report.identity_holds && report.bound_holds;
    Ok(Outcome::check(summary, passed, || {
        format!(
            "identity holds: {}, conservation norm {:.3e} vs bound {:.3e}",
            report.identity_holds, report.conservation_norm, bound
        )
    }))
}
