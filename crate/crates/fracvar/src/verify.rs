//! Seeded property batteries behind `fracvar verify`.

use fracvar_core::fracops::{gamma, FracOp, OpKind};
use fracvar_core::lagrangian::{builtin_poisson, builtin_wave, LagrangianDensity};
use fracvar_core::noether::noether_sum;
use fracvar_core::variational::gradient_check;
use fracvar_core::{Field, FracOrder, Generator, Grid, MaterialParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::CliResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    /// Discrete integration by parts: right operators are transposes of left ones.
    Ibp,
    /// Derivative and integral of 1 against closed forms, with convergence order.
    Accuracy,
    /// Order 0.999 against the classical derivative; order 1 against the backward difference.
    Limit,
    /// Left derivative of the power kernel (x - a)^(alpha - 1).
    Kernel,
    /// Exact discrete Noether identity on random fields.
    NoetherIdentity,
    /// Action difference quotients against the Euler-Lagrange pairing.
    Gradcheck,
}

impl Suite {
    pub const ALL: [Suite; 6] =
        [Suite::Ibp, Suite::Accuracy, Suite::Limit, Suite::Kernel, Suite::NoetherIdentity, Suite::Gradcheck];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Ibp => "ibp",
            Suite::Accuracy => "accuracy",
            Suite::Limit => "limit",
            Suite::Kernel => "kernel",
            Suite::NoetherIdentity => "noether-identity",
            Suite::Gradcheck => "gradcheck",
        }
    }
}

/// One gated check: `measured <comparison> tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Case {
    pub name: String,
    pub measured: f64,
    pub comparison: &'static str,
    pub tolerance: f64,
    pub passed: bool,
}

impl Case {
    pub fn at_most(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Case { name: name.into(), measured, comparison: "<=", tolerance, passed: measured <= tolerance }
    }

    pub fn below(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Case { name: name.into(), measured, comparison: "<", tolerance, passed: measured < tolerance }
    }

    pub fn at_least(name: impl Into<String>, measured: f64, minimum: f64) -> Self {
        Case { name: name.into(), measured, comparison: ">=", tolerance: minimum, passed: measured >= minimum }
    }
}

/// Reported but not gated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub passed: bool,
    pub cases: Vec<Case>,
    pub diagnostics: Vec<Diagnostic>,
}

impl SuiteReport {
    fn new(suite: Suite, seed: u64, cases: Vec<Case>, diagnostics: Vec<Diagnostic>) -> Self {
        let passed = cases.iter().all(|c| c.passed);
        SuiteReport { suite: suite.name().into(), seed, passed, cases, diagnostics }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Case> {
        self.cases.iter().filter(|c| !c.passed)
    }
}

pub fn run(suite: Suite, seed: u64) -> CliResult<SuiteReport> {
    match suite {
        Suite::Ibp => ibp(seed),
        Suite::Accuracy => accuracy(),
        Suite::Limit => limit(),
        Suite::Kernel => kernel(),
        Suite::NoetherIdentity => noether_identity(seed),
        Suite::Gradcheck => gradcheck(seed),
    }
}

fn line(n: usize) -> CliResult<Grid> {
    Ok(Grid::new(&[0.0], &[1.0], &[n])?)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn random_pinned(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|i| if i == 0 || i + 1 == n { 0.0 } else { rng.gen_range(-1.0..1.0) }).collect()
}

pub const IBP_RTOL: f64 = 1e-12;

/// `|<g, L f> - <f, R g>| / (|<g, L f>| + 1)` over 50 random pairs per case.
fn ibp(seed: u64) -> CliResult<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::new();
    for n in [64, 512] {
        let grid = line(n)?;
        let h = grid.spacing()[0];
        for alpha in [0.25, 0.5, 0.75, 1.0] {
            for kind in [OpKind::LeftDerivative, OpKind::LeftIntegral] {
                let left = FracOp::for_grid(kind, alpha, 0, &grid)?;
                let right = left.adjoint();
                let mut worst = 0.0f64;
                for _ in 0..50 {
                    let f = random_pinned(&mut rng, n);
                    let g = random_pinned(&mut rng, n);
                    let a = h * dot(&g, &left.apply_values(&grid, &f)?);
                    let b = h * dot(&f, &right.apply_values(&grid, &g)?);
                    worst = worst.max((a - b).abs() / (a.abs() + 1.0));
                }
                let what = if kind.is_derivative() { "derivative" } else { "integral" };
                cases.push(Case::at_most(format!("{what} N={n} alpha={alpha}"), worst, IBP_RTOL));
            }
        }
    }
    Ok(SuiteReport::new(Suite::Ibp, seed, cases, Vec::new()))
}

pub const ACCURACY_NODES: [usize; 4] = [129, 257, 513, 1025];
pub const ACCURACY_POINTS: [f64; 3] = [0.25, 0.5, 1.0];

/// Least-squares slope of `log err` against `log h`.
pub fn fitted_order(h: &[f64], err: &[f64]) -> f64 {
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Relative errors of the operator applied to `f = 1`, per point and resolution.
pub fn accuracy_errors(kind: OpKind, alpha: f64) -> CliResult<Vec<Vec<f64>>> {
    let exact = |x: f64| {
        if kind.is_derivative() {
            x.powf(-alpha) / gamma(1.0 - alpha)
        } else {
            x.powf(alpha) / gamma(1.0 + alpha)
        }
    };
    let mut errs = vec![Vec::new(); ACCURACY_POINTS.len()];
    for n in ACCURACY_NODES {
        let grid = line(n)?;
        let out = FracOp::for_grid(kind, alpha, 0, &grid)?.apply_values(&grid, &vec![1.0; n])?;
        for (p, &x) in ACCURACY_POINTS.iter().enumerate() {
            let j = (x * (n - 1) as f64).round() as usize;
            errs[p].push((out[j] - exact(x)).abs() / exact(x).abs());
        }
    }
    Ok(errs)
}

fn accuracy() -> CliResult<SuiteReport> {
    let alpha = 0.5;
    let mut cases = Vec::new();
    let mut diagnostics = Vec::new();
    let h: Vec<f64> = ACCURACY_NODES.iter().map(|&n| 1.0 / (n - 1) as f64).collect();
    for kind in [OpKind::LeftDerivative, OpKind::LeftIntegral] {
        let what = if kind.is_derivative() { "derivative" } else { "integral" };
        for (p, errs) in accuracy_errors(kind, alpha)?.iter().enumerate() {
            let x = ACCURACY_POINTS[p];
            for (n, e) in ACCURACY_NODES.iter().zip(errs) {
                diagnostics.push(Diagnostic { name: format!("{what} x={x} N={n} rel_error"), value: *e });
            }
            cases.push(Case::at_most(format!("{what} x={x} N=1025 rel_error"), errs[3], 1e-2));
            cases.push(Case::at_least(format!("{what} x={x} order"), fitted_order(&h, errs), 0.9));
        }
    }
    Ok(SuiteReport::new(Suite::Accuracy, 0, cases, diagnostics))
}

fn limit() -> CliResult<SuiteReport> {
    let n = 2049;
    let grid = line(n)?;
    let f: Vec<f64> = (0..n).map(|j| grid.coordinate(0, j).sin()).collect();
    let near = FracOp::for_grid(OpKind::LeftDerivative, 0.999, 0, &grid)?.apply_values(&grid, &f)?;
    let dev = (1..n - 1).map(|j| (near[j] - grid.coordinate(0, j).cos()).abs()).fold(0.0, f64::max);

    let h = grid.spacing()[0];
    let exact = FracOp::for_grid(OpKind::LeftDerivative, 1.0, 0, &grid)?.apply_values(&grid, &f)?;
    let mismatches = (0..n)
        .filter(|&j| {
            let backward = if j == 0 { f[0] / h } else { (f[j] - f[j - 1]) / h };
            backward.to_bits() != exact[j].to_bits()
        })
        .count();
    let cases = vec![
        Case::at_most("alpha=0.999 N=2049 interior deviation from cos", dev, 2e-2),
        Case::at_most("alpha=1 bitwise mismatches against backward difference", mismatches as f64, 0.0),
    ];
    Ok(SuiteReport::new(Suite::Limit, 0, cases, Vec::new()))
}

pub const KERNEL_NODES: [usize; 4] = [65, 129, 257, 513];

/// Left derivative of `x^(alpha - 1)` on [0, 1] with the singular node set to 0.
pub fn kernel_image(alpha: f64, n: usize) -> CliResult<(Grid, Vec<f64>)> {
    let grid = line(n)?;
    let f: Vec<f64> = (0..n).map(|j| if j == 0 { 0.0 } else { grid.coordinate(0, j).powf(alpha - 1.0) }).collect();
    let out = FracOp::for_grid(OpKind::LeftDerivative, alpha, 0, &grid)?.apply_values(&grid, &f)?;
    Ok((grid, out))
}

fn kernel() -> CliResult<SuiteReport> {
    let mut cases = Vec::new();
    let mut diagnostics = Vec::new();
    for alpha in [0.5, 0.75] {
        let mut norms = Vec::new();
        let mut mid = Vec::new();
        for n in KERNEL_NODES {
            let (_, out) = kernel_image(alpha, n)?;
            let norm = out[1..n - 1].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            norms.push(norm);
            mid.push(out[(n - 1) / 2].abs());
            diagnostics.push(Diagnostic { name: format!("alpha={alpha} N={n} interior max"), value: norm });
            diagnostics
                .push(Diagnostic { name: format!("alpha={alpha} N={n} value at x=0.5"), value: out[(n - 1) / 2] });
        }
        let worst_step = norms.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
        cases.push(Case::below(format!("alpha={alpha} interior max step ratio (monotone decrease)"), worst_step, 1.0));
        cases.push(Case::at_most(format!("alpha={alpha} interior max final/initial"), norms[3] / norms[0], 0.1));
        diagnostics.push(Diagnostic { name: format!("alpha={alpha} x=0.5 final/initial"), value: mid[3] / mid[0] });
    }
    Ok(SuiteReport::new(Suite::Kernel, 0, cases, diagnostics))
}

fn random_field(rng: &mut ChaCha8Rng, grid: &Grid, pinned: bool) -> CliResult<Field> {
    let values =
        (0..grid.len()).map(|n| if pinned && grid.is_boundary(n) { 0.0 } else { rng.gen_range(-1.0..1.0) }).collect();
    Ok(Field::from_values(grid, 1, values)?)
}

fn cube() -> CliResult<Grid> {
    Ok(Grid::new(&[0.0; 3], &[1.0; 3], &[9; 3])?)
}

/// The two built-in densities on `grid`, with a seeded random Poisson source.
fn densities(rng: &mut ChaCha8Rng, grid: &Grid) -> CliResult<Vec<Box<dyn LagrangianDensity>>> {
    let source = random_field(rng, grid, false)?;
    let wave = builtin_wave(MaterialParams::new(1.0, 1.0)?, true, grid.dims())?;
    Ok(vec![Box::new(builtin_poisson(&source)?), Box::new(wave)])
}

pub const TRIALS: usize = 20;

fn noether_identity(seed: u64) -> CliResult<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = cube()?;
    let order = FracOrder::new(vec![0.75, 0.6, 0.9])?;
    let mut cases = Vec::new();
    for density in densities(&mut rng, &grid)? {
        let mut worst = 0.0f64;
        for _ in 0..TRIALS {
            let u = random_field(&mut rng, &grid, false)?;
            let xi = Generator::new(random_field(&mut rng, &grid, false)?, "random");
            let r = noether_sum(density.as_ref(), &order, &u, &xi)?;
            worst = worst.max(r.identity_defect / r.scale);
        }
        cases.push(Case::at_most(format!("{} identity defect / scale", density.label()), worst, 1e-10));
    }
    Ok(SuiteReport::new(Suite::NoetherIdentity, seed, cases, Vec::new()))
}

fn gradcheck(seed: u64) -> CliResult<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = cube()?;
    let order = FracOrder::new(vec![0.75, 0.6, 0.9])?;
    let mut cases = Vec::new();
    for density in densities(&mut rng, &grid)? {
        let mut worst = 0.0f64;
        let mut all = true;
        for _ in 0..TRIALS {
            let u = random_field(&mut rng, &grid, false)?;
            let h = random_field(&mut rng, &grid, true)?;
            let r = gradient_check(density.as_ref(), &order, &u, &h, 1e-4)?;
            worst = worst.max(r.defect / r.scale);
            all &= r.passed;
        }
        let mut case = Case::at_most(format!("{} defect / scale at eps=1e-4", density.label()), worst, 1e-8);
        case.passed &= all;
        cases.push(case);
    }
    Ok(SuiteReport::new(Suite::Gradcheck, seed, cases, Vec::new()))
}
