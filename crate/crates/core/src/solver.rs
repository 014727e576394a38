//! Dirichlet boundary-value solves of the quadratic Poisson and wave systems.
//!
//! Both built-in densities are quadratic, so the Euler-Lagrange residual is
//! affine: `R(u) = M u - f` with
//!
//! * Poisson: `M = sum_i A_i^T A_i`
//! * wave:    `M = rho A_0^T A_0 - k sum_{i>=1} A_i^T A_i`
//!
//! where `A_i` is the left derivative along axis `i` over the full grid.
//! Boundary nodes hold the Dirichlet data; only interior nodes are unknowns
//! and the boundary contribution is lifted into the right-hand side.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::fracops::{FracOp, FracOrder};
use crate::grid::{Field, Grid};
use crate::lagrangian::{builtin_poisson, builtin_wave, LagrangianDensity, MaterialParams};
use crate::linalg::{conjugate_gradient, minres, norm2, DenseLu};
use crate::variational::el_residual;
use crate::{Error, Result};

/// Largest interior system the dense direct path will factor.
pub const DENSE_CAP: usize = 5_000;

/// Pivot ratio above which a dense solve is flagged as near-singular.
pub const NEAR_SINGULAR_RATIO: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Poisson,
    WaveFracSpace,
    WaveClassicalSpace,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Poisson => "poisson",
            ProblemKind::WaveFracSpace => "wave-frac-space",
            ProblemKind::WaveClassicalSpace => "wave-classical-space",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "poisson" => Some(ProblemKind::Poisson),
            "wave-frac-space" => Some(ProblemKind::WaveFracSpace),
            "wave-classical-space" => Some(ProblemKind::WaveClassicalSpace),
            _ => None,
        }
    }

    pub fn is_wave(self) -> bool {
        !matches!(self, ProblemKind::Poisson)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// CG for Poisson; dense LU for wave up to [`DENSE_CAP`], MINRES above.
    Auto,
    Cg,
    Minres,
    DenseLu,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Auto => "auto",
            Method::Cg => "cg",
            Method::Minres => "minres",
            Method::DenseLu => "dense-lu",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "auto" => Some(Method::Auto),
            "cg" => Some(Method::Cg),
            "minres" => Some(Method::Minres),
            "dense-lu" | "dense" => Some(Method::DenseLu),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProblem {
    kind: ProblemKind,
    grid: Grid,
    order: FracOrder,
    params: Option<MaterialParams>,
    source: Field,
    dirichlet: Field,
}

fn check_scalar(field: &Field, grid: &Grid) -> Result<()> {
    field.check_same_grid(grid)?;
    if field.components() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: field.components() });
    }
    Ok(())
}

impl LinearProblem {
    pub fn poisson(order: FracOrder, source: Field, dirichlet: Field) -> Result<Self> {
        let grid = source.grid().clone();
        order.check_dims(&grid)?;
        check_scalar(&source, &grid)?;
        check_scalar(&dirichlet, &grid)?;
        Ok(LinearProblem { kind: ProblemKind::Poisson, grid, order, params: None, source, dirichlet })
    }

    /// Wave problem with zero forcing; see [`LinearProblem::with_source`].
    pub fn wave(kind: ProblemKind, order: FracOrder, params: MaterialParams, dirichlet: Field) -> Result<Self> {
        if !kind.is_wave() {
            return Err(Error::InvalidProblem("wave constructor needs a wave kind"));
        }
        let grid = dirichlet.grid().clone();
        order.check_dims(&grid)?;
        if grid.dims() < 2 {
            return Err(Error::InvalidProblem("wave problem needs a time axis and at least one space axis"));
        }
        check_scalar(&dirichlet, &grid)?;
        let source = Field::zeros(&grid, 1);
        Ok(LinearProblem { kind, grid, order, params: Some(params), source, dirichlet })
    }

    pub fn with_source(mut self, source: Field) -> Result<Self> {
        check_scalar(&source, &self.grid)?;
        self.source = source;
        Ok(self)
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn order(&self) -> &FracOrder {
        &self.order
    }

    pub fn params(&self) -> Option<MaterialParams> {
        self.params
    }

    pub fn source(&self) -> &Field {
        &self.source
    }

    pub fn dirichlet(&self) -> &Field {
        &self.dirichlet
    }

    /// Orders actually used by the operator (classical-space wave pins space to 1).
    pub fn effective_order(&self) -> Result<FracOrder> {
        effective_order(self.kind, &self.order)
    }

    /// The density whose Euler-Lagrange residual this problem zeroes.
    pub fn density(&self) -> Result<alloc::boxed::Box<dyn LagrangianDensity>> {
        Ok(match self.kind {
            ProblemKind::Poisson => alloc::boxed::Box::new(builtin_poisson(&self.source)?),
            kind => {
                let params = self.params.ok_or(Error::InvalidProblem("wave problem needs material parameters"))?;
                let d = builtin_wave(params, kind == ProblemKind::WaveFracSpace, self.grid.dims())?;
                alloc::boxed::Box::new(d.with_source(&self.source)?)
            }
        })
    }
}

fn effective_order(kind: ProblemKind, order: &FracOrder) -> Result<FracOrder> {
    if kind != ProblemKind::WaveClassicalSpace {
        return Ok(order.clone());
    }
    let mut alpha = order.alpha().to_vec();
    alpha.iter_mut().skip(1).for_each(|a| *a = 1.0);
    FracOrder::new(alpha)
}

fn coefficients(kind: ProblemKind, params: Option<MaterialParams>, dims: usize) -> Result<Vec<f64>> {
    if kind == ProblemKind::Poisson {
        return Ok(vec![1.0; dims]);
    }
    let p = params.ok_or(Error::InvalidProblem("wave problem needs material parameters"))?;
    Ok((0..dims).map(|i| if i == 0 { p.rho() } else { -p.k() }).collect())
}

/// The linear operator `M` of a problem, on full fields or interior unknowns.
#[derive(Debug, Clone)]
pub struct InteriorOperator {
    grid: Grid,
    ops: Vec<FracOp>,
    coeffs: Vec<f64>,
    interior: Vec<usize>,
}

pub fn assemble_matvec(problem: &LinearProblem) -> Result<InteriorOperator> {
    InteriorOperator::new(problem.kind, problem.params, &problem.order, &problem.grid)
}

impl InteriorOperator {
    pub fn new(kind: ProblemKind, params: Option<MaterialParams>, order: &FracOrder, grid: &Grid) -> Result<Self> {
        order.check_dims(grid)?;
        let ops = effective_order(kind, order)?.left_derivatives(grid)?;
        let coeffs = coefficients(kind, params, grid.dims())?;
        Ok(InteriorOperator { grid: grid.clone(), ops, coeffs, interior: grid.interior_nodes() })
    }

    /// Number of interior unknowns.
    pub fn len(&self) -> usize {
        self.interior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interior.is_empty()
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    /// `M u` over every node of the grid.
    pub fn apply_full(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.grid.len()];
        for (op, c) in self.ops.iter().zip(&self.coeffs) {
            let du = op.apply_values(&self.grid, u)?;
            let back = op.adjoint().apply_values(&self.grid, &du)?;
            out.iter_mut().zip(back).for_each(|(o, b)| *o += c * b);
        }
        Ok(out)
    }

    /// `M v` restricted to interior rows, for `v` supported on the interior.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let full = self.embed(v);
        let out = self.apply_full(&full).expect("operator built for this grid");
        self.restrict(&out)
    }

    pub fn embed(&self, v: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.grid.len()];
        for (&node, x) in self.interior.iter().zip(v) {
            full[node] = *x;
        }
        full
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.interior.iter().map(|&n| full[n]).collect()
    }

    /// Row-major interior matrix built from the 1D factors `(A_i^T A_i)_int`.
    pub fn dense(&self) -> Result<Vec<f64>> {
        let n = self.len();
        if n > DENSE_CAP {
            return Err(Error::DenseCapExceeded { unknowns: n, cap: DENSE_CAP });
        }
        let dims = self.grid.dims();
        let inner: Vec<usize> = self.grid.nodes().iter().map(|&m| m - 2).collect();
        let mut istride = vec![1usize; dims];
        for i in (0..dims.saturating_sub(1)).rev() {
            istride[i] = istride[i + 1] * inner[i + 1];
        }
        let factors: Vec<Vec<f64>> = self.ops.iter().map(gram_interior).collect();

        let mut m = vec![0.0; n * n];
        for p in 0..n {
            let row = &mut m[p * n..(p + 1) * n];
            for i in 0..dims {
                let pi = (p / istride[i]) % inner[i];
                let base = p - pi * istride[i];
                let b = &factors[i][pi * inner[i]..(pi + 1) * inner[i]];
                for (qi, bv) in b.iter().enumerate() {
                    row[base + qi * istride[i]] += self.coeffs[i] * bv;
                }
            }
        }
        Ok(m)
    }
}

/// `(A^T A)` on the interior indices of one full line, row-major.
fn gram_interior(op: &FracOp) -> Vec<f64> {
    let len = op.weights().len();
    let inner = len - 2;
    let s = op.scale();
    // column j of A: A[r][j] = s w_{r-j} for r >= j
    let w = op.weights();
    let mut g = vec![0.0; inner * inner];
    for a in 0..inner {
        for b in a..inner {
            let (ja, jb) = (a + 1, b + 1);
            let v: f64 = (jb..len).map(|r| w[r - ja] * w[r - jb]).sum::<f64>() * s * s;
            g[a * inner + b] = v;
            g[b * inner + a] = v;
        }
    }
    g
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub u: Field,
    /// Interior max-norm of the independently recomputed Euler-Lagrange residual.
    pub residual_norm: f64,
    pub iterations: usize,
    pub method: String,
    pub converged: bool,
    /// `||b - M x|| / ||b||` on the interior system.
    pub linear_residual: f64,
    /// Pivot ratio of the dense factorization, when one was used.
    pub condition_estimate: Option<f64>,
    pub near_singular: bool,
}

/// Solves `M u = f` on interior nodes with `u = phi` on the boundary.
///
/// Non-convergence is not an error: the best iterate is returned with
/// `converged = false`.
pub fn solve(problem: &LinearProblem, tol: f64, max_iter: usize) -> Result<SolveResult> {
    solve_with(problem, tol, max_iter, Method::Auto)
}

pub fn solve_with(problem: &LinearProblem, tol: f64, max_iter: usize, method: Method) -> Result<SolveResult> {
    if tol.is_nan() || tol <= 0.0 || !tol.is_finite() {
        return Err(Error::InvalidTolerance(tol));
    }
    let op = assemble_matvec(problem)?;
    let grid = &problem.grid;

    let mut lift = problem.dirichlet.values().to_vec();
    for &n in op.interior() {
        lift[n] = 0.0;
    }
    let m_lift = op.apply_full(&lift)?;
    let b: Vec<f64> = op.interior().iter().map(|&n| problem.source.values()[n] - m_lift[n]).collect();

    let method = match method {
        Method::Auto if problem.kind == ProblemKind::Poisson => Method::Cg,
        Method::Auto if op.len() <= DENSE_CAP => Method::DenseLu,
        Method::Auto => Method::Minres,
        m => m,
    };

    let (x, iterations, converged, linear_residual, condition_estimate) = match method {
        Method::Cg => {
            let out = conjugate_gradient(|v| op.apply(v), &b, tol, max_iter);
            (out.x, out.iterations, out.converged, out.relative_residual, None)
        }
        Method::Minres => {
            let out = minres(|v| op.apply(v), &b, tol, max_iter);
            (out.x, out.iterations, out.converged, out.relative_residual, None)
        }
        Method::DenseLu | Method::Auto => {
            let lu = DenseLu::factor(op.len(), op.dense()?)?;
            let x = lu.solve(&b);
            let r: Vec<f64> = op.apply(&x).iter().zip(&b).map(|(a, bi)| bi - a).collect();
            let bn = norm2(&b);
            let rel = if bn == 0.0 { norm2(&r) } else { norm2(&r) / bn };
            (x, 1, rel <= tol, rel, Some(lu.pivot_ratio))
        }
    };

    for (&n, v) in op.interior().iter().zip(&x) {
        lift[n] = *v;
    }
    let u = Field::from_values(grid, 1, lift)?;
    let density = problem.density()?;
    let residual_norm = el_residual(density.as_ref(), &problem.order_for_residual()?, &u)?.interior_norm;
    let near_singular = condition_estimate.is_some_and(|c| c > NEAR_SINGULAR_RATIO);
    Ok(SolveResult {
        u,
        residual_norm,
        iterations,
        method: String::from(method.name()),
        converged,
        linear_residual,
        condition_estimate,
        near_singular,
    })
}

impl LinearProblem {
    /// Order handed to the density; the wave density pins classical space itself.
    fn order_for_residual(&self) -> Result<FracOrder> {
        self.effective_order()
    }
}

/// `f := M u_target` at every node, so `u_target` solves the problem exactly.
pub fn manufacture_source(
    kind: ProblemKind,
    order: &FracOrder,
    params: Option<MaterialParams>,
    u_target: &Field,
) -> Result<Field> {
    check_scalar(u_target, u_target.grid())?;
    let op = InteriorOperator::new(kind, params, order, u_target.grid())?;
    let f = op.apply_full(u_target.values())?;
    Field::from_values(u_target.grid(), 1, f)
}
