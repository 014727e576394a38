//! Invariance residual, the bilinear operator `D^gamma`, and the fractional
//! conservation sum.
//!
//! With `P_ij = dL/dg_ij`, `L_i` the left derivative along axis `i` and `R_i`
//! its transpose, three nodewise fields are formed:
//!
//! * invariance residual `N1 = sum_j dL/du_j xi_j + sum_ij P_ij L_i xi_j`,
//! * Euler-Lagrange pairing `E = sum_j R_j xi_j`,
//! * conservation sum `S = sum_ij (P_ij L_i xi_j - xi_j R_i P_ij)`.
//!
//! `S = N1 - E` holds identically, for every field and generator. So along a
//! discrete extremal (`E ~ 0`) of an invariant functional (`N1 ~ 0`), the
//! conservation sum vanishes.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::fracops::{FracOp, FracOrder, OpKind};
use crate::grid::{Field, Grid};
use crate::lagrangian::{check_shapes, Jet, LagrangianDensity};
use crate::variational::{nodal_partials, residual_from_partials};
use crate::{Error, Result};

/// Relative tolerance of the exact discrete identity `S = N1 - E`.
pub const IDENTITY_RTOL: f64 = 1e-10;

/// Sampled infinitesimal generator `xi` of a one-parameter field transformation.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub xi: Field,
    pub label: String,
}

impl Generator {
    pub fn new(xi: Field, label: impl Into<String>) -> Self {
        Generator { xi, label: label.into() }
    }

    pub fn constant(grid: &Grid, components: usize, value: f64) -> Result<Self> {
        let xi = Field::sample(grid, components, |_, out| out.iter_mut().for_each(|v| *v = value))?;
        Ok(Generator::new(xi, "constant"))
    }

    /// `prod_i (x_i - a_i)^(alpha_i - 1)`, set to 0 where any factor is singular.
    ///
    /// Each factor lies in the kernel of the left derivative of its order, so
    /// the quadratic wave functional is invariant under this shift.
    pub fn power_kernel(grid: &Grid, order: &FracOrder) -> Result<Self> {
        order.check_dims(grid)?;
        let lower = grid.lower().to_vec();
        let alpha = order.alpha().to_vec();
        let xi = Field::sample_scalar(grid, |x| {
            let mut p = 1.0;
            for i in 0..x.len() {
                if alpha[i] == 1.0 {
                    continue;
                }
                let r = x[i] - lower[i];
                if r <= 0.0 {
                    return 0.0;
                }
                p *= libm::pow(r, alpha[i] - 1.0);
            }
            p
        })?;
        Ok(Generator::new(xi, "power-kernel"))
    }

    pub fn components(&self) -> usize {
        self.xi.components()
    }
}

fn check_pair(f: &Field, g: &Field) -> Result<()> {
    g.check_same_grid(f.grid())?;
    for x in [f, g] {
        if x.components() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: x.components() });
        }
    }
    Ok(())
}

/// Raw-slice form of `D^gamma(f, g) = f * Left(g) - g * Right(f)`.
fn d_op_values(left: &FracOp, grid: &Grid, f: &[f64], g: &[f64]) -> Result<Vec<f64>> {
    let lg = left.apply_values(grid, g)?;
    let rf = left.adjoint().apply_values(grid, f)?;
    Ok((0..grid.len()).map(|n| f[n] * lg[n] - g[n] * rf[n]).collect())
}

/// `D^gamma(f, g) = f * Left^gamma(g) - g * Right^gamma(f)` along `axis`.
pub fn d_op(gamma: f64, axis: usize, f: &Field, g: &Field) -> Result<Field> {
    check_pair(f, g)?;
    let grid = f.grid();
    let left = FracOp::for_grid(OpKind::LeftDerivative, gamma, axis, grid)?;
    Field::from_values(grid, 1, d_op_values(&left, grid, f.values(), g.values())?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoetherReport {
    /// `N1`: left side of the invariance condition.
    pub invariance_residual: Field,
    /// `S`: the fractional conservation sum.
    pub noether_sum: Field,
    /// `E = sum_j R_j xi_j`.
    pub el_pairing: Field,
    /// Max interior `|S - N1 + E|`.
    pub identity_defect: f64,
    /// Max interior sum of term magnitudes entering `N1`, `S` and `E`.
    pub scale: f64,
    /// Max interior `|S|`.
    pub conservation_norm: f64,
    /// Max interior `|N1|`.
    pub invariance_norm: f64,
    /// Max interior `|R|`.
    pub residual_norm: f64,
    /// Max interior `|xi|`.
    pub generator_norm: f64,
    /// Number of field components `m`.
    pub components: usize,
}

impl NoetherReport {
    pub fn identity_tolerance(&self) -> f64 {
        IDENTITY_RTOL * self.scale
    }

    pub fn identity_holds(&self) -> bool {
        self.identity_defect <= self.identity_tolerance()
    }

    /// `|S| <= |N1| + m |xi| |R|`, which the identity implies.
    pub fn corollary_bound(&self) -> f64 {
        self.invariance_norm + self.generator_norm * self.residual_norm * self.components as f64
    }
}

struct NoetherTerms {
    n1: Vec<f64>,
    s: Vec<f64>,
    e: Vec<f64>,
    scale: Vec<f64>,
    residual: Field,
}

fn noether_terms(
    density: &dyn LagrangianDensity,
    order: &FracOrder,
    u: &Field,
    xi: &Generator,
) -> Result<NoetherTerms> {
    check_shapes(density, order, u.grid(), u.components())?;
    xi.xi.check_same_grid(u.grid())?;
    if xi.components() != u.components() {
        return Err(Error::DimensionMismatch { expected: u.components(), found: xi.components() });
    }
    let grid = u.grid();
    let dims = grid.dims();
    let total = grid.len();
    let jet = Jet::new(density, order, u)?;
    let partials = nodal_partials(density, &jet);
    let residual = residual_from_partials(order, u, &partials)?;
    let lefts = order.left_derivatives(grid)?;

    let mut n1 = vec![0.0; total];
    let mut s = vec![0.0; total];
    let mut e = vec![0.0; total];
    let mut scale = vec![0.0; total];
    for j in 0..u.components() {
        let x = xi.xi.component(j);
        let r = residual.component(j);
        for n in 0..total {
            n1[n] += partials.du[j][n] * x[n];
            e[n] += r[n] * x[n];
            scale[n] += (partials.du[j][n] * x[n]).abs() + (r[n] * x[n]).abs();
        }
        for (i, left) in lefts.iter().enumerate() {
            let p = &partials.dg[j * dims + i];
            let lx = left.apply_values(grid, x)?;
            let rp = left.adjoint().apply_values(grid, p)?;
            let d = d_op_values(left, grid, p, x)?;
            for n in 0..total {
                let a = p[n] * lx[n];
                n1[n] += a;
                s[n] += d[n];
                scale[n] += a.abs() + (x[n] * rp[n]).abs();
            }
        }
    }
    Ok(NoetherTerms { n1, s, e, scale, residual })
}

/// Nodewise left side of the invariance condition.
pub fn invariance_residual(
    density: &dyn LagrangianDensity,
    order: &FracOrder,
    u: &Field,
    xi: &Generator,
) -> Result<Field> {
    let t = noether_terms(density, order, u, xi)?;
    Field::from_values(u.grid(), 1, t.n1)
}

pub fn noether_sum(
    density: &dyn LagrangianDensity,
    order: &FracOrder,
    u: &Field,
    xi: &Generator,
) -> Result<NoetherReport> {
    let t = noether_terms(density, order, u, xi)?;
    let grid = u.grid();
    let mut identity_defect = 0.0f64;
    let mut scale = 0.0f64;
    for n in grid.interior_nodes() {
        identity_defect = identity_defect.max((t.s[n] - t.n1[n] + t.e[n]).abs());
        scale = scale.max(t.scale[n]);
    }
    let invariance_residual = Field::from_values(grid, 1, t.n1)?;
    let noether_sum = Field::from_values(grid, 1, t.s)?;
    let el_pairing = Field::from_values(grid, 1, t.e)?;
    Ok(NoetherReport {
        identity_defect,
        scale,
        conservation_norm: noether_sum.interior_max_abs(),
        invariance_norm: invariance_residual.interior_max_abs(),
        residual_norm: t.residual.interior_max_abs(),
        generator_norm: xi.xi.interior_max_abs(),
        components: u.components(),
        invariance_residual,
        noether_sum,
        el_pairing,
    })
}

/// Discrete divergence of the classical current `J_i = sum_j P_ij xi_j`.
///
/// The current along axis `i` lives between nodes: `J_i(n + 1/2) =
/// sum_j P_ij(n + e_i) xi_j(n)`, with `P` taken as zero past the upper end
/// and `xi` as zero before the lower end. Every order must be 1.
pub fn classical_current_divergence(
    density: &dyn LagrangianDensity,
    order: &FracOrder,
    u: &Field,
    xi: &Generator,
) -> Result<Field> {
    if let Some((axis, &alpha)) = order.alpha().iter().enumerate().find(|(_, &a)| a != 1.0) {
        return Err(Error::ClassicalOrderRequired { axis, alpha });
    }
    check_shapes(density, order, u.grid(), u.components())?;
    xi.xi.check_same_grid(u.grid())?;
    if xi.components() != u.components() {
        return Err(Error::DimensionMismatch { expected: u.components(), found: xi.components() });
    }
    let grid = u.grid();
    let dims = grid.dims();
    let jet = Jet::new(density, order, u)?;
    let partials = nodal_partials(density, &jet);
    let mut div = vec![0.0; grid.len()];
    for axis in 0..dims {
        let n_axis = grid.nodes()[axis];
        let stride = grid.strides()[axis];
        let h = grid.spacing()[axis];
        for node in 0..grid.len() {
            let i = grid.axis_index(node, axis);
            let mut ahead = 0.0;
            let mut behind = 0.0;
            for j in 0..u.components() {
                let p = &partials.dg[j * dims + axis];
                let x = xi.xi.component(j);
                if i + 1 < n_axis {
                    ahead += p[node + stride] * x[node];
                }
                if i > 0 {
                    behind += p[node] * x[node - stride];
                }
            }
            div[node] += (ahead - behind) / h;
        }
    }
    Field::from_values(grid, 1, div)
}
