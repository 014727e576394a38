//! Fractional Euler-Lagrange residual and its gradient certificate.
//!
//! `R_j = dL/du_j + sum_i Right_i(dL/dg_ij)`, where `Right_i` is the exact
//! transpose of the left derivative along axis `i`. Because the action is a
//! uniform-weight sum, `<R(u), h> * prod h_i` is exactly the directional
//! derivative of the discrete action along any `h` that vanishes on the
//! boundary.

use alloc::vec;
use alloc::vec::Vec;

use crate::fracops::FracOrder;
use crate::grid::Field;
use crate::lagrangian::{action, Jet, LagrangianDensity};
use crate::{Error, Result};

/// Euler-Lagrange residual at every node plus its interior max-norm.
#[derive(Debug, Clone, PartialEq)]
pub struct ElResidual {
    pub field: Field,
    pub interior_norm: f64,
}

/// Nodewise partials of the density along a field.
pub(crate) struct Partials {
    /// `du[j][node]`
    pub du: Vec<Vec<f64>>,
    /// `dg[j * dims + i][node]`
    pub dg: Vec<Vec<f64>>,
}

pub(crate) fn nodal_partials(density: &dyn LagrangianDensity, jet: &Jet<'_>) -> Partials {
    let grid = jet.u.grid();
    let m = jet.u.components();
    let dims = jet.dims;
    let total = grid.len();
    let mut du = vec![vec![0.0; total]; m];
    let mut dg = vec![vec![0.0; total]; m * dims];
    let mut ub = vec![0.0; m];
    let mut gb = vec![0.0; m * dims];
    let mut dub = vec![0.0; m];
    let mut dgb = vec![0.0; m * dims];
    for node in 0..total {
        jet.gather(node, &mut ub, &mut gb);
        density.du(node, &ub, &gb, &mut dub);
        density.dg(node, &ub, &gb, &mut dgb);
        for j in 0..m {
            du[j][node] = dub[j];
        }
        for (slot, v) in dg.iter_mut().zip(&dgb) {
            slot[node] = *v;
        }
    }
    Partials { du, dg }
}

pub(crate) fn residual_from_partials(order: &FracOrder, u: &Field, partials: &Partials) -> Result<Field> {
    let grid = u.grid();
    let dims = grid.dims();
    let rights: Vec<_> = order.left_derivatives(grid)?.iter().map(|op| op.adjoint()).collect();
    let mut values = Vec::with_capacity(u.values().len());
    for j in 0..u.components() {
        let mut r = partials.du[j].clone();
        for (i, op) in rights.iter().enumerate() {
            let term = op.apply_values(grid, &partials.dg[j * dims + i])?;
            r.iter_mut().zip(term).for_each(|(a, b)| *a += b);
        }
        values.extend(r);
    }
    Field::from_values(grid, u.components(), values)
}

pub fn el_residual(density: &dyn LagrangianDensity, order: &FracOrder, u: &Field) -> Result<ElResidual> {
    let jet = Jet::new(density, order, u)?;
    let partials = nodal_partials(density, &jet);
    let field = residual_from_partials(order, u, &partials)?;
    let interior_norm = field.interior_max_abs();
    Ok(ElResidual { field, interior_norm })
}

/// `sum_nodes sum_j a_j b_j * prod h_i`.
pub fn pairing(a: &Field, b: &Field) -> Result<f64> {
    b.check_same_grid(a.grid())?;
    if a.components() != b.components() {
        return Err(Error::DimensionMismatch { expected: a.components(), found: b.components() });
    }
    let s: f64 = a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum();
    Ok(s * a.grid().cell_volume())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientReport {
    pub eps: f64,
    /// `[J(u + eps h) - J(u - eps h)] / (2 eps)`
    pub quotient: f64,
    /// Richardson combination of the quotients at `eps` and `eps / 2`.
    pub richardson: f64,
    /// `<R(u), h>` with the quadrature weight.
    pub pairing: f64,
    pub defect: f64,
    pub richardson_defect: f64,
    pub scale: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub const GRADIENT_RTOL: f64 = 1e-8;

/// Directional difference quotient of the action against the residual pairing.
pub fn gradient_check(
    density: &dyn LagrangianDensity,
    order: &FracOrder,
    u: &Field,
    h: &Field,
    eps: f64,
) -> Result<GradientReport> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidTolerance(eps));
    }
    h.check_same_grid(u.grid())?;
    if h.components() != u.components() {
        return Err(Error::DimensionMismatch { expected: u.components(), found: h.components() });
    }
    let grid = u.grid();
    for node in 0..grid.len() {
        if grid.is_boundary(node) && (0..h.components()).any(|c| h.get(c, node) != 0.0) {
            return Err(Error::BoundaryNotZero { node });
        }
    }

    let shifted = |s: f64| -> Result<f64> {
        let mut v = u.clone();
        v.values_mut().iter_mut().zip(h.values()).for_each(|(a, b)| *a += s * b);
        action(density, order, &v)
    };
    let quotient_at = |e: f64| -> Result<f64> { Ok((shifted(e)? - shifted(-e)?) / (2.0 * e)) };
    let quotient = quotient_at(eps)?;
    let half = quotient_at(0.5 * eps)?;
    let richardson = (4.0 * half - quotient) / 3.0;

    let residual = el_residual(density, order, u)?;
    let pair = pairing(&residual.field, h)?;
    let magnitude: f64 =
        residual.field.values().iter().zip(h.values()).map(|(r, v)| (r * v).abs()).sum::<f64>() * grid.cell_volume();

    let scale = magnitude.max(quotient.abs()).max(pair.abs());
    let defect = (quotient - pair).abs();
    let richardson_defect = (richardson - pair).abs();
    let tolerance = GRADIENT_RTOL * scale;
    Ok(GradientReport {
        eps,
        quotient,
        richardson,
        pairing: pair,
        defect,
        richardson_defect,
        scale,
        tolerance,
        passed: defect.min(richardson_defect) <= tolerance,
    })
}
