//! Discrete Riemann-Liouville operators as triangular Toeplitz matrices.
//!
//! Derivatives use the unshifted Grünwald-Letnikov weights
//! `w_0 = 1, w_k = w_{k-1} (k - 1 - alpha) / k`, divided by `h^alpha`.
//! Integrals use product-rectangle weights `(k+1)^alpha - k^alpha`, scaled by
//! `h^alpha / Gamma(alpha + 1)`, with each node value standing for the cell
//! that ends at it.
//!
//! A left operator at index `j` of a line reads `sum_{k=0}^{j} w_k f_{j-k}`;
//! the right operator reads `sum_{k=0}^{N-1-j} w_k f_{j+k}`. The right matrix
//! is therefore exactly the transpose of the left one, which is what makes
//! fractional integration by parts hold identically on the grid. Summation is
//! always in ascending `k`.
//!
//! The continuous integration-by-parts rule carries `L_p`/`L_q` integrability
//! hypotheses; the discrete transpose identity needs none of them.

use alloc::vec;
use alloc::vec::Vec;

use crate::grid::{Field, Grid};
use crate::{Error, Result};

/// Relative tolerance used when matching an operator's spacing to a grid axis.
const SPACING_RTOL: f64 = 1e-12;

/// `Gamma(x)` for real `x`, via `libm::tgamma`.
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

fn check_alpha(axis: usize, alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::OrderOutOfRange { axis, alpha })
    }
}

/// Per-axis fractional orders, each in `(0, 1]`.
///
/// `alpha = 1` is admitted as the exact classical limit, where the left
/// derivative is the backward difference.
#[derive(Debug, Clone, PartialEq)]
pub struct FracOrder(Vec<f64>);

impl FracOrder {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        for (axis, &a) in alpha.iter().enumerate() {
            check_alpha(axis, a)?;
        }
        Ok(FracOrder(alpha))
    }

    pub fn uniform(alpha: f64, dims: usize) -> Result<Self> {
        Self::new(vec![alpha; dims])
    }

    pub fn alpha(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_classical(&self) -> bool {
        self.0.iter().all(|&a| a == 1.0)
    }

    pub fn check_dims(&self, grid: &Grid) -> Result<()> {
        if self.0.len() != grid.dims() {
            return Err(Error::DimensionMismatch { expected: grid.dims(), found: self.0.len() });
        }
        Ok(())
    }

    /// Left derivative operators, one per axis of `grid`.
    pub fn left_derivatives(&self, grid: &Grid) -> Result<Vec<FracOp>> {
        self.check_dims(grid)?;
        (0..grid.dims()).map(|axis| FracOp::for_grid(OpKind::LeftDerivative, self.0[axis], axis, grid)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    LeftDerivative,
    RightDerivative,
    LeftIntegral,
    RightIntegral,
}

impl OpKind {
    pub fn is_left(self) -> bool {
        matches!(self, OpKind::LeftDerivative | OpKind::LeftIntegral)
    }

    pub fn is_derivative(self) -> bool {
        matches!(self, OpKind::LeftDerivative | OpKind::RightDerivative)
    }

    /// Same family, opposite handedness.
    pub fn mirrored(self) -> OpKind {
        match self {
            OpKind::LeftDerivative => OpKind::RightDerivative,
            OpKind::RightDerivative => OpKind::LeftDerivative,
            OpKind::LeftIntegral => OpKind::RightIntegral,
            OpKind::RightIntegral => OpKind::LeftIntegral,
        }
    }
}

/// Grünwald-Letnikov weights `w_0 .. w_{count-1}` (unscaled).
pub fn gl_weights(alpha: f64, count: usize) -> Result<Vec<f64>> {
    check_alpha(0, alpha)?;
    let mut w = Vec::with_capacity(count);
    if count == 0 {
        return Ok(w);
    }
    w.push(1.0);
    for k in 1..count {
        let prev = w[k - 1];
        // `+ 0.0` turns the -0 produced past an integer order into +0
        w.push(prev * ((k as f64 - 1.0 - alpha) / k as f64) + 0.0);
    }
    Ok(w)
}

/// Product-rectangle integral weights `(k+1)^alpha - k^alpha` (unscaled).
pub fn integral_weights(alpha: f64, count: usize) -> Result<Vec<f64>> {
    check_alpha(0, alpha)?;
    Ok((0..count)
        .map(|k| {
            let k = k as f64;
            libm::pow(k + 1.0, alpha) - libm::pow(k, alpha)
        })
        .collect())
}

/// A 1D fractional operator of order `alpha` acting along one grid axis.
#[derive(Debug, Clone, PartialEq)]
pub struct FracOp {
    kind: OpKind,
    order: f64,
    axis: usize,
    spacing: f64,
    weights: Vec<f64>,
    /// `h^alpha`; derivatives divide by it, integrals multiply by `h^alpha / Gamma(alpha+1)`.
    step_power: f64,
    /// Number of leading weights up to the last nonzero one.
    support: usize,
}

impl FracOp {
    pub fn new(kind: OpKind, order: f64, axis: usize, spacing: f64, len: usize) -> Result<Self> {
        check_alpha(axis, order)?;
        let weights = if kind.is_derivative() { gl_weights(order, len)? } else { integral_weights(order, len)? };
        let support = weights.iter().rposition(|&w| w != 0.0).map_or(0, |p| p + 1);
        Ok(FracOp { kind, order, axis, spacing, weights, step_power: libm::pow(spacing, order), support })
    }

    /// Operator sized and spaced for `axis` of `grid`.
    pub fn for_grid(kind: OpKind, order: f64, axis: usize, grid: &Grid) -> Result<Self> {
        if axis >= grid.dims() {
            return Err(Error::AxisOutOfRange { axis, dims: grid.dims() });
        }
        Self::new(kind, order, axis, grid.spacing()[axis], grid.nodes()[axis])
    }

    pub fn kind(&self) -> OpKind {
        self.kind
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn axis(&self) -> usize {
        self.axis
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Unscaled Toeplitz weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Multiplier turning unscaled weight sums into operator values.
    pub fn scale(&self) -> f64 {
        if self.kind.is_derivative() {
            1.0 / self.step_power
        } else {
            self.step_power / gamma(self.order + 1.0)
        }
    }

    pub fn scaled_weights(&self) -> Vec<f64> {
        let s = self.scale();
        self.weights.iter().map(|w| w * s).collect()
    }

    /// Operator of opposite handedness with identical weights: the matrix transpose.
    pub fn adjoint(&self) -> FracOp {
        FracOp { kind: self.kind.mirrored(), ..self.clone() }
    }

    /// Applies the operator to one dense line of values.
    pub fn apply_line(&self, f: &[f64], out: &mut [f64]) {
        let n = f.len();
        let support = self.support.min(n);
        let w = &self.weights[..support];
        let derivative = self.kind.is_derivative();
        let integral_scale = if derivative { 0.0 } else { self.scale() };
        for j in 0..n {
            let mut acc = 0.0;
            if self.kind.is_left() {
                for (k, wk) in w.iter().enumerate().take(j + 1) {
                    acc += wk * f[j - k];
                }
            } else {
                for (k, wk) in w.iter().enumerate().take(n - j) {
                    acc += wk * f[j + k];
                }
            }
            out[j] = if derivative { acc / self.step_power } else { acc * integral_scale };
        }
    }

    fn check_grid(&self, grid: &Grid) -> Result<()> {
        if self.axis >= grid.dims() {
            return Err(Error::AxisOutOfRange { axis: self.axis, dims: grid.dims() });
        }
        let h = grid.spacing()[self.axis];
        if (self.spacing - h).abs() > SPACING_RTOL * h {
            return Err(Error::SpacingMismatch { axis: self.axis, expected: h, found: self.spacing });
        }
        if self.weights.len() < grid.nodes()[self.axis] {
            return Err(Error::DimensionMismatch { expected: grid.nodes()[self.axis], found: self.weights.len() });
        }
        Ok(())
    }

    /// Applies the operator along its axis to a flat node array of `grid`.
    ///
    /// Lines are independent; with the `parallel` feature they are processed
    /// concurrently, and the result is bit-identical either way.
    pub fn apply_values(&self, grid: &Grid, values: &[f64]) -> Result<Vec<f64>> {
        self.check_grid(grid)?;
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: values.len() });
        }
        let n = grid.nodes()[self.axis];
        let stride = grid.strides()[self.axis];
        let starts = grid.line_starts(self.axis);
        let line = |start: usize| {
            let input: Vec<f64> = (0..n).map(|j| values[start + j * stride]).collect();
            let mut out = vec![0.0; n];
            self.apply_line(&input, &mut out);
            out
        };

        #[cfg(feature = "parallel")]
        let lines: Vec<Vec<f64>> = {
            use rayon::prelude::*;
            starts.par_iter().map(|&s| line(s)).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let lines: Vec<Vec<f64>> = starts.iter().map(|&s| line(s)).collect();

        let mut result = vec![0.0; grid.len()];
        for (start, out) in starts.iter().zip(lines) {
            for (j, v) in out.into_iter().enumerate() {
                result[start + j * stride] = v;
            }
        }
        Ok(result)
    }

    /// Partial fractional operator of one component, as a single-component field.
    pub fn apply_axis(&self, field: &Field, component: usize) -> Result<Field> {
        field.check_component(component)?;
        let values = self.apply_values(field.grid(), field.component(component))?;
        Field::from_values(field.grid(), 1, values)
    }
}

/// Adjoint of `op`: see [`FracOp::adjoint`].
pub fn adjoint(op: &FracOp) -> FracOp {
    op.adjoint()
}

/// Partial fractional operator along one axis; free-function form of [`FracOp::apply_axis`].
pub fn apply_axis(op: &FracOp, field: &Field, component: usize) -> Result<Field> {
    op.apply_axis(field, component)
}

/// `grad^alpha` of one component: the left partial derivative along every axis.
pub fn frac_gradient(order: &FracOrder, field: &Field, component: usize) -> Result<Vec<Field>> {
    order.left_derivatives(field.grid())?.iter().map(|op| op.apply_axis(field, component)).collect()
}
