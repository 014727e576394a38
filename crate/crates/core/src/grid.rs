//! Uniform rectangular grids, sampled fields and boundary classification.
//!
//! Nodes are stored row-major with axis 0 (time) varying slowest. A field
//! with `m` components stores component `c` of node `n` at `c * total + n`.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Uniform tensor grid over `[a_0, b_0] x ... x [a_n, b_n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    lower: Vec<f64>,
    upper: Vec<f64>,
    nodes: Vec<usize>,
    spacing: Vec<f64>,
    strides: Vec<usize>,
    total: usize,
}

impl Grid {
    pub fn new(lower: &[f64], upper: &[f64], nodes: &[usize]) -> Result<Self> {
        if upper.len() != lower.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), found: upper.len() });
        }
        if nodes.len() != lower.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), found: nodes.len() });
        }
        if lower.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        for axis in 0..lower.len() {
            let (a, b) = (lower[axis], upper[axis]);
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(Error::DegenerateInterval { axis, lower: a, upper: b });
            }
            if nodes[axis] < 3 {
                return Err(Error::TooFewNodes { axis, nodes: nodes[axis] });
            }
        }
        let spacing = (0..lower.len()).map(|i| (upper[i] - lower[i]) / (nodes[i] - 1) as f64).collect();
        let mut strides = vec![1; nodes.len()];
        for axis in (0..nodes.len() - 1).rev() {
            strides[axis] = strides[axis + 1] * nodes[axis + 1];
        }
        let total = nodes.iter().product();
        Ok(Grid { lower: lower.to_vec(), upper: upper.to_vec(), nodes: nodes.to_vec(), spacing, strides, total })
    }

    pub fn dims(&self) -> usize {
        self.nodes.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Total node count.
    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Volume element `prod h_i` carried by every node in quadratures.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Index of `node` along `axis`.
    pub fn axis_index(&self, node: usize, axis: usize) -> usize {
        (node / self.strides[axis]) % self.nodes[axis]
    }

    pub fn multi_index(&self, node: usize) -> Vec<usize> {
        (0..self.dims()).map(|axis| self.axis_index(node, axis)).collect()
    }

    pub fn flat_index(&self, index: &[usize]) -> usize {
        index.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Coordinate of index `i` along `axis`; the last node is pinned to the upper bound.
    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        if i + 1 == self.nodes[axis] {
            self.upper[axis]
        } else {
            self.lower[axis] + i as f64 * self.spacing[axis]
        }
    }

    pub fn coordinates(&self, node: usize, out: &mut [f64]) {
        for (axis, x) in out.iter_mut().enumerate().take(self.dims()) {
            *x = self.coordinate(axis, self.axis_index(node, axis));
        }
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        (0..self.dims()).any(|axis| {
            let i = self.axis_index(node, axis);
            i == 0 || i + 1 == self.nodes[axis]
        })
    }

    pub fn boundary_mask(&self) -> BoundaryMask {
        BoundaryMask { grid: self.clone(), flags: (0..self.total).map(|n| self.is_boundary(n)).collect() }
    }

    /// Flat indices of all interior nodes, ascending.
    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.total).filter(|&n| !self.is_boundary(n)).collect()
    }

    /// Start node of every 1D line along `axis`, in ascending order.
    pub fn line_starts(&self, axis: usize) -> Vec<usize> {
        let inner = self.strides[axis];
        let block = inner * self.nodes[axis];
        let outer = self.total / block;
        let mut starts = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            for r in 0..inner {
                starts.push(o * block + r);
            }
        }
        starts
    }
}

/// One flag per node, true on the boundary of the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryMask {
    grid: Grid,
    flags: Vec<bool>,
}

impl BoundaryMask {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.flags[node]
    }
}

/// Real multicomponent function sampled on every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    components: usize,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &Grid, components: usize) -> Self {
        Field { grid: grid.clone(), components, values: vec![0.0; components * grid.len()] }
    }

    /// Wraps raw values; every value must be finite.
    pub fn from_values(grid: &Grid, components: usize, values: Vec<f64>) -> Result<Self> {
        if components == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        if values.len() != components * grid.len() {
            return Err(Error::DimensionMismatch { expected: components * grid.len(), found: values.len() });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node: pos % grid.len(), component: pos / grid.len() });
        }
        Ok(Field { grid: grid.clone(), components, values })
    }

    /// Evaluates `f(coords, out)` at every node; `out` has one slot per component.
    pub fn sample<F>(grid: &Grid, components: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        if components == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        let total = grid.len();
        let mut values = vec![0.0; components * total];
        let mut coords = vec![0.0; grid.dims()];
        let mut out = vec![0.0; components];
        for node in 0..total {
            grid.coordinates(node, &mut coords);
            out.iter_mut().for_each(|v| *v = 0.0);
            f(&coords, &mut out);
            for (c, &v) in out.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { node, component: c });
                }
                values[c * total + node] = v;
            }
        }
        Ok(Field { grid: grid.clone(), components, values })
    }

    /// Single-component shorthand for [`Field::sample`].
    pub fn sample_scalar<F>(grid: &Grid, mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> f64,
    {
        Self::sample(grid, 1, |x, out| out[0] = f(x))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.grid.len();
        &self.values[c * n..(c + 1) * n]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.grid.len();
        &mut self.values[c * n..(c + 1) * n]
    }

    pub fn get(&self, c: usize, node: usize) -> f64 {
        self.values[c * self.grid.len() + node]
    }

    /// Copies one component out as a single-component field.
    pub fn extract(&self, c: usize) -> Result<Field> {
        self.check_component(c)?;
        Ok(Field { grid: self.grid.clone(), components: 1, values: self.component(c).to_vec() })
    }

    pub fn check_component(&self, c: usize) -> Result<()> {
        if c >= self.components {
            return Err(Error::ComponentOutOfRange { component: c, components: self.components });
        }
        Ok(())
    }

    pub fn check_same_grid(&self, other: &Grid) -> Result<()> {
        if &self.grid != other {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Max absolute value over interior nodes of every component.
    pub fn interior_max_abs(&self) -> f64 {
        let n = self.grid.len();
        let mut m = 0.0f64;
        for node in 0..n {
            if self.grid.is_boundary(node) {
                continue;
            }
            for c in 0..self.components {
                m = m.max(self.values[c * n + node].abs());
            }
        }
        m
    }

    /// Same field with boundary values replaced by zero.
    pub fn interior_projection(&self, mask: &BoundaryMask) -> Result<Field> {
        self.check_same_grid(mask.grid())?;
        let mut out = self.clone();
        let n = self.grid.len();
        for (node, &flag) in mask.flags().iter().enumerate() {
            if flag {
                for c in 0..self.components {
                    out.values[c * n + node] = 0.0;
                }
            }
        }
        Ok(out)
    }
}
