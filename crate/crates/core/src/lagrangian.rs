//! Lagrangian densities `L(u, grad^alpha u)` and the discrete action.
//!
//! A density sees, at each node, the `m` field values `u` and the
//! `m x (n+1)` fractional gradient `g`, stored row-major so that
//! `g[j * dims + i]` is the left derivative of component `j` along axis `i`.
//! Partials are supplied by the density; [`validate_partials`] checks them
//! against central differences.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fracops::FracOrder;
use crate::grid::{Field, Grid};
use crate::{Error, Result};

pub trait LagrangianDensity {
    /// Number of field components `m`.
    fn components(&self) -> usize;

    /// Number of axes `n + 1`.
    fn dims(&self) -> usize;

    fn label(&self) -> &str;

    fn value(&self, node: usize, u: &[f64], g: &[f64]) -> f64;

    /// Writes `dL/du_j` into `out` (length `m`).
    fn du(&self, node: usize, u: &[f64], g: &[f64], out: &mut [f64]);

    /// Writes `dL/dg_ij` into `out` (length `m * dims`, same layout as `g`).
    fn dg(&self, node: usize, u: &[f64], g: &[f64], out: &mut [f64]);

    /// Node count of any per-node coefficient data, if the density carries some.
    fn node_count(&self) -> Option<usize> {
        None
    }
}

/// Positive mass density and stiffness of the wave Lagrangian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    rho: f64,
    k: f64,
}

impl MaterialParams {
    pub fn new(rho: f64, k: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidProblem("mass density must be positive"));
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidProblem("stiffness must be positive"));
        }
        Ok(MaterialParams { rho, k })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Squared wave speed `k / rho`.
    pub fn c2(&self) -> f64 {
        self.k / self.rho
    }
}

/// `1/2 sum_i g_i^2 - f u`, the fractional Dirichlet energy with a source.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonDensity {
    dims: usize,
    source: Vec<f64>,
}

pub fn builtin_poisson(source: &Field) -> Result<PoissonDensity> {
    if source.components() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: source.components() });
    }
    Ok(PoissonDensity { dims: source.grid().dims(), source: source.values().to_vec() })
}

impl PoissonDensity {
    pub fn source(&self) -> &[f64] {
        &self.source
    }
}

impl LagrangianDensity for PoissonDensity {
    fn components(&self) -> usize {
        1
    }

    fn dims(&self) -> usize {
        self.dims
    }

    fn label(&self) -> &str {
        "poisson"
    }

    fn value(&self, node: usize, u: &[f64], g: &[f64]) -> f64 {
        0.5 * g.iter().map(|x| x * x).sum::<f64>() - self.source[node] * u[0]
    }

    fn du(&self, node: usize, _u: &[f64], _g: &[f64], out: &mut [f64]) {
        out[0] = -self.source[node];
    }

    fn dg(&self, _node: usize, _u: &[f64], g: &[f64], out: &mut [f64]) {
        out.copy_from_slice(g);
    }

    fn node_count(&self) -> Option<usize> {
        Some(self.source.len())
    }
}

/// `1/2 (rho g_0^2 - k sum_{i>=1} g_i^2)`, optionally minus `f u`.
///
/// With `fractional_space = false` the spatial derivatives are meant to be
/// classical; [`WaveDensity::effective_order`] pins those orders to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveDensity {
    params: MaterialParams,
    dims: usize,
    fractional_space: bool,
    source: Option<Vec<f64>>,
}

pub fn builtin_wave(params: MaterialParams, fractional_space: bool, dims: usize) -> Result<WaveDensity> {
    if dims < 2 {
        return Err(Error::InvalidProblem("wave density needs a time axis and at least one space axis"));
    }
    Ok(WaveDensity { params, dims, fractional_space, source: None })
}

impl WaveDensity {
    /// Adds a forcing term `-f u` (used for manufactured solutions).
    pub fn with_source(mut self, source: &Field) -> Result<Self> {
        if source.components() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: source.components() });
        }
        if source.grid().dims() != self.dims {
            return Err(Error::DimensionMismatch { expected: self.dims, found: source.grid().dims() });
        }
        self.source = Some(source.values().to_vec());
        Ok(self)
    }

    pub fn params(&self) -> MaterialParams {
        self.params
    }

    pub fn fractional_space(&self) -> bool {
        self.fractional_space
    }

    pub fn effective_order(&self, order: &FracOrder) -> Result<FracOrder> {
        if self.fractional_space {
            return Ok(order.clone());
        }
        let mut alpha = order.alpha().to_vec();
        alpha.iter_mut().skip(1).for_each(|a| *a = 1.0);
        FracOrder::new(alpha)
    }

    fn coefficient(&self, axis: usize) -> f64 {
        if axis == 0 {
            self.params.rho
        } else {
            -self.params.k
        }
    }
}

impl LagrangianDensity for WaveDensity {
    fn components(&self) -> usize {
        1
    }

    fn dims(&self) -> usize {
        self.dims
    }

    fn label(&self) -> &str {
        if self.fractional_space {
            "wave-frac-space"
        } else {
            "wave-classical-space"
        }
    }

    fn value(&self, node: usize, u: &[f64], g: &[f64]) -> f64 {
        let quad: f64 = g.iter().enumerate().map(|(i, x)| self.coefficient(i) * x * x).sum();
        let forcing = self.source.as_ref().map_or(0.0, |f| f[node] * u[0]);
        0.5 * quad - forcing
    }

    fn du(&self, node: usize, _u: &[f64], _g: &[f64], out: &mut [f64]) {
        out[0] = self.source.as_ref().map_or(0.0, |f| -f[node]);
    }

    fn dg(&self, _node: usize, _u: &[f64], g: &[f64], out: &mut [f64]) {
        for (i, (o, x)) in out.iter_mut().zip(g).enumerate() {
            *o = self.coefficient(i) * x;
        }
    }

    fn node_count(&self) -> Option<usize> {
        self.source.as_ref().map(|f| f.len())
    }
}

type ValueFn = Box<dyn Fn(usize, &[f64], &[f64]) -> f64>;
type PartialFn = Box<dyn Fn(usize, &[f64], &[f64], &mut [f64])>;

/// Density assembled from user closures.
pub struct FnDensity {
    components: usize,
    dims: usize,
    label: String,
    value: ValueFn,
    du: PartialFn,
    dg: PartialFn,
}

impl FnDensity {
    pub fn new(
        components: usize,
        dims: usize,
        label: impl Into<String>,
        value: impl Fn(usize, &[f64], &[f64]) -> f64 + 'static,
        du: impl Fn(usize, &[f64], &[f64], &mut [f64]) + 'static,
        dg: impl Fn(usize, &[f64], &[f64], &mut [f64]) + 'static,
    ) -> Self {
        FnDensity { components, dims, label: label.into(), value: Box::new(value), du: Box::new(du), dg: Box::new(dg) }
    }
}

impl LagrangianDensity for FnDensity {
    fn components(&self) -> usize {
        self.components
    }

    fn dims(&self) -> usize {
        self.dims
    }

    fn label(&self) -> &str {
        &self.label
    }

    fn value(&self, node: usize, u: &[f64], g: &[f64]) -> f64 {
        (self.value)(node, u, g)
    }

    fn du(&self, node: usize, u: &[f64], g: &[f64], out: &mut [f64]) {
        (self.du)(node, u, g, out)
    }

    fn dg(&self, node: usize, u: &[f64], g: &[f64], out: &mut [f64]) {
        (self.dg)(node, u, g, out)
    }
}

/// Nodewise field values and fractional gradients of a field.
pub(crate) struct Jet<'a> {
    pub u: &'a Field,
    /// `grads[j * dims + i]`: left derivative of component `j` along axis `i`.
    pub grads: Vec<Vec<f64>>,
    pub dims: usize,
}

impl<'a> Jet<'a> {
    pub fn new(density: &dyn LagrangianDensity, order: &FracOrder, u: &'a Field) -> Result<Self> {
        check_shapes(density, order, u.grid(), u.components())?;
        let dims = u.grid().dims();
        let ops = order.left_derivatives(u.grid())?;
        let mut grads = Vec::with_capacity(u.components() * dims);
        for j in 0..u.components() {
            for op in &ops {
                grads.push(op.apply_values(u.grid(), u.component(j))?);
            }
        }
        Ok(Jet { u, grads, dims })
    }

    pub fn gather(&self, node: usize, u: &mut [f64], g: &mut [f64]) {
        for (j, uj) in u.iter_mut().enumerate() {
            *uj = self.u.get(j, node);
        }
        for (slot, grad) in g.iter_mut().zip(&self.grads) {
            *slot = grad[node];
        }
    }
}

pub(crate) fn check_shapes(
    density: &dyn LagrangianDensity,
    order: &FracOrder,
    grid: &Grid,
    components: usize,
) -> Result<()> {
    if components != density.components() {
        return Err(Error::DimensionMismatch { expected: density.components(), found: components });
    }
    if grid.dims() != density.dims() {
        return Err(Error::DimensionMismatch { expected: density.dims(), found: grid.dims() });
    }
    if let Some(n) = density.node_count() {
        if n != grid.len() {
            return Err(Error::GridMismatch);
        }
    }
    order.check_dims(grid)
}

/// Discrete action `sum_nodes L(u, grad^alpha u) * prod h_i`, summed row-major.
pub fn action(density: &dyn LagrangianDensity, order: &FracOrder, u: &Field) -> Result<f64> {
    let jet = Jet::new(density, order, u)?;
    let m = u.components();
    let mut ub = vec![0.0; m];
    let mut gb = vec![0.0; m * jet.dims];
    let mut sum = 0.0;
    for node in 0..u.grid().len() {
        jet.gather(node, &mut ub, &mut gb);
        let v = density.value(node, &ub, &gb);
        if !v.is_finite() {
            return Err(Error::NonFinite { node, component: 0 });
        }
        sum += v;
    }
    Ok(sum * u.grid().cell_volume())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partial {
    U { component: usize },
    G { component: usize, axis: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartialMismatch {
    pub trial: usize,
    pub node: usize,
    pub partial: Partial,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartialsReport {
    pub trials: usize,
    pub max_rel_error: f64,
    /// Location of the largest discrepancy.
    pub worst: Option<PartialMismatch>,
    pub passed: bool,
}

pub const PARTIALS_RTOL: f64 = 1e-6;

/// Compares supplied partials against central differences of the value at
/// `trials` seeded random points.
pub fn validate_partials(density: &dyn LagrangianDensity, trials: usize, seed: u64) -> PartialsReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = density.components();
    let dims = density.dims();
    let nodes = density.node_count().unwrap_or(1).max(1);
    let mut u = vec![0.0; m];
    let mut g = vec![0.0; m * dims];
    let mut du = vec![0.0; m];
    let mut dg = vec![0.0; m * dims];
    let mut report = PartialsReport { trials, max_rel_error: 0.0, worst: None, passed: true };

    for trial in 0..trials {
        let node = rng.gen_range(0..nodes);
        u.iter_mut().for_each(|x| *x = rng.gen_range(-2.0..2.0));
        g.iter_mut().for_each(|x| *x = rng.gen_range(-2.0..2.0));
        density.du(node, &u, &g, &mut du);
        density.dg(node, &u, &g, &mut dg);

        let probe = |slot: &mut [f64], idx: usize, other: &[f64], is_u: bool| -> f64 {
            let x0 = slot[idx];
            let step = 1e-5 * x0.abs().max(1.0);
            slot[idx] = x0 + step;
            let plus = if is_u { density.value(node, slot, other) } else { density.value(node, other, slot) };
            slot[idx] = x0 - step;
            let minus = if is_u { density.value(node, slot, other) } else { density.value(node, other, slot) };
            slot[idx] = x0;
            (plus - minus) / (2.0 * step)
        };

        let mut record = |partial: Partial, analytic: f64, numeric: f64| {
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1.0);
            if rel.is_nan() || rel > report.max_rel_error {
                report.max_rel_error = if rel.is_nan() { f64::INFINITY } else { rel };
                report.worst = Some(PartialMismatch { trial, node, partial, analytic, numeric });
            }
        };

        for (j, &analytic) in du.iter().enumerate().take(m) {
            let numeric = probe(&mut u, j, &g, true);
            record(Partial::U { component: j }, analytic, numeric);
        }
        for j in 0..m {
            for i in 0..dims {
                let numeric = probe(&mut g, j * dims + i, &u, false);
                record(Partial::G { component: j, axis: i }, dg[j * dims + i], numeric);
            }
        }
    }
    report.passed = report.max_rel_error <= PARTIALS_RTOL;
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fracops::FracOp;
    use crate::fracops::OpKind;

    fn grid3() -> Grid {
        Grid::new(&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0], &[5, 6, 7]).unwrap()
    }

    #[test]
    fn poisson_values() {
        let g = Grid::new(&[0.0, 0.0], &[1.0, 1.0], &[3, 3]).unwrap();
        let f = Field::sample_scalar(&g, |_| 3.0).unwrap();
        let d = builtin_poisson(&f).unwrap();
        assert_eq!(d.value(0, &[0.0], &[0.0, 0.0]), 0.0);
        assert_eq!(d.value(4, &[2.0], &[1.0, 1.0]), -5.0);
        let mut out = [0.0; 2];
        d.dg(0, &[1.0], &[0.3, -0.2], &mut out);
        assert_eq!(out, [0.3, -0.2]);
        let mut du = [0.0];
        d.du(0, &[1.0], &[0.3, -0.2], &mut du);
        assert_eq!(du, [-3.0]);
    }

    #[test]
    fn wave_values() {
        let p = MaterialParams::new(2.0, 1.0).unwrap();
        let d = builtin_wave(p, true, 3).unwrap();
        assert_eq!(d.value(0, &[0.7], &[1.0, 0.0, 0.0]), 1.0);
        let p = MaterialParams::new(1.0, 3.0).unwrap();
        let d = builtin_wave(p, true, 2).unwrap();
        assert_eq!(d.value(0, &[0.7], &[0.0, 1.0]), -1.5);
        let mut du = [1.0];
        d.du(0, &[5.0], &[3.0, -2.0], &mut du);
        assert_eq!(du, [0.0]);
        assert!(builtin_wave(p, true, 1).is_err());
        assert_eq!(p.c2(), 3.0);
        assert!(MaterialParams::new(0.0, 1.0).is_err());
        assert!(MaterialParams::new(1.0, -1.0).is_err());
    }

    #[test]
    fn classical_space_pins_spatial_orders() {
        let p = MaterialParams::new(1.0, 1.0).unwrap();
        let d = builtin_wave(p, false, 3).unwrap();
        let order = FracOrder::new(vec![0.6, 0.7, 0.8]).unwrap();
        assert_eq!(d.effective_order(&order).unwrap().alpha(), &[0.6, 1.0, 1.0]);
        assert_eq!(d.label(), "wave-classical-space");
    }

    #[test]
    fn action_hand_evaluation() {
        let g = Grid::new(&[0.0], &[1.0], &[3]).unwrap();
        let u = Field::from_values(&g, 1, vec![0.0, 0.5, 1.0]).unwrap();
        let d = builtin_poisson(&Field::zeros(&g, 1)).unwrap();
        let order = FracOrder::uniform(1.0, 1).unwrap();
        assert_eq!(action(&d, &order, &u).unwrap(), 0.5);
        assert_eq!(action(&d, &order, &Field::zeros(&g, 1)).unwrap(), 0.0);
    }

    #[test]
    fn action_is_quadratic_without_source() {
        let g = grid3();
        let order = FracOrder::new(vec![0.4, 0.7, 1.0]).unwrap();
        let u = Field::sample_scalar(&g, |x| (3.0 * x[0]).sin() + x[1] * x[2]).unwrap();
        let mut u2 = u.clone();
        u2.values_mut().iter_mut().for_each(|v| *v *= 2.0);
        let p = builtin_poisson(&Field::zeros(&g, 1)).unwrap();
        let w = builtin_wave(MaterialParams::new(1.5, 0.5).unwrap(), true, 3).unwrap();
        for d in [&p as &dyn LagrangianDensity, &w] {
            let j1 = action(d, &order, &u).unwrap();
            let j2 = action(d, &order, &u2).unwrap();
            assert!((j2 - 4.0 * j1).abs() <= 1e-12 * j1.abs());
        }
    }

    #[test]
    fn action_matches_closed_form_quadratic_sum() {
        let g = grid3();
        let order = FracOrder::new(vec![0.3, 0.55, 0.9]).unwrap();
        let u = Field::sample_scalar(&g, |x| (x[0] - 0.3) * (x[1] + 1.0) + (x[2] * 5.0).cos()).unwrap();
        let f = Field::sample_scalar(&g, |x| x[0] + 2.0 * x[2]).unwrap();
        let params = MaterialParams::new(1.3, 0.8).unwrap();
        let vol: f64 = g.spacing().iter().product();

        let grads: Vec<Vec<f64>> = (0..3)
            .map(|axis| {
                FracOp::for_grid(OpKind::LeftDerivative, order.alpha()[axis], axis, &g)
                    .unwrap()
                    .apply_values(&g, u.values())
                    .unwrap()
            })
            .collect();
        let sq = |axis: usize| grads[axis].iter().map(|v| v * v).sum::<f64>();
        let fu: f64 = f.values().iter().zip(u.values()).map(|(a, b)| a * b).sum();

        let poisson_direct = (0.5 * (sq(0) + sq(1) + sq(2)) - fu) * vol;
        let poisson = action(&builtin_poisson(&f).unwrap(), &order, &u).unwrap();
        assert!((poisson - poisson_direct).abs() <= 1e-12 * poisson_direct.abs());

        let wave_direct = 0.5 * (params.rho() * sq(0) - params.k() * (sq(1) + sq(2))) * vol;
        let wave = action(&builtin_wave(params, true, 3).unwrap(), &order, &u).unwrap();
        assert!((wave - wave_direct).abs() <= 1e-12 * wave_direct.abs());
    }

    #[test]
    fn action_is_linear_in_source() {
        let g = grid3();
        let order = FracOrder::uniform(0.5, 3).unwrap();
        let u = Field::sample_scalar(&g, |x| x[0] * x[1] - x[2]).unwrap();
        let f1 = Field::sample_scalar(&g, |x| x[0].exp()).unwrap();
        let f2 = Field::sample_scalar(&g, |x| x[1] * x[2]).unwrap();
        let mix =
            Field::from_values(&g, 1, f1.values().iter().zip(f2.values()).map(|(a, b)| 2.0 * a - 3.0 * b).collect())
                .unwrap();
        let j = |f: &Field| action(&builtin_poisson(f).unwrap(), &order, &u).unwrap();
        let j0 = j(&Field::zeros(&g, 1));
        let lhs = j(&mix) - j0;
        let rhs = 2.0 * (j(&f1) - j0) - 3.0 * (j(&f2) - j0);
        assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn action_shape_errors() {
        let g = grid3();
        let d = builtin_poisson(&Field::zeros(&g, 1)).unwrap();
        let order = FracOrder::uniform(0.5, 2).unwrap();
        assert!(action(&d, &order, &Field::zeros(&g, 1)).is_err());
        let order = FracOrder::uniform(0.5, 3).unwrap();
        assert!(action(&d, &order, &Field::zeros(&g, 2)).is_err());
    }

    #[test]
    fn action_reports_non_finite_density() {
        let g = Grid::new(&[0.0], &[1.0], &[4]).unwrap();
        let d = FnDensity::new(
            1,
            1,
            "bad",
            |node, _, _| if node == 2 { f64::NAN } else { 0.0 },
            |_, _, _, out| out[0] = 0.0,
            |_, _, _, out| out[0] = 0.0,
        );
        let order = FracOrder::uniform(0.5, 1).unwrap();
        assert_eq!(action(&d, &order, &Field::zeros(&g, 1)), Err(Error::NonFinite { node: 2, component: 0 }));
    }

    #[test]
    fn builtins_pass_partials_check() {
        let g = grid3();
        let f = Field::sample_scalar(&g, |x| 1.0 + x[0] - x[2]).unwrap();
        let p = builtin_poisson(&f).unwrap();
        assert!(validate_partials(&p, 50, 0).passed);
        let w = builtin_wave(MaterialParams::new(2.0, 3.0).unwrap(), true, 3).unwrap();
        assert!(validate_partials(&w, 50, 1).passed);
        assert!(validate_partials(&w.with_source(&f).unwrap(), 50, 2).passed);
    }

    #[test]
    fn nonlinear_density_passes_partials_check() {
        // L = u0^2 u1 + sin(g_00) + g_01 g_10 with m = 2, dims = 2
        let d = FnDensity::new(
            2,
            2,
            "nonlinear",
            |_, u, g| u[0] * u[0] * u[1] + libm::sin(g[0]) + g[1] * g[2],
            |_, u, _, out| {
                out[0] = 2.0 * u[0] * u[1];
                out[1] = u[0] * u[0];
            },
            |_, _, g, out| {
                out[0] = libm::cos(g[0]);
                out[1] = g[2];
                out[2] = g[1];
                out[3] = 0.0;
            },
        );
        let r = validate_partials(&d, 100, 3);
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn wrong_partial_is_located() {
        let d = FnDensity::new(
            1,
            2,
            "wrong-du",
            |_, u, g| 0.5 * (g[0] * g[0] + g[1] * g[1]) - 2.0 * u[0],
            |_, _, _, out| out[0] = 2.0,
            |_, _, g, out| out.copy_from_slice(g),
        );
        let r = validate_partials(&d, 10, 0);
        assert!(!r.passed);
        let worst = r.worst.unwrap();
        assert_eq!(worst.partial, Partial::U { component: 0 });
        assert_eq!(worst.analytic, 2.0);
        assert!((worst.numeric + 2.0).abs() < 1e-6);
    }
}
