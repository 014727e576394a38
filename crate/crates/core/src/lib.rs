//! Discrete Riemann-Liouville fractional calculus of variations.
//!
//! The crate works on uniform rectangular space-time grids and provides:
//!
//! * [`fracops`]: Grünwald-Letnikov left/right fractional derivatives and
//!   product-rectangle fractional integrals, applied along any grid axis.
//!   Right operators are exact transposes of the left ones.
//! * [`lagrangian`]: Lagrangian densities `L(u, grad^alpha u)` with their
//!   partials, built-in quadratic densities and the discrete action.
//! * [`variational`]: the fractional Euler-Lagrange residual, which is the
//!   exact gradient of the discrete action.
//! * [`noether`]: the invariance residual, the bilinear operator
//!   `D^gamma(f, g)`, the fractional conservation sum and its exact discrete
//!   identity.
//! * [`solver`]: Dirichlet boundary-value solves of the quadratic Poisson and
//!   wave Euler-Lagrange systems.
//!
//! The crate is `no_std` (with `alloc`). Enabling `parallel` pulls in `std`
//! and `rayon` and processes independent grid lines concurrently; results are
//! bit-identical to the sequential path.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

mod error;
pub mod fracops;
pub mod grid;
pub mod lagrangian;
pub mod linalg;
pub mod noether;
pub mod solver;
pub mod variational;

pub use error::{Error, Result};
pub use fracops::{FracOp, FracOrder, OpKind};
pub use grid::{BoundaryMask, Field, Grid};
pub use lagrangian::{LagrangianDensity, MaterialParams};
pub use noether::{Generator, NoetherReport};
pub use solver::{LinearProblem, ProblemKind, SolveResult};
pub use variational::ElResidual;
