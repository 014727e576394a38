use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    DimensionMismatch { expected: usize, found: usize },
    DegenerateInterval { axis: usize, lower: f64, upper: f64 },
    TooFewNodes { axis: usize, nodes: usize },
    NonFinite { node: usize, component: usize },
    GridMismatch,
    ComponentOutOfRange { component: usize, components: usize },
    OrderOutOfRange { axis: usize, alpha: f64 },
    AxisOutOfRange { axis: usize, dims: usize },
    SpacingMismatch { axis: usize, expected: f64, found: f64 },
    BoundaryNotZero { node: usize },
    ClassicalOrderRequired { axis: usize, alpha: f64 },
    DenseCapExceeded { unknowns: usize, cap: usize },
    SingularMatrix { column: usize },
    InvalidTolerance(f64),
    InvalidProblem(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::DegenerateInterval { axis, lower, upper } => {
                write!(f, "degenerate interval on axis {axis}: [{lower}, {upper}]")
            }
            Error::TooFewNodes { axis, nodes } => {
                write!(f, "axis {axis} has {nodes} nodes, at least 3 required")
            }
            Error::NonFinite { node, component } => {
                write!(f, "non-finite value at node {node}, component {component}")
            }
            Error::GridMismatch => write!(f, "fields live on different grids"),
            Error::ComponentOutOfRange { component, components } => {
                write!(f, "component {component} out of range (field has {components})")
            }
            Error::OrderOutOfRange { axis, alpha } => {
                write!(f, "order {alpha} on axis {axis} outside (0, 1]")
            }
            Error::AxisOutOfRange { axis, dims } => {
                write!(f, "axis {axis} out of range for a {dims}-axis grid")
            }
            Error::SpacingMismatch { axis, expected, found } => {
                write!(f, "operator spacing {found} does not match grid spacing {expected} on axis {axis}")
            }
            Error::BoundaryNotZero { node } => {
                write!(f, "variation is nonzero at boundary node {node}")
            }
            Error::ClassicalOrderRequired { axis, alpha } => {
                write!(f, "classical current needs order 1, axis {axis} has {alpha}")
            }
            Error::DenseCapExceeded { unknowns, cap } => {
                write!(f, "dense solve of {unknowns} unknowns exceeds the cap of {cap}")
            }
            Error::SingularMatrix { column } => {
                write!(f, "matrix is singular to working precision at column {column}")
            }
            Error::InvalidTolerance(tol) => write!(f, "tolerance must be positive, got {tol}"),
            Error::InvalidProblem(msg) => write!(f, "invalid problem: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
