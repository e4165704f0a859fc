use core::fmt;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Torus dimension outside `1..=3`.
    DimensionOutOfRange(usize),
    /// Side-length / resolution vectors disagree with the dimension.
    ShapeMismatch { expected: usize, found: usize },
    /// A torus axis resolution is odd or below the minimum of 8.
    InvalidResolution { axis: usize, resolution: usize },
    /// A torus side length is not strictly positive and finite.
    InvalidSideLength { axis: usize, length: f64 },
    /// Icosphere subdivision below 2.
    InvalidSubdivision(u32),
    /// Operation is only implemented for the flat torus backend.
    UnsupportedBackend(&'static str),
    /// Field length disagrees with the manifold's node count.
    FieldLength { expected: usize, found: usize },
    /// A node index beyond the manifold's node count.
    NodeOutOfRange { node: usize, node_count: usize },
    /// A strictly positive field was required.
    NonPositive { node: usize, value: f64 },
    /// A Crank-Nicolson step produced a non-positive node.
    PositivityLoss { node: usize, value: f64, time: f64 },
    /// The conjugate-gradient solve did not reach its tolerance.
    SolverStalled { iterations: usize, relative_residual: f64 },
    /// Time-stepping parameters that cannot describe a trajectory.
    InvalidTimeGrid(&'static str),
    /// A time value off the trajectory's snapshot grid.
    TimeNotOnGrid(f64),
    /// Index outside the valid range of a trajectory.
    IndexOutOfRange { index: usize, len: usize },
    /// Backward trajectory passed where a forward one is required.
    WrongDirection,
    /// `t2 <= t1` in a space-time pair.
    NonIncreasingTimes { t1: f64, t2: f64 },
    /// Harnack parameters with `alpha == 0`.
    ZeroAlpha,
    /// Trajectory too short for the requested operation.
    TooShort { len: usize, min: usize },
    /// Scan ranges that do not describe a grid.
    InvalidScanGrid(&'static str),
    /// Initial data not available on this manifold.
    UnsupportedInitialData(&'static str),
    /// Invalid parameter value.
    InvalidParameter(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionOutOfRange(n) => write!(f, "torus dimension {n} is outside 1..=3"),
            Error::ShapeMismatch { expected, found } => {
                write!(f, "expected {expected} per-axis entries, found {found}")
            }
            Error::InvalidResolution { axis, resolution } => write!(
                f,
                "axis {axis}: resolution {resolution} must be even and at least 8"
            ),
            Error::InvalidSideLength { axis, length } => {
                write!(f, "axis {axis}: side length {length} must be positive")
            }
            Error::InvalidSubdivision(s) => {
                write!(f, "icosphere subdivision {s} is below the minimum of 2")
            }
            Error::UnsupportedBackend(op) => {
                write!(f, "{op} is only available on the flat torus backend")
            }
            Error::FieldLength { expected, found } => {
                write!(f, "field has {found} values, manifold has {expected} nodes")
            }
            Error::NodeOutOfRange { node, node_count } => {
                write!(f, "node {node} out of range (node count {node_count})")
            }
            Error::NonPositive { node, value } => {
                write!(f, "non-positive value {value} at node {node}")
            }
            Error::PositivityLoss { node, value, time } => write!(
                f,
                "positivity lost at time {time}: node {node} has value {value}; reduce dt"
            ),
            Error::SolverStalled { iterations, relative_residual } => write!(
                f,
                "conjugate gradient stalled after {iterations} iterations (relative residual {relative_residual:e})"
            ),
            Error::InvalidTimeGrid(why) => write!(f, "invalid time grid: {why}"),
            Error::TimeNotOnGrid(t) => write!(f, "time {t} is not a snapshot time"),
            Error::IndexOutOfRange { index, len } => {
                write!(f, "index {index} out of range for trajectory of length {len}")
            }
            Error::WrongDirection => write!(f, "operation requires a forward trajectory"),
            Error::NonIncreasingTimes { t1, t2 } => {
                write!(f, "space-time pair needs t2 > t1, got t1={t1}, t2={t2}")
            }
            Error::ZeroAlpha => write!(f, "Harnack parameter alpha must be nonzero"),
            Error::TooShort { len, min } => {
                write!(f, "trajectory has {len} states, need at least {min}")
            }
            Error::InvalidScanGrid(why) => write!(f, "invalid scan grid: {why}"),
            Error::UnsupportedInitialData(why) => write!(f, "unsupported initial data: {why}"),
            Error::InvalidParameter(why) => write!(f, "invalid parameter: {why}"),
        }
    }
}

impl core::error::Error for Error {}
