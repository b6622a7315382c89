use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error, PartialEq)]
pub enum Error {
    #[error("vertex index {index} out of range for graph with {n} vertices")]
    VertexOutOfRange { index: usize, n: usize },
    #[error("graph size {n} below minimum {min} for this construction")]
    SizeBelowMinimum { n: usize, min: usize },
    #[error("n*k must be even for a k-regular graph (n={n}, k={k})")]
    DegreeParity { n: usize, k: usize },
    #[error("regular-graph resampling budget exhausted after {attempts} attempts")]
    ResamplingBudget { attempts: usize },
    #[error("vertex function length {got} does not match vertex count {expected}")]
    VertexLengthMismatch { got: usize, expected: usize },
    #[error("edge function length {got} does not match directed edge count {expected}")]
    EdgeLengthMismatch { got: usize, expected: usize },
    #[error("non-finite value at position {index}")]
    NonFiniteValue { index: usize },
    #[error("non-positive entry {value} at vertex {index}; level decomposition needs positive values")]
    NonPositiveEntry { index: usize, value: f64 },
    #[error("graph with {n} vertices exceeds the exact enumeration cap {cap}")]
    ExactCapExceeded { n: usize, cap: usize },
    #[error("expander check on {n} vertices above cap {cap} is inconclusive: heuristic bound {bound} does not refute h >= {eps}")]
    ExpanderCheckInconclusive { n: usize, cap: usize, bound: f64, eps: f64 },
    #[error("eigensolver did not converge after {sweeps} sweeps")]
    EigenNonConvergence { sweeps: usize },
    #[error("unknown family generator `{0}`")]
    UnknownGenerator(String),
    #[error("family index range is empty")]
    EmptyRange,
    #[error("family is empty")]
    EmptyFamily,
    #[error("missing generator parameter `{0}`")]
    MissingParam(&'static str),
    #[error("linear program size {size} exceeds cap {cap}")]
    LpCapExceeded { size: usize, cap: usize },
    #[error("linear program did not terminate within {pivots} pivots")]
    LpStalled { pivots: usize },
    #[error("row norm {norm} at point {index} below unit threshold {threshold}")]
    RowNormBelowUnit { index: usize, norm: f64, threshold: f64 },
    #[error("kernel row-sum deviation {dev} exceeds budget {budget}")]
    RowSumDeviation { dev: f64, budget: f64 },
    #[error("kernel is not symmetric: defect {defect} at pair ({x}, {z})")]
    AsymmetricKernel { defect: f64, x: usize, z: usize },
    #[error("support radius {s} reaches across components: separation of component {index} is {separation}")]
    SeparationTooSmall { s: u32, index: usize, separation: u64 },
    #[error("malformed spec: {0}")]
    MalformedSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
