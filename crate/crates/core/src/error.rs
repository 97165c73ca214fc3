use thiserror::Error;

/// Errors raised by the library. Variants map one-to-one onto contract
/// violations of the individual operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("vertex {vertex} out of range for a graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("torus side {0} is too small (need at least 3)")]
    SideTooSmall(usize),
    #[error("torus dimension must be at least 1")]
    ZeroDimension,
    #[error("vertex set is empty")]
    EmptySet,
    #[error("no radius in [{lo}, {hi}] satisfies the conductance bound")]
    NotFound { lo: usize, hi: usize },
    #[error("graph is disconnected")]
    Disconnected,
    #[error("graph is not bipartite")]
    NotBipartite,
    #[error("invalid growth parameters: c0 = {c0}, alpha = {alpha}")]
    BadGrowthParams { c0: f64, alpha: f64 },
    #[error("color {color} out of range for q = {q}")]
    ColorOutOfRange { color: usize, q: usize },
    #[error("q = {0} is invalid (need q >= 2)")]
    BadColorCount(usize),
    #[error("side {n} is not a multiple of q = {q}")]
    NotMultiple { n: usize, q: usize },
    #[error("pattern component {component} out of range for q = {q}")]
    ComponentOutOfRange { component: usize, q: usize },
    #[error("pattern vector has length {got}, expected dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("theta = {0} is outside (0, 1]")]
    BadTheta(f64),
    #[error("parameter mismatch: {0}")]
    ParamMismatch(String),
    #[error("time {0} is negative or not finite")]
    NegativeTime(f64),
    #[error("event cap of {0} events exceeded")]
    EventCap(u64),
    #[error("all walkers not dead within {0} time units")]
    EpochCap(f64),
    #[error("power k = {k} outside [1, {q})")]
    KOutOfRange { k: usize, q: usize },
    #[error("u and v must be distinct (got {0} twice)")]
    SameVertex(usize),
    #[error("threshold never crossed on the time grid")]
    GridExhausted,
    #[error("time grid must be nonempty and strictly increasing")]
    BadGrid,
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("graph with {0} vertices exceeds the dense eigensolver cap")]
    TooLarge(usize),
    #[error("eigensolver failed to converge after {0} sweeps")]
    EigenNoConvergence(usize),
    #[error("coalescence estimate h_G({vertex}) = {value} is outside [0, 1]")]
    BadHG { vertex: usize, value: f64 },
    #[error("state space q^n = {q}^{n} exceeds the cap of 2^22 states")]
    StateSpaceTooLarge { q: usize, n: usize },
    #[error("power iteration did not converge within {0} iterations")]
    NoConvergence(u64),
    #[error("distributions have different shapes")]
    ShapeMismatch,
    #[error("at least {need} replicates required, got {got}")]
    TooFewReplicates { need: usize, got: usize },
    #[error("start distribution must be supported on S with positive total mass")]
    BadStart,
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
