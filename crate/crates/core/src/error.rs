use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("network is disconnected ({components} components)")]
    DisconnectedGraph { components: usize },
    #[error("edge {u}-{v} has nonpositive conductance {c}")]
    NonpositiveConductance { u: String, v: String, c: f64 },
    #[error("duplicate edge {u}-{v}")]
    DuplicateEdge { u: String, v: String },
    #[error("self-loop at vertex {0}")]
    SelfLoop(String),
    #[error("interior carries no m0 mass")]
    EmptyInterior,
    #[error("network has no boundary vertices")]
    EmptyBoundary,
    #[error("boundary vertex {0} carries nonzero m0 mass")]
    BoundaryMass(String),
    #[error("vertex {id}: invalid measure value {value}")]
    InvalidMeasure { id: String, value: f64 },
    #[error("unknown vertex id {0:?}")]
    UnknownVertex(String),
    #[error("duplicate vertex id {0:?}")]
    DuplicateVertex(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value in input")]
    NonFinite,

    #[error("generator level {level} outside supported range {min}..={max}")]
    LevelOutOfRange { level: usize, min: usize, max: usize },
    #[error("bad generator dimensions: {0}")]
    BadDimensions(String),

    #[error("linear solve failed: {0}")]
    SolverFailure(String),
    #[error("restricted Laplacian is singular: {0}")]
    SingularRestriction(String),
    #[error("vertex {0} is not interior")]
    NotInterior(String),
    #[error("invalid vertex set: {0}")]
    BadSet(String),
    #[error("condenser set has zero capacity")]
    ZeroCapacity,

    #[error("trace off-diagonal entry ({x},{y}) is positive ({value:e})")]
    NegativeOffDiagonal { x: usize, y: usize, value: f64 },
    #[error("trace killing weight at {x} is negative ({value:e})")]
    NegativeKilling { x: usize, value: f64 },
    #[error("trace energy does not match harmonic extension energy (rel. dev {0:e})")]
    TraceMismatch(f64),
    #[error("reference measure has zero mass at boundary position {0}")]
    ZeroMass(usize),

    #[error("empty ball around boundary position {x} at radius {r}")]
    EmptyBall { x: usize, r: f64 },
    #[error("fewer than {needed} admissible scales (found {found})")]
    InsufficientScales { needed: usize, found: usize },
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("no admissible scales for {0}")]
    NoAdmissibleScales(String),
    #[error("degenerate exponent fit: {0}")]
    DegenerateFit(String),
    #[error("symmetric eigendecomposition failed")]
    EigenFailure,
    #[error("time window is empty: [{lo}, {hi}]")]
    WindowEmpty { lo: f64, hi: f64 },
    #[error("exit-time system on ball around {0} is singular")]
    SingularBallSystem(usize),

    #[error("no admissible Whitney centers above the truncation floor")]
    ResolutionTooCoarse,
    #[error("vertex {0} above the truncation floor is not covered")]
    UncoveredVertex(usize),
    #[error("Whitney patch {0} has zero measure")]
    EmptyPatch(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("I/O error: {0}")]
    Io(String),
    #[error("malformed JSON: {0}")]
    Json(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
