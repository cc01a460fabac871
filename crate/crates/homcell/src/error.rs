use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type. Variants carry enough context to attribute a
/// failure to the pipeline stage that produced it.
#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: expected {expected}, found {found}")]
    Syntax { offset: usize, expected: String, found: String },
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("unknown identifier `{0}` (not x, y, or a declared parameter)")]
    UnknownIdentifier(String),
    #[error("domain error evaluating expression: {0}")]
    EvalDomain(String),
    #[error("unknown builtin map `{0}`")]
    UnknownBuiltin(String),
    #[error("parameter error for `{map}`: {detail}")]
    BadParameter { map: String, detail: String },
    #[error("ODE integration failed: {0}")]
    Integration(String),
    #[error("Newton iteration failed: {0}")]
    NewtonFailure(String),
    #[error("map has no computable inverse: {0}")]
    NoInverse(String),
    #[error("fixed point of the map lies on the probing curve (min displacement {0:e})")]
    FixedPointOnCurve(f64),
    #[error("refinement exhausted: {0}")]
    RefinementExhausted(String),
    #[error("fixed point not isolated: radii disagree down to r = {0:e}")]
    NotIsolated(f64),
    #[error("point is not a saddle: {0}")]
    NotASaddle(String),
    #[error("manifold left the working rectangle at {x}, {y}")]
    LeftWorkingRectangle { x: f64, y: f64 },
    #[error("parameter out of the grown range: {0}")]
    OutOfRange(String),
    #[error("degenerate homoclinic loop: {0}")]
    DegenerateLoop(String),
    #[error("ambiguous cell sign: {0}")]
    AmbiguousSign(String),
    #[error("chart representations disagree on the overlap annulus: {0}")]
    ChartInconsistency(String),
    #[error("theorem hypothesis unmet: {0}")]
    HypothesisUnmet(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("no homoclinic point found: {0}")]
    NoHomoclinicPoint(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
