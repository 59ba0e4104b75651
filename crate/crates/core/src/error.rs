use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("route of flow {flow} starts or ends at retired UAV {uav}")]
    EndpointRetired { flow: usize, uav: usize },

    #[error("invalid route for flow {flow}: {reason}")]
    InvalidRoute { flow: usize, reason: String },

    #[error("instance is empty: no flows and no retired UAVs")]
    EmptyInstance,

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("instance has {n} flows, above the solver cap of {cap}")]
    InstanceTooLarge { n: usize, cap: usize },

    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),

    #[error("no route between UAV {src} and UAV {dst}")]
    Unreachable { src: usize, dst: usize },

    #[error("could not sample a routable flow after {attempts} attempts")]
    SamplingExhausted { attempts: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("relation is not a strict total order: {0}")]
    InvalidOrder(String),

    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("malformed CSV at line {line}: {reason}")]
    Csv { line: usize, reason: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
