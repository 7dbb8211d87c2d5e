use thiserror::Error;

/// Errors raised while building, simulating, reducing or fitting a network.
#[derive(Debug, Error)]
pub enum Error {
    #[error("model file: {0}")]
    Schema(String),

    #[error("unknown parameter \"{0}\"")]
    UnknownParameter(String),

    #[error("unknown species \"{0}\"")]
    UnknownSpecies(String),

    #[error("negative stoichiometry for species \"{species}\" in reaction {reaction}")]
    NegativeStoichiometry { reaction: usize, species: String },

    #[error("expression syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("division by zero in propensity of reaction {reaction}")]
    DivisionByZero { reaction: usize },

    #[error("non-finite propensity in reaction {reaction}")]
    NonFinite { reaction: usize },

    #[error("zero propensity in reaction {reaction}, gradient of log undefined")]
    ZeroPropensity { reaction: usize },

    #[error("zero propensity with nonzero derivative at sample {sample}, reaction {reaction}, parameter {parameter}")]
    SingularInformation { sample: usize, reaction: usize, parameter: usize },

    #[error("simulation blow-up at t = {time}")]
    BlowUp { time: f64 },

    #[error("jump count exceeded {limit} before t_end")]
    TooManyJumps { limit: usize },

    #[error("no information in data: all pFIM diagonal entries are zero")]
    NoInformation,

    #[error("degenerate metric: projected diffusion is numerically zero at every sample")]
    DegenerateMetric,

    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("species not present in reduced model: {0:?}")]
    MissingSpecies(Vec<String>),

    #[error("species \"{0}\" is not resolved by the reduced model")]
    UnresolvedSpecies(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
