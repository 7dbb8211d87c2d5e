//! Information-driven reduction of parameterized reaction networks.
//!
//! The crate covers the whole workflow: simulate a full network
//! ([`simulate`]), screen its parameters with the pathwise Fisher
//! information ([`fim`]), build a reduced network from the sensitive
//! stoichiometry ([`reduce`]), fit the reduced parameters against
//! time-series data ([`train`]) and check the result ([`validate`]).
//! [`pipeline`] chains the steps over a ladder of information thresholds.
//!
//! Numerical kernels are generic over [`Scalar`] (`f32`/`f64`); the
//! aliases below fix the scalar to `f64`, which is what the pipeline and
//! the command-line tool use.

pub mod error;
pub mod expr;
pub mod fim;
pub mod linalg;
pub mod network;
pub mod pipeline;
pub mod reduce;
pub mod scalar;
pub mod simulate;
pub mod train;
pub mod validate;

pub use error::{Error, Result};
pub use expr::Expr;
pub use fim::{InformationRanking, Scale};
pub use network::{parse_model, Reaction, ReactionNetwork};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineOutcome};
pub use reduce::{ReducedModel, ReductionMaps};
pub use scalar::Scalar;
pub use simulate::{Ensemble, Method};
pub use train::{LossData, Optimizer, TrainOptions, TrainingResult};
pub use validate::{BootstrapSummary, Reference, ValidationReport};

/// Time series in `f64`.
pub type TimeSeries = simulate::TimeSeries<f64>;
/// Time series in `f32`.
pub type TimeSeries32 = simulate::TimeSeries<f32>;

/// Dense square matrix in `f64`.
pub type Matrix = linalg::Matrix<f64>;
/// Dense square matrix in `f32`.
pub type Matrix32 = linalg::Matrix<f32>;
