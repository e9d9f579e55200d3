//! Error and warning types shared across the crate.

use serde::Serialize;
use thiserror::Error;

use crate::frechet::KernelSide;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: {left} vs {right}")]
    ShapeMismatch { left: String, right: String },

    #[error("space mismatch: {left} vs {right}")]
    SpaceMismatch { left: String, right: String },

    #[error("non-finite value in payload at index {index}")]
    NonFinite { index: usize },

    #[error("invalid object: {0}")]
    InvalidObject(String),

    #[error("points are antipodal; the geodesic is not unique")]
    AntipodalPoints,

    #[error("transported point leaves the feasible set: {0}")]
    TransportOutOfSpace(String),

    #[error("no isometric Hilbert embedding for space `{0}`")]
    EmbeddingUnavailable(String),

    #[error("point lies outside the embedded image of the space (residual {residual:.3e})")]
    InverseInfeasible { residual: f64 },

    #[error("log/exp maps are not available for space `{0}`")]
    LogExpUnavailable(String),

    #[error("exp argument leaves the injectivity domain: {0}")]
    ExpOutOfDomain(String),

    #[error("degenerate {side} window (sigma^2 = {sigma2:.3e}, {support} supporting points)")]
    DegenerateWindow {
        side: KernelSide,
        sigma2: f64,
        support: usize,
    },

    #[error("empty input")]
    EmptyInput,

    #[error("weights sum to {sum:.3e}; the weighted Frechet objective has no minimizer")]
    NonPositiveWeightSum { sum: f64 },

    #[error("Frechet solver diverged: {0}")]
    SolverDiverged(String),

    #[error("treatment column `t` is required")]
    MissingTreatment,

    #[error("assignment column `z` is required")]
    MissingAssignment,

    #[error("weak compliance: treatment-rate jump {denominator:.4} is below {threshold}")]
    WeakCompliance { denominator: f64, threshold: f64 },

    #[error("{stratum} stratum has no usable observations near the cutoff")]
    EmptyStratum { stratum: &'static str },

    #[error("need at least 20 observations on each side of the cutoff (below: {below}, at/above: {above})")]
    InsufficientData { below: usize, above: usize },

    #[error("bandwidth bounds inverted: b_min = {b_min:.6} >= b_max = {b_max:.6}")]
    InvertedBounds { b_min: f64, b_max: f64 },

    #[error("every evaluation point had a degenerate window")]
    AllWindowsDegenerate,

    #[error("campaign failed: {failed} of {total} replications failed")]
    CampaignFailed { failed: usize, total: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("row {row}: {detail}")]
    InvariantViolation { row: usize, detail: String },

    #[error("row {row}: object space differs from earlier rows")]
    MixedSpaces { row: usize },

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::ShapeMismatch { .. } => "shape_mismatch",
            Error::SpaceMismatch { .. } => "space_mismatch",
            Error::NonFinite { .. } => "non_finite",
            Error::InvalidObject(_) => "invalid_object",
            Error::AntipodalPoints => "antipodal_points",
            Error::TransportOutOfSpace(_) => "transport_out_of_space",
            Error::EmbeddingUnavailable(_) => "embedding_unavailable",
            Error::InverseInfeasible { .. } => "inverse_infeasible",
            Error::LogExpUnavailable(_) => "logexp_unavailable",
            Error::ExpOutOfDomain(_) => "exp_out_of_domain",
            Error::DegenerateWindow { .. } => "degenerate_window",
            Error::EmptyInput => "empty_input",
            Error::NonPositiveWeightSum { .. } => "non_positive_weight_sum",
            Error::SolverDiverged(_) => "solver_diverged",
            Error::MissingTreatment => "missing_treatment",
            Error::MissingAssignment => "missing_assignment",
            Error::WeakCompliance { .. } => "weak_compliance",
            Error::EmptyStratum { .. } => "empty_stratum",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::InvertedBounds { .. } => "inverted_bounds",
            Error::AllWindowsDegenerate => "all_windows_degenerate",
            Error::CampaignFailed { .. } => "campaign_failed",
            Error::InvalidConfig(_) => "invalid_config",
            Error::Parse { .. } => "parse_error",
            Error::InvariantViolation { .. } => "invariant_violation",
            Error::MixedSpaces { .. } => "mixed_spaces",
            Error::Io(_) => "io_error",
        }
    }

    /// True for failures caused by the data rather than by the caller:
    /// thin windows and weak first stages.
    pub fn is_estimation_failure(&self) -> bool {
        matches!(
            self,
            Error::DegenerateWindow { .. }
                | Error::WeakCompliance { .. }
                | Error::EmptyStratum { .. }
                | Error::AllWindowsDegenerate
                | Error::InsufficientData { .. }
                | Error::InvertedBounds { .. }
                | Error::NonPositiveWeightSum { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Non-fatal conditions attached to estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Warning {
    /// A Hilbert-space point was metric-projected back onto the embedded image.
    ProjectionApplied,
    /// An exp-map image left the positive orthant and was projected.
    ExpOutOfDomain,
    /// Multistart runs of the sphere solver converged to different points.
    MultistartDisagreement,
    /// The noncompliance stratum was empty but the compliance jump was one,
    /// so the stratum mean dropped out of the endpoint formula.
    StratumUnused,
}
