use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write output: {0}")]
    Write(#[from] std::io::Error),
    #[error("cannot parse {}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("{}{source}", path.as_ref().map(|p| format!("{}: ", p.display())).unwrap_or_default())]
    Core {
        path: Option<PathBuf>,
        source: polyperturb::Error,
    },
}

impl From<polyperturb::Error> for CliError {
    fn from(source: polyperturb::Error) -> Self {
        Self::Core { path: None, source }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
    path: Option<String>,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Core {
                source: polyperturb::Error::SolverStalled { .. },
                ..
            } => 3,
            Self::Write(_) => 1,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Usage(_) => "usage",
            Self::Read { .. } => "read",
            Self::Write(_) => "write",
            Self::Parse { .. } => "parse",
            Self::Core { source, .. } => core_kind(source),
        }
    }

    fn path(&self) -> Option<String> {
        match self {
            Self::Read { path, .. } | Self::Parse { path, .. } => Some(path.display().to_string()),
            Self::Core { path, .. } => path.as_ref().map(|p| p.display().to_string()),
            _ => None,
        }
    }

    /// `{"error": {"kind", "message", "path"}}` on one line.
    pub fn to_json(&self) -> String {
        let body = ErrorBody {
            kind: self.kind(),
            message: self.to_string(),
            path: self.path(),
        };
        serde_json::json!({ "error": body }).to_string()
    }
}

fn core_kind(e: &polyperturb::Error) -> &'static str {
    use polyperturb::Error::*;
    match e {
        DegenerateInput(_) => "degenerate_input",
        TooManyVertices { .. } => "too_many_vertices",
        Unbounded => "unbounded",
        Empty => "empty",
        GenericityFailure { .. } => "genericity_failure",
        DegenerateSimplex(_) => "degenerate_simplex",
        DimensionMismatch { .. } => "dimension_mismatch",
        DegreeTooHigh { .. } => "degree_too_high",
        ChartMismatch(_) => "chart_mismatch",
        IllConditioned(_) => "ill_conditioned",
        NotIsotropic(_) => "not_isotropic",
        EdgeNotInFacet { .. } => "edge_not_in_facet",
        NoSuchFacet(_) => "no_such_facet",
        NotGeneric { .. } => "not_generic",
        RangeExceeded { .. } => "range_exceeded",
        DegenerateResult(_) => "degenerate_result",
        ResolutionTooHigh { .. } => "resolution_too_high",
        MassMismatch(..) => "mass_mismatch",
        NegativeWeight(_) => "negative_weight",
        TooManyAtoms { .. } => "too_many_atoms",
        TriangulationMismatch(_) => "triangulation_mismatch",
        SolverStalled { .. } => "solver_stalled",
        InvalidArgument(_) => "invalid_argument",
    }
}
