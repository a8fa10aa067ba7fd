use thiserror::Error;

pub type Result<T> = std::result::Result<T, VemError>;

#[derive(Debug, Clone, Error)]
pub enum VemError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("degenerate domain ({domain}): {detail}")]
    DegenerateDomain { domain: String, detail: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("conformity violation at face {face}: {detail}")]
    Conformity { face: usize, detail: String },

    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error("degenerate element {cell}: pivot {pivot:.3e} below tolerance")]
    DegenerateElement { cell: usize, pivot: f64 },

    #[error("factorization breakdown at column {column}: pivot {pivot:.3e}")]
    Factorization { column: usize, pivot: f64 },

    #[error("iterative solver failed after {iterations} iterations (relative residual {last:.3e})")]
    IterativeFailure {
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("i/o error on {path}: {detail}")]
    Io { path: String, detail: String },
}

impl VemError {
    pub(crate) fn degenerate(domain: impl Into<String>, detail: impl Into<String>) -> Self {
        VemError::DegenerateDomain {
            domain: domain.into(),
            detail: detail.into(),
        }
    }

    /// Short machine-readable tag, used in experiment reports.
    pub fn kind(&self) -> &'static str {
        match self {
            VemError::InvalidGeometry(_) => "invalid-geometry",
            VemError::DegenerateDomain { .. } => "degenerate-domain",
            VemError::InvalidArgument(_) => "invalid-argument",
            VemError::InvalidMesh(_) => "invalid-mesh",
            VemError::Conformity { .. } => "conformity",
            VemError::Parse { .. } => "parse",
            VemError::DegenerateElement { .. } => "degenerate-element",
            VemError::Factorization { .. } => "factorization",
            VemError::IterativeFailure { .. } => "iterative-failure",
            VemError::Io { .. } => "io",
        }
    }
}
