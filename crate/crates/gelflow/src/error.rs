use thiserror::Error;

/// Invalid material constants or other physical inputs.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    Invalid {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("unsupported spatial dimension {0} (only d = 2 is implemented)")]
    Dimension(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("validation failed: {0}")]
    Validation(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("singular matrix: no usable pivot at index {index}")]
    Singular { index: usize },
    #[error("rank-deficient augmented system: {0}")]
    RankDeficient(String),
    #[error("residual {residual:.3e} exceeds bound {bound:.3e} after refinement")]
    Inaccurate { residual: f64, bound: f64 },
    #[error("factorization failed: {0}")]
    Backend(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FemError {
    #[error("field has {found} coefficients, dof map has {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("expected a {expected} dof map, got {found}")]
    Space {
        expected: &'static str,
        found: &'static str,
    },
}

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error("prescribed divergence incompatible: integral of q is {found:.9e}, expected {expected:.9e}")]
    Incompatible { found: f64, expected: f64 },
    #[error("load not compatible: |integral of f over the boundary| = {0:.3e}")]
    LoadIncompatible(f64),
    #[error("invalid time grid: {0}")]
    TimeGrid(String),
    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<SchemeError>,
    },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {msg}")]
    Invalid { path: String, msg: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ConfigError {
    pub(crate) fn invalid(path: impl Into<String>, msg: impl Into<String>) -> Self {
        ConfigError::Invalid {
            path: path.into(),
            msg: msg.into(),
        }
    }
}

/// Anything that can stop a configured run.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("mesh: {0}")]
    Mesh(#[from] MeshError),
    #[error("solver: {0}")]
    Scheme(#[from] SchemeError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        RunError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
