use std::path::PathBuf;

use thiserror::Error;

/// Every failure the toolkit can report.
///
/// Variants are grouped by the CLI exit-code class they map to (see
/// [`Error::class`]).
#[derive(Debug, Error)]
pub enum Error {
    // --- data / validation ---
    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("schema violation in {path}: {message}")]
    Schema { path: PathBuf, message: String },
    #[error("unsupported format_version {found} in {path} (expected {expected})")]
    Version {
        path: PathBuf,
        found: i64,
        expected: u32,
    },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("embedding '{id}' has kind {found}, expected {expected}")]
    KindMismatch {
        id: String,
        expected: &'static str,
        found: &'static str,
    },
    #[error("no embedding with id '{0}'")]
    UnknownId(String),
    #[error("incompatible configuration: {0}")]
    IncompatibleConfig(String),
    #[error("invalid augmenting power {alpha}: {reason}")]
    InvalidAlpha { alpha: f64, reason: &'static str },
    #[error("alpha {alpha} exceeds the {members} members of the sample set")]
    AlphaExceedsCorpus { alpha: usize, members: usize },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("bad generator dimensions: {0}")]
    BadDims(String),
    #[error("item '{id}' has no tag for grouping key '{key}'")]
    MissingTag { id: String, key: String },
    #[error("group '{0}' has no pairs to average")]
    EmptyGroup(String),
    #[error("unknown fixture recipe '{0}'")]
    UnknownRecipe(String),

    // --- numeric / degenerate ---
    #[error("zero-length vector")]
    ZeroVector,
    #[error("degenerate basis: prompt '{label}' is (nearly) in the span of the previous prompts (residual norm {residual:.3e})")]
    DegenerateBasis { label: String, residual: f64 },
    #[error("rank deficient: corpus covariance has rank {rank}, {requested} components requested")]
    RankDeficient { rank: usize, requested: usize },
    #[error("projected text coefficients sum to {sum:.3e}; cannot rescale")]
    NullTextProjection { sum: f64 },
    #[error("vector is not in the subspace span (distance {distance:.3e})")]
    SubspaceViolation { distance: f64 },
    #[error("degenerate direction: {what}{}", step.map(|s| format!(" at step {s}")).unwrap_or_default())]
    DegenerateDirection {
        what: &'static str,
        step: Option<usize>,
    },
}

/// Coarse error class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Data,
    Numeric,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            Parse { .. }
            | Schema { .. }
            | Version { .. }
            | Io { .. }
            | DimMismatch { .. }
            | EmptyInput(_)
            | KindMismatch { .. }
            | UnknownId(_)
            | IncompatibleConfig(_)
            | InvalidAlpha { .. }
            | AlphaExceedsCorpus { .. }
            | InvalidParameter { .. }
            | BadDims(_)
            | MissingTag { .. }
            | EmptyGroup(_)
            | UnknownRecipe(_) => ErrorClass::Data,
            ZeroVector
            | DegenerateBasis { .. }
            | RankDeficient { .. }
            | NullTextProjection { .. }
            | SubspaceViolation { .. }
            | DegenerateDirection { .. } => ErrorClass::Numeric,
        }
    }

    /// Variant name, as printed by the CLI.
    pub fn name(&self) -> &'static str {
        use Error::*;
        match self {
            Parse { .. } => "ParseError",
            Schema { .. } => "SchemaError",
            Version { .. } => "VersionError",
            Io { .. } => "IoError",
            DimMismatch { .. } => "DimMismatch",
            EmptyInput(_) => "EmptyInput",
            KindMismatch { .. } => "KindMismatch",
            UnknownId(_) => "UnknownId",
            IncompatibleConfig(_) => "IncompatibleConfig",
            InvalidAlpha { .. } => "InvalidAlpha",
            AlphaExceedsCorpus { .. } => "AlphaExceedsCorpus",
            InvalidParameter { .. } => "InvalidParameter",
            BadDims(_) => "BadDims",
            MissingTag { .. } => "MissingTag",
            EmptyGroup(_) => "EmptyGroup",
            UnknownRecipe(_) => "UnknownRecipe",
            ZeroVector => "ZeroVector",
            DegenerateBasis { .. } => "DegenerateBasis",
            RankDeficient { .. } => "RankDeficient",
            NullTextProjection { .. } => "NullTextProjection",
            SubspaceViolation { .. } => "SubspaceViolation",
            DegenerateDirection { .. } => "DegenerateDirection",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attach a step index to a `DegenerateDirection` error.
    pub(crate) fn at_step(self, index: usize) -> Self {
        match self {
            Error::DegenerateDirection { what, .. } => Error::DegenerateDirection {
                what,
                step: Some(index),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
