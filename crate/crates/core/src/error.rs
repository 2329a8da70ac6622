use std::fmt;

use thiserror::Error;

/// Category of a scenario or configuration constraint that failed validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    /// Fewer than two quality dimensions.
    Axiom1,
    /// Coverage outside `1 <= K < N`.
    Axiom2,
    /// Alignment gap outside the open unit interval.
    AlignmentGapRange,
    /// A weight, budget or price that must be strictly positive is not.
    Positivity,
    /// Production scale or exponent out of range.
    ProductionParams,
    /// A sequence has the wrong length.
    Shape,
    /// A configuration parameter outside its admissible range.
    ConfigRange,
}

impl ViolationKind {
    pub fn code(self) -> &'static str {
        match self {
            ViolationKind::Axiom1 => "axiom1",
            ViolationKind::Axiom2 => "axiom2",
            ViolationKind::AlignmentGapRange => "alignment_gap_range",
            ViolationKind::Positivity => "positivity",
            ViolationKind::ProductionParams => "production_params",
            ViolationKind::Shape => "shape",
            ViolationKind::ConfigRange => "config_range",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub field: String,
    pub message: String,
}

impl Violation {
    pub fn new(kind: ViolationKind, field: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            kind,
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({}): {}", self.kind.code(), self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Every violated constraint, not just the first one found.
    #[error("invalid input: {}", join_violations(.0))]
    Invalid(Vec<Violation>),

    #[error("domain: {0}")]
    Domain(String),

    #[error("bracket: could not bracket the budget multiplier ({0})")]
    Bracket(String),

    #[error("oracle_dims: grid oracle supports at most {max} dimensions, got {got}")]
    OracleDims { max: usize, got: usize },

    #[error("oracle_budget: grid oracle would visit {points} points (limit {limit})")]
    OracleBudget { points: u128, limit: u128 },

    #[error("shape: {0}")]
    Shape(String),

    #[error("gradient_sign: gradient entry {index} is not strictly positive")]
    GradientSign { index: usize },

    #[error("axiom5_domain: tool count {0} is below 2")]
    Axiom5Domain(u64),

    #[error("sweep_budget: N(T) = {n} exceeds the solver limit {limit}")]
    SweepBudget { n: u64, limit: u64 },

    #[error("grid: {0}")]
    Grid(String),

    #[error("schema:{key}: {context}")]
    Schema { key: String, context: String },

    #[error("schema_type:{key}: {context}")]
    SchemaType { key: String, context: String },

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable code (`"axiom2"`, `"schema:lambda"`, ...).
    ///
    /// For [`Error::Invalid`] the code of the first violation is returned; use
    /// [`Error::violation_codes`] to see all of them.
    pub fn code(&self) -> String {
        match self {
            Error::Invalid(v) => v
                .first()
                .map(|v| v.kind.code().to_string())
                .unwrap_or_else(|| "invalid".to_string()),
            Error::Domain(_) => "domain".into(),
            Error::Bracket(_) => "bracket".into(),
            Error::OracleDims { .. } => "oracle_dims".into(),
            Error::OracleBudget { .. } => "oracle_budget".into(),
            Error::Shape(_) => "shape".into(),
            Error::GradientSign { .. } => "gradient_sign".into(),
            Error::Axiom5Domain(_) => "axiom5_domain".into(),
            Error::SweepBudget { .. } => "sweep_budget".into(),
            Error::Grid(_) => "grid".into(),
            Error::Schema { key, .. } => format!("schema:{key}"),
            Error::SchemaType { key, .. } => format!("schema_type:{key}"),
            Error::Io(_) => "io".into(),
        }
    }

    pub fn violation_codes(&self) -> Vec<&'static str> {
        match self {
            Error::Invalid(v) => v.iter().map(|v| v.kind.code()).collect(),
            _ => Vec::new(),
        }
    }

    pub(crate) fn invalid(kind: ViolationKind, field: &str, message: impl Into<String>) -> Self {
        Error::Invalid(vec![Violation::new(kind, field, message)])
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
