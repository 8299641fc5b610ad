use thiserror::Error;

/// Errors raised by the arithmetic and combinatorial core.
#[derive(Error, Debug)]
pub enum CoreError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point is not on the lattice: coordinate {index} = {value}")]
    NotOnLattice { index: usize, value: String },

    #[error("invalid data: {0}")]
    Invalid(String),

    #[error("group law validation failed: {axiom} (witness {witness})")]
    ValidationFailed { axiom: String, witness: String },

    #[error("output budget exceeded: need {needed} points, budget is {budget}")]
    BudgetExceeded { needed: String, budget: u64 },

    #[error("degenerate box: coordinate {index} has lo >= hi")]
    DegenerateBox { index: usize },

    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error("arithmetic overflow in lattice coordinates")]
    Overflow,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CoreError {
    pub fn parse(line: usize, col: usize, msg: impl Into<String>) -> Self {
        CoreError::Parse {
            line,
            col,
            msg: msg.into(),
        }
    }
}
