use thiserror::Error;

use crate::precision::FloatFormat;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{format} overflow{}", step_suffix(*.step))]
    Overflow {
        format: FloatFormat,
        step: Option<usize>,
    },

    #[error("non-finite input {0}")]
    NonFinite(f64),

    #[error("operands have different formats ({left} and {right})")]
    FormatMismatch {
        left: FloatFormat,
        right: FloatFormat,
    },

    #[error("{value:e} is not exactly representable in {format}")]
    NotRepresentable { value: f64, format: FloatFormat },

    #[error("empty input")]
    EmptyInput,

    #[error("exact sum is zero; relative error is undefined")]
    ZeroSum,

    #[error("failure probability {0} outside (0, 1)")]
    FailureProbability(f64),

    #[error("index {index} outside {lo}..={hi}")]
    Index { index: usize, lo: usize, hi: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn step_suffix(step: Option<usize>) -> String {
    step.map(|k| format!(" at step {k}")).unwrap_or_default()
}
