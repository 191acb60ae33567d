//! Crate-wide error type.

use std::path::PathBuf;

use crate::tkg::Year;

#[derive(Debug, thiserror::Error)]
pub enum TkgcError {
    #[error("missing file: {0}")]
    MissingFile(PathBuf),
    #[error("{file}:{line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },
    #[error("dataset already augmented with inverse relations")]
    AlreadyAugmented,
    #[error("dataset not augmented; call augment_inverses first")]
    NotAugmented,
    #[error("time vocabulary needs at least 2 distinct years, found {0}")]
    DegenerateVocab(usize),
    #[error("year {0} not in time vocabulary")]
    UnknownYear(Year),
    #[error("invalid interval [{0}, {1}]")]
    InvalidInterval(Year, Year),
    #[error("unknown entity: {0}")]
    UnknownEntity(String),
    #[error("unknown relation: {0}")]
    UnknownRelation(String),
    #[error("embedding dimension must be at least 1")]
    ZeroDim,
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("rule head `{rule_head}` does not match query relation `{query}`")]
    HeadMismatch { rule_head: String, query: String },
    #[error("relation name `{0}` contains whitespace and cannot be serialized")]
    UnserializableName(String),
    #[error("rule file {file}:{line}: {msg}")]
    RuleParse {
        file: String,
        line: usize,
        msg: String,
    },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(
        "checkpoint rule-set hash mismatch: checkpoint has {expected}, rule set hashes to {found}"
    )]
    RuleHashMismatch { expected: String, found: String },
    #[error("non-finite loss at epoch {epoch}, quad {step}; training aborted")]
    NonFiniteLoss { epoch: usize, step: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, TkgcError>;
