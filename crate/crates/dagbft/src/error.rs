//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("committee size {0} is not of the form 3f+1 with f >= 1")]
    BadCommitteeSize(usize),
    #[error("wave length {0} is below the minimum secure distance of 3")]
    BadWaveLength(u64),
    #[error("number of proposers {got} must be in 1..={max}")]
    BadProposerCount { got: usize, max: usize },
    #[error("{0}")]
    Invalid(String),
}

/// Machine-readable reason a block failed validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RejectReason {
    MissingOwnParentFirst,
    InsufficientPreviousRoundParents,
    DuplicateParents,
    ParentRoundNotLower,
    TimestampBelowParent,
    TimestampTooFarFuture,
    WrongEpoch,
    BadSignature,
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RejectReason::MissingOwnParentFirst => "missing-own-parent-first",
            RejectReason::InsufficientPreviousRoundParents => "insufficient-previous-round-parents",
            RejectReason::DuplicateParents => "duplicate-parents",
            RejectReason::ParentRoundNotLower => "parent-round-not-lower",
            RejectReason::TimestampBelowParent => "timestamp-below-parent",
            RejectReason::TimestampTooFarFuture => "timestamp-too-far-future",
            RejectReason::WrongEpoch => "wrong-epoch",
            RejectReason::BadSignature => "bad-signature",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum WalError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("checksum mismatch in record {index} at byte offset {offset}")]
    ChecksumMismatch { index: usize, offset: u64 },
    #[error("malformed record {index}: {reason}")]
    Malformed { index: usize, reason: String },
}

/// DSL parse error with a source position.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("parse error at line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self { line, column, message: message.into() }
    }
}
