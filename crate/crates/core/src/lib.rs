//! Streaming syslog anonymization and event-pattern encoding.
//!
//! The pipeline splits each entry into a timestamp and a message, finds
//! variable terms with an ordered set of regular expressions, removes the
//! terms a site policy marks as sensitive, replaces semantic-less variables
//! with placeholder constants and finally maps variable-free messages (event
//! patterns) onto short SHAKE-128 hash-keys. Every intermediate state is
//! scored with the entry quality function `Q = U * (n*N) * (s*S) * (r*R)`.

pub mod anonymizer;
pub mod codec;
pub mod detector;
pub mod entry;
pub mod policy;
pub mod quality;
pub mod stats;

pub use anonymizer::{Anonymizer, Candidate, EntryState, Mode, ProcessedEntry, StreamOptions, StreamRecord, TraceStep};
pub use codec::{EventPattern, HashKey, ReferenceTable, SharedTable};
pub use detector::{DetectedVariable, PatternSet, VariableClass};
pub use entry::{parse_line, parse_line_lenient, tokenize, LogEntry, Term};
pub use policy::PolicyTable;
pub use quality::{Coefficients, QualityScore};
pub use stats::{frequent_pattern_coverage, CompletenessMatrix, CorpusReport, CorpusStats, GapRun};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("malformed entry: {0}")]
    MalformedEntry(String),
    #[error("pattern `{name}` (rank {rank}) does not compile: {reason}")]
    PatternCompile { rank: u32, name: String, reason: String },
    #[error("pattern table line {line}: {reason}")]
    PatternTable { line: usize, reason: String },
    #[error("rank {0} is used by more than one pattern")]
    DuplicateRank(u32),
    #[error("policy line {line}: {reason}")]
    PolicyParse { line: usize, reason: String },
    #[error("policy line {line}: severity {value} outside 0..=10")]
    SeverityOutOfRange { line: usize, value: i64 },
    #[error("unknown policy preset `{0}`")]
    UnknownPreset(String),
    #[error("detection `{original}` at {start}..{end} does not match the message")]
    SpanMismatch { start: usize, end: usize, original: String },
    #[error("entry has no terms")]
    EmptyEntry,
    #[error("unsupported hash length {0} bits (expected a multiple of 8 in 16..=256)")]
    UnsupportedLength(u32),
    #[error("no free hash-key up to 256 bits for pattern `{0}`")]
    KeySpaceExhausted(String),
    #[error("reference table is corrupt: {0}")]
    TableCorrupt(String),
    #[error("unknown hash-key `{0}`")]
    UnknownKey(String),
    #[error("completeness matrix is empty")]
    EmptyMatrix,
    #[error("manifest line {line}: {reason}")]
    Manifest { line: usize, reason: String },
    #[error("i/o: {0}")]
    Io(String),
    #[error("configuration: {0}")]
    Config(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
