//! Syslog entries and message terms.
//!
//! Input lines have the form `<timestamp> <message>`, where the timestamp is
//! either integer epoch seconds or an ISO datetime (`YYYY-MM-DDThh:mm:ss`,
//! optionally with fraction and offset). Anything after the first separator
//! is message, including optional structural tags.

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One parsed syslog record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    /// Seconds since the Unix epoch.
    pub timestamp: i64,
    /// The timestamp token exactly as it appeared in the input.
    pub stamp: String,
    pub message: String,
    pub origin: Option<String>,
    /// Character count of the message as first parsed.
    pub raw_length: usize,
}

impl LogEntry {
    pub fn new(timestamp: i64, stamp: impl Into<String>, message: impl Into<String>) -> Self {
        let message = message.into();
        let raw_length = message.chars().count();
        LogEntry {
            timestamp,
            stamp: stamp.into(),
            message,
            origin: None,
            raw_length,
        }
    }

    pub fn with_origin(mut self, origin: impl Into<String>) -> Self {
        self.origin = Some(origin.into());
        self
    }
}

fn strip_newline(line: &str) -> &str {
    let line = line.strip_suffix('\n').unwrap_or(line);
    line.strip_suffix('\r').unwrap_or(line)
}

fn parse_stamp(token: &str) -> Option<i64> {
    if !token.is_empty() && token.bytes().all(|b| b.is_ascii_digit()) {
        return token.parse().ok();
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(token) {
        return Some(dt.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M:%S%.f"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(token, fmt) {
            return Some(dt.and_utc().timestamp());
        }
    }
    None
}

/// Splits a line into its leading timestamp and the message after one
/// separator. The message is kept byte-for-byte.
pub fn parse_line(line: &str) -> Result<LogEntry> {
    let line = strip_newline(line);
    if line.trim().is_empty() {
        return Err(Error::MalformedEntry("empty line".into()));
    }
    let (token, message) = match line.find([' ', '\t']) {
        Some(i) => (&line[..i], &line[i + 1..]),
        None => (line, ""),
    };
    let timestamp =
        parse_stamp(token).ok_or_else(|| Error::MalformedEntry("no recognizable timestamp prefix".into()))?;
    if message.trim().is_empty() {
        return Err(Error::MalformedEntry("empty message".into()));
    }
    Ok(LogEntry::new(timestamp, token, message))
}

/// Like [`parse_line`], but a line without a timestamp becomes a message
/// with timestamp 0. Blank lines are still rejected.
pub fn parse_line_lenient(line: &str) -> Result<LogEntry> {
    match parse_line(line) {
        Ok(entry) => Ok(entry),
        Err(err) => {
            let line = strip_newline(line);
            if line.trim().is_empty() {
                Err(err)
            } else {
                Ok(LogEntry::new(0, "0", line))
            }
        }
    }
}

/// A whitespace-delimited token of a message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub text: String,
    pub index: usize,
    /// Byte range of the term inside the message.
    pub span: (usize, usize),
    pub sensitive: bool,
    pub semantic: bool,
    pub is_placeholder: bool,
}

impl Term {
    pub fn overlaps(&self, start: usize, end: usize) -> bool {
        start < self.span.1 && self.span.0 < end
    }
}

/// Splits a message into maximal non-whitespace runs with all flags cleared.
pub fn tokenize(message: &str) -> Vec<Term> {
    let mut terms = Vec::new();
    let mut start = None;
    for (i, c) in message.char_indices().chain(std::iter::once((message.len(), ' '))) {
        match (start, c.is_whitespace()) {
            (None, false) => start = Some(i),
            (Some(s), true) => {
                terms.push(Term {
                    text: message[s..i].to_string(),
                    index: terms.len(),
                    span: (s, i),
                    sensitive: false,
                    semantic: false,
                    is_placeholder: false,
                });
                start = None;
            }
            _ => {}
        }
    }
    terms
}
