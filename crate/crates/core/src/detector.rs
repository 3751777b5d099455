//! Ordered regular-expression detection of variable terms.
//!
//! Classes are applied in rank order. Text claimed by an earlier class is
//! masked before later classes run, so a class that is a subset of another
//! (a hex number inside a hardware address) never re-claims it. Matching is
//! case-insensitive and every span indexes the original message.
//!
//! A pattern may mark its variable part with a named group `var`; only that
//! group is replaced, which keeps structural context such as the `for ` in
//! front of a user name intact.

use std::collections::HashSet;
use std::fmt;

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const MASK: u8 = b'#';

/// The built-in machine-independent classes, in application order:
/// `(name, placeholder, pattern)`.
pub const TABLE_ONE: [(&str, &str, &str); 15] = [
    ("Path", "#PATH#", r"([\(\s\,\>\:\=])(?P<var>([\/][a-z0-9_\.\-\:]*)+)"),
    ("Version", "#VER#", r"([\w\.\-]+x86_64)"),
    ("Email", "#EMAIL#", r"([a-z0-9_\-\.]+@([a-z0-9_-]+\.)+[a-z]+)"),
    ("DateTime", "#DT#", r"(\d{4}-\d{2}-\d{2})T(\d{2}:\d{2}:\d{2})"),
    ("IPv4", "#IP4#", r"(\d+\.\d+\.\d+\.\d+)"),
    ("Port", "#PORT#", r"([\W])(?P<var>port \d+)"),
    ("Parameter", "#PRM#", r"(\$[a-z0-9_]+)"),
    ("URID", "#UID#", r"(uid=[\w\-]+)"),
    ("User", "#USR#", r"(for )(?P<var>(user\ )*[a-z0-9_-]+)"),
    ("Library", "#LIB#", r"([a-z0-9_\-]+\.so(\.\d*)*)"),
    ("HardwareAddress", "#HWA#", r"(0[x][a-f0-9]+\-0[x][a-f0-9]+)"),
    ("HexNumber", "#HEX#", r"(0[x][a-f0-9]+)"),
    ("Percentage", "#PCT#", r"(\d+\.*[\d]*\%)"),
    ("SerialNumber", "#SRN#", r"(\s)(?P<var>([a-f0-9\.\-]+\:)+)(\s)"),
    ("Size", "#SIZE#", r"([^a-z0-9])(?P<var>\d+[bkmg])([^a-z0-9])"),
];

/// Matches a well-formed placeholder token.
pub fn placeholder_regex() -> &'static Regex {
    static RE: std::sync::OnceLock<Regex> = std::sync::OnceLock::new();
    RE.get_or_init(|| Regex::new(r"#[A-Z0-9]+#").unwrap())
}

pub fn is_placeholder(text: &str) -> bool {
    let re = placeholder_regex();
    re.find(text).is_some_and(|m| m.start() == 0 && m.end() == text.len())
}

/// Drops backslashes in front of punctuation that needs no escaping (`\,`,
/// `\:`, `\ `, ...), which the regex crate rejects but Python-style
/// pattern tables routinely contain.
fn relax_escapes(pattern: &str) -> String {
    let mut out = String::with_capacity(pattern.len());
    let mut chars = pattern.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some(n)
                if (n.is_ascii_punctuation() || n == ' ') && regex::escape(n.encode_utf8(&mut [0; 4])).len() == 1 =>
            {
                out.push(n)
            }
            Some(n) => {
                out.push('\\');
                out.push(n);
            }
            None => out.push('\\'),
        }
    }
    out
}

/// One class of variable terms.
#[derive(Clone)]
pub struct VariableClass {
    pub name: String,
    pub pattern: String,
    pub rank: u32,
    pub placeholder: String,
    regex: Regex,
}

impl fmt::Debug for VariableClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VariableClass")
            .field("name", &self.name)
            .field("rank", &self.rank)
            .field("placeholder", &self.placeholder)
            .field("pattern", &self.pattern)
            .finish()
    }
}

impl PartialEq for VariableClass {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.pattern == other.pattern
            && self.rank == other.rank
            && self.placeholder == other.placeholder
    }
}

impl VariableClass {
    pub fn new(name: &str, rank: u32, placeholder: &str, pattern: &str) -> Result<Self> {
        let compile_err = |reason: String| Error::PatternCompile {
            rank,
            name: name.to_string(),
            reason,
        };
        if !is_placeholder(placeholder) {
            return Err(compile_err(format!(
                "placeholder `{placeholder}` is not of the form #NAME#"
            )));
        }
        let regex = RegexBuilder::new(&relax_escapes(pattern))
            .case_insensitive(true)
            .build()
            .map_err(|e| compile_err(e.to_string()))?;
        Ok(VariableClass {
            name: name.to_string(),
            pattern: pattern.to_string(),
            rank,
            placeholder: placeholder.to_string(),
            regex,
        })
    }

    /// A class matching one literal word, used for site lexicons.
    pub fn literal(name: &str, rank: u32, placeholder: &str, literal: &str) -> Result<Self> {
        let pattern = format!(r"(?:^|[^\w])(?P<var>{})(?:[^\w]|$)", regex::escape(literal));
        Self::new(name, rank, placeholder, &pattern)
    }

    /// Leftmost non-overlapping variable spans over `haystack`.
    fn find_spans(&self, haystack: &str) -> Vec<(usize, usize)> {
        let mut spans = Vec::new();
        let mut pos = 0;
        while pos <= haystack.len() {
            let Some(caps) = self.regex.captures_at(haystack, pos) else {
                break;
            };
            let whole = caps.get(0).expect("group 0 always participates");
            let var = caps.name("var").unwrap_or(whole);
            if var.is_empty() || var.end() <= pos {
                // empty variable: step past the match (or one character)
                let next = whole.end().max(var.end());
                pos = if next > pos {
                    next
                } else {
                    pos + haystack[pos..].chars().next().map_or(1, char::len_utf8)
                };
                continue;
            }
            spans.push((var.start(), var.end()));
            pos = var.end();
        }
        spans
    }
}

/// A variable term found in a message.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DetectedVariable {
    pub class_name: String,
    /// Byte range inside the message.
    pub span: (usize, usize),
    pub original: String,
    pub placeholder: String,
}

/// An ordered, immutable set of variable classes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PatternSet {
    classes: Vec<VariableClass>,
}

impl PatternSet {
    /// The fifteen built-in classes.
    pub fn table_one() -> Self {
        let classes = TABLE_ONE
            .iter()
            .enumerate()
            .map(|(rank, (name, placeholder, pattern))| {
                VariableClass::new(name, rank as u32, placeholder, pattern).expect("built-in patterns compile")
            })
            .collect();
        PatternSet { classes }
    }

    /// Sorts by rank and rejects duplicate ranks.
    pub fn from_classes(mut classes: Vec<VariableClass>) -> Result<Self> {
        classes.sort_by_key(|c| c.rank);
        if let Some(w) = classes.windows(2).find(|w| w[0].rank == w[1].rank) {
            return Err(Error::DuplicateRank(w[0].rank));
        }
        Ok(PatternSet { classes })
    }

    /// Parses a pattern table (`rank<TAB>name<TAB>placeholder<TAB>regex`,
    /// `#` comments), optionally merged with the built-in classes.
    pub fn load(source: &str, with_defaults: bool) -> Result<Self> {
        let mut classes = if with_defaults {
            Self::table_one().classes
        } else {
            Vec::new()
        };
        for (i, line) in source.lines().enumerate() {
            let lineno = i + 1;
            let trimmed = line.trim_end_matches('\r');
            if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = trimmed.splitn(4, '\t').collect();
            if cols.len() != 4 {
                return Err(Error::PatternTable {
                    line: lineno,
                    reason: "expected rank, name, placeholder and regex separated by tabs".into(),
                });
            }
            let rank: u32 = cols[0].trim().parse().map_err(|_| Error::PatternTable {
                line: lineno,
                reason: format!("rank `{}` is not a non-negative integer", cols[0]),
            })?;
            classes.push(VariableClass::new(cols[1].trim(), rank, cols[2].trim(), cols[3])?);
        }
        Self::from_classes(classes)
    }

    pub fn to_table_text(&self) -> String {
        let mut out = String::from("# rank\tname\tplaceholder\tregex\n");
        for c in &self.classes {
            out.push_str(&format!("{}\t{}\t{}\t{}\n", c.rank, c.name, c.placeholder, c.pattern));
        }
        out
    }

    pub fn classes(&self) -> &[VariableClass] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn max_rank(&self) -> Option<u32> {
        self.classes.last().map(|c| c.rank)
    }

    /// Applies every class in rank order and returns the detections sorted
    /// by span start.
    pub fn detect(&self, message: &str) -> Vec<DetectedVariable> {
        detect(message, &self.classes)
    }
}

/// Ordered detection with masking; `classes` must already be rank-ordered.
pub fn detect(message: &str, classes: &[VariableClass]) -> Vec<DetectedVariable> {
    let mut shadow: Option<String> = None;
    let mut found = Vec::new();
    for class in classes {
        let haystack = shadow.as_deref().unwrap_or(message);
        let spans = class.find_spans(haystack);
        if spans.is_empty() {
            continue;
        }
        let mut bytes = shadow.take().unwrap_or_else(|| message.to_string()).into_bytes();
        for &(start, end) in &spans {
            bytes[start..end].fill(MASK);
            found.push(DetectedVariable {
                class_name: class.name.clone(),
                span: (start, end),
                original: message[start..end].to_string(),
                placeholder: class.placeholder.clone(),
            });
        }
        // spans cover whole characters, so filling them with ASCII keeps UTF-8 valid
        shadow = Some(String::from_utf8(bytes).expect("masking preserves UTF-8"));
    }
    found.sort_by_key(|d| d.span);
    found
}

/// Replaces the selected detections by their placeholders. Text outside the
/// replaced spans is untouched.
pub fn constantify(message: &str, detections: &[DetectedVariable], only: Option<&HashSet<String>>) -> Result<String> {
    let mut chosen: Vec<&DetectedVariable> = detections
        .iter()
        .filter(|d| only.is_none_or(|set| set.contains(&d.class_name)))
        .collect();
    chosen.sort_by_key(|d| std::cmp::Reverse(d.span.0));
    let mut out = message.to_string();
    for d in chosen {
        let (start, end) = d.span;
        if message.get(start..end) != Some(d.original.as_str()) {
            return Err(Error::SpanMismatch {
                start,
                end,
                original: d.original.clone(),
            });
        }
        out.replace_range(start..end, &d.placeholder);
    }
    Ok(out)
}
