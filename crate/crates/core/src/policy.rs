//! Site policy: which detected terms are sensitive, which terms carry
//! semantic, and how the quality function is weighted.
//!
//! Policy files are sectioned, tab-separated text:
//!
//! ```text
//! [sensitivity]        subject  Y|N  severity
//! [semantic]           glob     Y|N  severity
//! [coefficients]       n  s  r
//! [lexicon]            literal  subject  [placeholder]
//! [usefulness]         default  Y|N
//!                      glob  raw|anonymized|encoded  Y|N
//! ```
//!
//! Sensitivity subjects bind to detection classes by name ("User Name"
//! binds to the `User` class). Subjects without a class only take effect
//! through lexicon literals.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::detector::{is_placeholder, DetectedVariable, VariableClass, TABLE_ONE};
use crate::entry::Term;
use crate::quality::{Coefficients, EntryState};
use crate::{Error, Result};

pub const PRESET_NAMES: [&str; 2] = ["paper-table2", "tud-table5"];

const SEMANTIC_TABLE: &str = "\
[semantic]
accept*\tY\t07
reject*\tY\t10
close*\tY\t08
*connect*\tY\t09
start*\tY\t02
*key*\tY\t01
session\tY\t07
user*\tY\t05
";

// `publickey` names an authentication method: a variable term that carries
// semantic, not the key material itself.
const AUTH_LEXICON: &str = "\
[lexicon]
publickey\tKey
";

const TABLE_TWO: &str = "\
[sensitivity]
User Name\tY\t10
IP Address\tY\t08
Port Number\tY\t01
Node Name\tY\t03
Node ID\tY\t03
Public Key\tY\t10
App Name\tN\t00
Path / URL\tN\t00
";

const TABLE_FIVE: &str = "\
[sensitivity]
Surname\tY\t10
Firstname\tY\t10
Title\tY\t10
User type (employee, student, guest)\tY\t10
User name\tY\t10
Password\tY\t10
Login status (active, disabled)\tY\t10
User ID (identification of Unix users)\tY\t10
Home (Path to home directory)\tY\t10
Shell (default shell)\tY\t10
Group ID (belonging to Unix groups)\tY\t10
Mail addresses (TUD addresses)\tY\t10
IP Address\tY\t08
Port Number\tN\t00
Node Name\tN\t00
Node ID\tN\t00
Public Key\tY\t08
App Name\tN\t00
Path / URL\tY\t01
";

/// Policy subject spellings that bind to each built-in class.
const CLASS_ALIASES: [(&str, &[&str]); 15] = [
    ("Path", &["path", "path / url", "url"]),
    ("Version", &["version"]),
    ("Email", &["email", "e-mail", "mail address", "mail addresses"]),
    ("DateTime", &["datetime", "date time"]),
    ("IPv4", &["ipv4", "ip", "ip address"]),
    ("Port", &["port", "port number"]),
    ("Parameter", &["parameter"]),
    ("URID", &["urid", "uid", "user id"]),
    ("User", &["user", "user name", "username"]),
    ("Library", &["library"]),
    ("HardwareAddress", &["hardwareaddress", "hardware address"]),
    ("HexNumber", &["hexnumber", "hex number"]),
    ("Percentage", &["percentage"]),
    ("SerialNumber", &["serialnumber", "serial number"]),
    ("Size", &["size"]),
];

/// Lowercases, drops a trailing parenthetical and collapses whitespace.
fn normalize_subject(s: &str) -> String {
    let base = match s.find('(') {
        Some(i) if i > 0 => &s[..i],
        _ => s,
    };
    base.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

fn class_for_subject(subject: &str) -> Option<&'static str> {
    let norm = normalize_subject(subject);
    CLASS_ALIASES
        .iter()
        .find(|(_, aliases)| aliases.contains(&norm.as_str()))
        .map(|(class, _)| *class)
}

fn placeholder_for_subject(subject: &str) -> String {
    if let Some(class) = class_for_subject(subject) {
        if let Some((_, p, _)) = TABLE_ONE.iter().find(|(n, _, _)| *n == class) {
            return p.to_string();
        }
    }
    let core: String = subject
        .chars()
        .filter(char::is_ascii_alphanumeric)
        .map(|c| c.to_ascii_uppercase())
        .collect();
    format!("#{}#", if core.is_empty() { "VAR" } else { &core })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRule {
    pub subject: String,
    pub sensitive: bool,
    pub severity: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticRule {
    pub glob: String,
    pub semantic: bool,
    pub severity: u8,
}

impl SemanticRule {
    /// `x*` prefix, `*x` suffix, `*x*` substring, bare `x` whole-term;
    /// case-insensitive.
    pub fn matches(&self, term: &str) -> bool {
        glob_matches(&self.glob, term)
    }
}

pub fn glob_matches(glob: &str, term: &str) -> bool {
    let lead = glob.starts_with('*');
    let trail = glob.len() > 1 && glob.ends_with('*');
    let core = glob.trim_matches('*').to_lowercase();
    let term = term.to_lowercase();
    match (lead, trail) {
        (true, true) => term.contains(&core),
        (false, true) => term.starts_with(&core),
        (true, false) => term.ends_with(&core),
        (false, false) => term == core,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub literal: String,
    pub subject: String,
    pub placeholder: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsefulnessRule {
    pub glob: String,
    pub state: EntryState,
    pub useful: bool,
}

/// Whether a detected variable is removed, kept, or removed for size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariableKind {
    Sensitive,
    Meaningful,
    SemanticLess,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTable {
    pub sensitivity_rules: Vec<SensitivityRule>,
    pub semantic_rules: Vec<SemanticRule>,
    pub coefficients: Coefficients,
    pub usefulness_default: bool,
    pub usefulness_rules: Vec<UsefulnessRule>,
    pub lexicon: Vec<LexiconEntry>,
}

impl Default for PolicyTable {
    fn default() -> Self {
        PolicyTable {
            sensitivity_rules: Vec::new(),
            semantic_rules: Vec::new(),
            coefficients: Coefficients::default(),
            usefulness_default: true,
            usefulness_rules: Vec::new(),
            lexicon: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Sensitivity,
    Semantic,
    Coefficients,
    Lexicon,
    Usefulness,
}

fn parse_flag(s: &str, line: usize) -> Result<bool> {
    match s.trim() {
        "Y" | "y" => Ok(true),
        "N" | "n" => Ok(false),
        other => Err(Error::PolicyParse {
            line,
            reason: format!("expected Y or N, found `{other}`"),
        }),
    }
}

fn parse_severity(s: &str, line: usize) -> Result<u8> {
    let value: i64 = s.trim().parse().map_err(|_| Error::PolicyParse {
        line,
        reason: format!("severity `{}` is not an integer", s.trim()),
    })?;
    if !(0..=10).contains(&value) {
        return Err(Error::SeverityOutOfRange { line, value });
    }
    Ok(value as u8)
}

impl PolicyTable {
    pub fn preset(name: &str) -> Result<Self> {
        let text = match name {
            "paper-table2" => format!("{TABLE_TWO}{SEMANTIC_TABLE}{AUTH_LEXICON}"),
            "tud-table5" => format!("{TABLE_FIVE}{SEMANTIC_TABLE}{AUTH_LEXICON}"),
            other => return Err(Error::UnknownPreset(other.to_string())),
        };
        Self::parse(&text)
    }

    pub fn parse(source: &str) -> Result<Self> {
        let mut policy = PolicyTable::default();
        let mut section: Option<Section> = None;
        let mut saw_content = false;
        for (i, raw) in source.lines().enumerate() {
            let line = i + 1;
            let text = raw.trim_end_matches('\r');
            if text.trim().is_empty() || text.trim_start().starts_with('#') {
                continue;
            }
            saw_content = true;
            let trimmed = text.trim();
            if trimmed.starts_with('[') && trimmed.ends_with(']') {
                section = Some(match &trimmed[1..trimmed.len() - 1] {
                    "sensitivity" => Section::Sensitivity,
                    "semantic" => Section::Semantic,
                    "coefficients" => Section::Coefficients,
                    "lexicon" => Section::Lexicon,
                    "usefulness" => Section::Usefulness,
                    other => {
                        return Err(Error::PolicyParse {
                            line,
                            reason: format!("unknown section `{other}`"),
                        })
                    }
                });
                continue;
            }
            let cols: Vec<&str> = text.split('\t').map(str::trim).collect();
            let want = |n: usize, what: &str| -> Result<()> {
                if cols.len() == n {
                    Ok(())
                } else {
                    Err(Error::PolicyParse {
                        line,
                        reason: format!("expected {n} tab-separated columns ({what})"),
                    })
                }
            };
            match section {
                None => {
                    return Err(Error::PolicyParse {
                        line,
                        reason: "row outside of any section".into(),
                    })
                }
                Some(Section::Sensitivity) => {
                    want(3, "subject, Y|N, severity")?;
                    let sensitive = parse_flag(cols[1], line)?;
                    let severity = parse_severity(cols[2], line)?;
                    if sensitive == (severity == 0) {
                        return Err(Error::PolicyParse {
                            line,
                            reason: "severity must be 0 exactly when the subject is not sensitive".into(),
                        });
                    }
                    policy.sensitivity_rules.push(SensitivityRule {
                        subject: cols[0].to_string(),
                        sensitive,
                        severity,
                    });
                }
                Some(Section::Semantic) => {
                    want(3, "glob, Y|N, severity")?;
                    if cols[0].trim_matches('*').is_empty() {
                        return Err(Error::PolicyParse {
                            line,
                            reason: "glob is empty".into(),
                        });
                    }
                    policy.semantic_rules.push(SemanticRule {
                        glob: cols[0].to_string(),
                        semantic: parse_flag(cols[1], line)?,
                        severity: parse_severity(cols[2], line)?,
                    });
                }
                Some(Section::Coefficients) => {
                    want(3, "n, s, r")?;
                    let vals: Vec<f64> = cols
                        .iter()
                        .map(|c| c.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| Error::PolicyParse {
                            line,
                            reason: "coefficients must be numbers".into(),
                        })?;
                    policy.coefficients = Coefficients::new(vals[0], vals[1], vals[2]).ok_or(Error::PolicyParse {
                        line,
                        reason: "coefficients must lie in (0, 1]".into(),
                    })?;
                }
                Some(Section::Lexicon) => {
                    if cols.len() != 2 && cols.len() != 3 {
                        want(2, "literal, subject[, placeholder]")?;
                    }
                    if cols[0].is_empty() || cols[0].chars().any(char::is_whitespace) {
                        return Err(Error::PolicyParse {
                            line,
                            reason: "lexicon literal must be a single non-empty term".into(),
                        });
                    }
                    let placeholder = match cols.get(2) {
                        Some(p) if is_placeholder(p) => p.to_string(),
                        Some(p) => {
                            return Err(Error::PolicyParse {
                                line,
                                reason: format!("placeholder `{p}` is not of the form #NAME#"),
                            })
                        }
                        None => placeholder_for_subject(cols[1]),
                    };
                    policy.lexicon.push(LexiconEntry {
                        literal: cols[0].to_string(),
                        subject: cols[1].to_string(),
                        placeholder,
                    });
                }
                Some(Section::Usefulness) => {
                    if cols.len() == 2 && cols[0] == "default" {
                        policy.usefulness_default = parse_flag(cols[1], line)?;
                        continue;
                    }
                    want(3, "glob, state, Y|N")?;
                    let state = EntryState::parse(cols[1]).ok_or_else(|| Error::PolicyParse {
                        line,
                        reason: format!("unknown state `{}`", cols[1]),
                    })?;
                    policy.usefulness_rules.push(UsefulnessRule {
                        glob: cols[0].to_string(),
                        state,
                        useful: parse_flag(cols[2], line)?,
                    });
                }
            }
        }
        if !saw_content {
            return Err(Error::PolicyParse {
                line: 0,
                reason: "policy is empty".into(),
            });
        }
        Ok(policy)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("[sensitivity]\n");
        for r in &self.sensitivity_rules {
            out += &format!(
                "{}\t{}\t{:02}\n",
                r.subject,
                if r.sensitive { 'Y' } else { 'N' },
                r.severity
            );
        }
        out += "[semantic]\n";
        for r in &self.semantic_rules {
            out += &format!(
                "{}\t{}\t{:02}\n",
                r.glob,
                if r.semantic { 'Y' } else { 'N' },
                r.severity
            );
        }
        let c = self.coefficients;
        out += &format!("[coefficients]\n{}\t{}\t{}\n", c.n, c.s, c.r);
        out += "[lexicon]\n";
        for l in &self.lexicon {
            out += &format!("{}\t{}\t{}\n", l.literal, l.subject, l.placeholder);
        }
        out += &format!(
            "[usefulness]\ndefault\t{}\n",
            if self.usefulness_default { 'Y' } else { 'N' }
        );
        for u in &self.usefulness_rules {
            out += &format!(
                "{}\t{}\t{}\n",
                u.glob,
                u.state.as_str(),
                if u.useful { 'Y' } else { 'N' }
            );
        }
        out
    }

    /// Detection classes for the lexicon literals, ranked from `first_rank`.
    pub fn lexicon_classes(&self, first_rank: u32) -> Result<Vec<VariableClass>> {
        self.lexicon
            .iter()
            .enumerate()
            .map(|(i, l)| VariableClass::literal(&l.subject, first_rank + i as u32, &l.placeholder, &l.literal))
            .collect()
    }

    fn rules_for_class<'a>(&'a self, class_name: &'a str) -> impl Iterator<Item = &'a SensitivityRule> + 'a {
        let norm = normalize_subject(class_name);
        self.sensitivity_rules
            .iter()
            .filter(move |r| normalize_subject(&r.subject) == norm || class_for_subject(&r.subject) == Some(class_name))
    }

    /// Sensitivity and severity of a detection class; a class is sensitive
    /// when any bound rule says so.
    pub fn sensitivity_of(&self, class_name: &str) -> (bool, u8) {
        self.rules_for_class(class_name)
            .filter(|r| r.sensitive)
            .fold((false, 0), |(_, sev), r| (true, sev.max(r.severity)))
    }

    /// Highest severity of a `Y` semantic rule matching the term, if any.
    pub fn semantic_match(&self, term: &str) -> Option<u8> {
        self.semantic_rules
            .iter()
            .filter(|r| r.semantic && r.matches(term))
            .map(|r| r.severity)
            .max()
    }

    pub fn usefulness(&self, terms: &[Term], state: EntryState) -> bool {
        let mut verdict: Option<bool> = None;
        for rule in self.usefulness_rules.iter().filter(|r| r.state == state) {
            if terms.iter().any(|t| glob_matches(&rule.glob, &t.text)) {
                verdict = Some(verdict.unwrap_or(true) && rule.useful);
            }
        }
        verdict.unwrap_or(self.usefulness_default)
    }

    /// Sets the sensitive and semantic flags of each term. A term is
    /// sensitive when a sensitive detection overlaps it; it is semantic when
    /// sensitive or matched by a `Y` semantic rule. Placeholder terms carry
    /// neither flag.
    pub fn classify_terms(&self, terms: &[Term], detections: &[DetectedVariable]) -> Vec<Term> {
        let sensitive_spans: Vec<(usize, usize)> = detections
            .iter()
            .filter(|d| self.sensitivity_of(&d.class_name).0)
            .map(|d| d.span)
            .collect();
        terms
            .iter()
            .map(|t| {
                let mut t = t.clone();
                t.is_placeholder = is_placeholder(&t.text);
                if t.is_placeholder {
                    t.sensitive = false;
                    t.semantic = false;
                    return t;
                }
                t.sensitive = sensitive_spans.iter().any(|&(s, e)| t.overlaps(s, e));
                t.semantic = t.sensitive || self.semantic_match(&t.text).is_some();
                t
            })
            .collect()
    }

    /// Sensitive detections are removed, detections inside semantic terms
    /// are meaningful, everything else is semantic-less.
    pub fn variable_kind(&self, detection: &DetectedVariable, terms: &[Term]) -> VariableKind {
        if self.sensitivity_of(&detection.class_name).0 {
            return VariableKind::Sensitive;
        }
        let meaningful = terms
            .iter()
            .filter(|t| t.overlaps(detection.span.0, detection.span.1))
            .any(|t| self.semantic_match(&t.text).is_some());
        if meaningful {
            VariableKind::Meaningful
        } else {
            VariableKind::SemanticLess
        }
    }

    /// Detections by descending sensitivity severity, then by position.
    pub fn anonymization_order(&self, detections: &[DetectedVariable]) -> Vec<DetectedVariable> {
        let mut out: Vec<(u8, DetectedVariable)> = detections
            .iter()
            .map(|d| (self.sensitivity_of(&d.class_name).1, d.clone()))
            .collect();
        out.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.span.0.cmp(&b.1.span.0)));
        out.into_iter().map(|(_, d)| d).collect()
    }

    /// Names of classes this policy treats as sensitive, among `classes`.
    pub fn sensitive_classes<'a>(&self, classes: impl IntoIterator<Item = &'a str>) -> HashSet<String> {
        classes
            .into_iter()
            .filter(|c| self.sensitivity_of(c).0)
            .map(str::to_string)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::PatternSet;
    use crate::entry::tokenize;

    fn flags(terms: &[Term]) -> (Vec<bool>, Vec<bool>) {
        (
            terms.iter().map(|t| t.sensitive).collect(),
            terms.iter().map(|t| t.semantic).collect(),
        )
    }

    fn classify(policy: &PolicyTable, msg: &str) -> Vec<Term> {
        let set = PatternSet::table_one();
        let mut classes = set.classes().to_vec();
        classes.extend(policy.lexicon_classes(1000).unwrap());
        let ds = crate::detector::detect(msg, &classes);
        policy.classify_terms(&tokenize(msg), &ds)
    }

    #[test]
    fn presets() {
        let t2 = PolicyTable::preset("paper-table2").unwrap();
        assert_eq!(t2.sensitivity_rules.len(), 8);
        assert_eq!(t2.semantic_rules.len(), 8);
        assert_eq!(
            t2.sensitivity_rules[0],
            SensitivityRule {
                subject: "User Name".into(),
                sensitive: true,
                severity: 10
            }
        );
        assert_eq!(
            t2.sensitivity_rules[7],
            SensitivityRule {
                subject: "Path / URL".into(),
                sensitive: false,
                severity: 0
            }
        );
        assert_eq!(t2.semantic_rules[0].glob, "accept*");
        assert_eq!(t2.semantic_rules[0].severity, 7);
        assert_eq!(t2.semantic_rules[7].glob, "user*");
        assert_eq!(t2.semantic_rules[7].severity, 5);
        assert_eq!(t2.coefficients, Coefficients::default());
        assert!(t2.usefulness_default);

        let t5 = PolicyTable::preset("tud-table5").unwrap();
        assert_eq!(t5.sensitivity_rules.len(), 19);
        let find = |s: &str| t5.sensitivity_rules.iter().find(|r| r.subject == s).unwrap().clone();
        assert_eq!(
            (find("Port Number").sensitive, find("Port Number").severity),
            (false, 0)
        );
        assert_eq!((find("Node Name").sensitive, find("Node Name").severity), (false, 0));
        assert_eq!((find("Path / URL").sensitive, find("Path / URL").severity), (true, 1));
        assert!(matches!(PolicyTable::preset("nope"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(PolicyTable::parse(""), Err(Error::PolicyParse { .. })));
        assert!(matches!(
            PolicyTable::parse("# only a comment\n"),
            Err(Error::PolicyParse { .. })
        ));
        assert!(matches!(
            PolicyTable::parse("[sensitivity]\nUser\tY\t11\n"),
            Err(Error::SeverityOutOfRange { line: 2, value: 11 })
        ));
        assert!(matches!(
            PolicyTable::parse("[sensitivity]\nUser\tN\t3\n"),
            Err(Error::PolicyParse { line: 2, .. })
        ));
        assert!(matches!(
            PolicyTable::parse("User\tY\t3\n"),
            Err(Error::PolicyParse { line: 1, .. })
        ));
        assert!(matches!(
            PolicyTable::parse("[bogus]\n"),
            Err(Error::PolicyParse { line: 1, .. })
        ));
        assert!(matches!(
            PolicyTable::parse("[semantic]\n**\tY\t1\n"),
            Err(Error::PolicyParse { .. })
        ));
        assert!(matches!(
            PolicyTable::parse("[coefficients]\n1\t0\t1\n"),
            Err(Error::PolicyParse { .. })
        ));
        assert!(matches!(
            PolicyTable::parse("[usefulness]\n*x*\tlater\tY\n"),
            Err(Error::PolicyParse { .. })
        ));
    }

    #[test]
    fn text_round_trip() {
        for name in PRESET_NAMES {
            let p = PolicyTable::preset(name).unwrap();
            assert_eq!(PolicyTable::parse(&p.to_text()).unwrap(), p);
        }
        let p = PolicyTable::parse(
            "[semantic]\n*acpi*\tY\t05\n[coefficients]\n0.5\t1\t0.25\n[lexicon]\nsiavash\tUser Name\n[usefulness]\ndefault\tN\n*acpi*\tencoded\tN\n",
        )
        .unwrap();
        assert_eq!(p.lexicon[0].placeholder, "#USR#");
        assert_eq!(PolicyTable::parse(&p.to_text()).unwrap(), p);
    }

    #[test]
    fn globs() {
        assert!(glob_matches("accept*", "Accepted"));
        assert!(!glob_matches("accept*", "unaccepted"));
        assert!(glob_matches("*key*", "publickey"));
        assert!(glob_matches("*connect*", "Disconnected"));
        assert!(glob_matches("*ed", "closed"));
        assert!(glob_matches("session", "Session"));
        assert!(!glob_matches("session", "sessions"));
    }

    #[test]
    fn sample_entry_flags() {
        let p = PolicyTable::preset("paper-table2").unwrap();
        let terms = classify(&p, "Accepted publickey for Siavash from 4.3.2.1");
        let (sens, sem) = flags(&terms);
        assert_eq!(sens, [false, false, false, true, false, true]);
        assert_eq!(sem, [true, true, false, true, false, true]);
    }

    #[test]
    fn placeholder_terms_are_inert() {
        let p = PolicyTable::preset("paper-table2").unwrap();
        let terms = classify(&p, "#USR# #IP4#");
        assert!(terms.iter().all(|t| t.is_placeholder && !t.sensitive && !t.semantic));
        let terms = classify(&p, "Accepted #KEY# for");
        assert_eq!(flags(&terms).1, [true, false, false]);
    }

    #[test]
    fn semantic_globs_on_logout_line() {
        let p = PolicyTable::preset("paper-table2").unwrap();
        let terms = classify(&p, "session closed for #USER#");
        assert!(terms[0].semantic);
        assert!(terms[1].semantic);
        assert!(!terms[2].semantic);
        assert!(!terms[3].semantic);
    }

    #[test]
    fn subject_binding() {
        let t2 = PolicyTable::preset("paper-table2").unwrap();
        assert_eq!(t2.sensitivity_of("User"), (true, 10));
        assert_eq!(t2.sensitivity_of("IPv4"), (true, 8));
        assert_eq!(t2.sensitivity_of("Port"), (true, 1));
        assert_eq!(t2.sensitivity_of("Path"), (false, 0));
        assert_eq!(t2.sensitivity_of("HexNumber"), (false, 0));
        assert_eq!(t2.sensitivity_of("Key"), (false, 0));
        let t5 = PolicyTable::preset("tud-table5").unwrap();
        assert_eq!(t5.sensitivity_of("Path"), (true, 1));
        assert_eq!(t5.sensitivity_of("Port"), (false, 0));
        assert_eq!(t5.sensitivity_of("Email"), (true, 10));
        assert_eq!(t5.sensitivity_of("URID"), (true, 10));
        let lex = PolicyTable::parse("[sensitivity]\nNode Name\tY\t03\n[lexicon]\ntaurusi6001\tNode Name\n").unwrap();
        assert_eq!(lex.sensitivity_of("Node Name"), (true, 3));
        assert_eq!(lex.lexicon[0].placeholder, "#NODENAME#");
    }

    #[test]
    fn ordering() {
        let p = PolicyTable::preset("paper-table2").unwrap();
        let set = PatternSet::table_one();
        let ds = set.detect("Accepted publickey for Siavash from 4.3.2.1");
        let order: Vec<_> = p.anonymization_order(&ds).into_iter().map(|d| d.original).collect();
        assert_eq!(order, ["Siavash", "4.3.2.1"]);
        assert!(p.anonymization_order(&[]).is_empty());
        let ds = set.detect("from 10.0.0.2 to 10.0.0.1");
        let order: Vec<_> = p.anonymization_order(&ds).into_iter().map(|d| d.original).collect();
        assert_eq!(order, ["10.0.0.2", "10.0.0.1"]);
    }

    #[test]
    fn usefulness_rules() {
        let p = PolicyTable::parse("[usefulness]\n*acpi*\tencoded\tN\n").unwrap();
        let terms = tokenize("ACPI: LAPIC");
        assert!(!p.usefulness(&terms, EntryState::Encoded));
        assert!(p.usefulness(&terms, EntryState::Anonymized));
        assert!(p.usefulness(&tokenize("other"), EntryState::Encoded));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        const SUBJECTS: [&str; 8] = [
            "User Name",
            "IP Address",
            "Port Number",
            "Path / URL",
            "Email",
            "Hex Number",
            "Size",
            "Library",
        ];

        proptest! {
            #[test]
            fn sensitive_implies_semantic(msg in "[a-z0-9 ./:=()]{1,60}") {
                let p = PolicyTable::preset("tud-table5").unwrap();
                for t in classify(&p, &msg) {
                    prop_assert!(!t.sensitive || t.semantic);
                    prop_assert!(!t.is_placeholder || (!t.sensitive && !t.semantic));
                }
            }

            #[test]
            fn adding_rules_is_monotone(msg in "(for [a-z]{1,5} |[0-9]\\.[0-9]\\.[0-9]\\.[0-9] |/[a-z]{1,4} |[0-9]{1,3}k |word )+",
                                        extra in 0usize..8, y in any::<bool>()) {
                let base = PolicyTable::preset("paper-table2").unwrap();
                let mut more = base.clone();
                more.sensitivity_rules.push(SensitivityRule {
                    subject: SUBJECTS[extra].into(), sensitive: y, severity: if y { 4 } else { 0 },
                });
                let before = classify(&base, &msg);
                let after = classify(&more, &msg);
                for (a, b) in before.iter().zip(&after) {
                    prop_assert!(!a.sensitive || b.sensitive);
                }
            }
        }
    }
}
