//! The anonymization procedure.
//!
//! 1. detect variable terms and sort them into sensitive, meaningful and
//!    semantic-less under the policy;
//! 2. replace sensitive terms, most severe first;
//! 3. replace semantic-less terms;
//! 4. encode the entry if no variable terms remain;
//! 5. otherwise score the entry as it stands;
//! 6. score the alternative where the meaningful terms are constantified
//!    too and the entry is encoded;
//! 7. keep whichever state has the higher quality (ties encode);
//! 8. key lengths can later be optimized by frequency
//!    (see [`ReferenceTable::optimize_key_lengths`](crate::codec::ReferenceTable::optimize_key_lengths)).
//!
//! Encoding goes through a [`SharedTable`]. In the streaming pipeline the
//! table is only touched by the single, order-restoring writer, so keys
//! (including collision extensions) do not depend on the worker count.

use std::collections::BTreeMap;

use crossbeam_channel::bounded;
use serde::{Deserialize, Serialize};

use crate::codec::{EventPattern, SharedTable, DEFAULT_BITS};
use crate::detector::{constantify, detect, DetectedVariable, PatternSet, VariableClass};
use crate::entry::{parse_line, parse_line_lenient, tokenize, LogEntry, Term};
use crate::policy::{PolicyTable, VariableKind};
use crate::quality::{self, score, QualityScore};
use crate::{Error, Result};

pub use crate::quality::EntryState;

/// Rewriting can create new matches at placeholder edges; repeat until
/// stable, but never more often than this.
const MAX_ROUNDS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub label: String,
    pub text: String,
    pub quality: QualityScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessedEntry {
    pub entry: LogEntry,
    pub state: EntryState,
    pub final_text: String,
    /// Message after steps 2 and 3.
    pub anonymized_text: String,
    pub quality: QualityScore,
    pub pattern: Option<String>,
    pub key: Option<String>,
    /// Meaningful variables still present in `anonymized_text`.
    pub remaining: Vec<DetectedVariable>,
    pub terms_before: usize,
    pub sensitive_before: usize,
    pub variables_before: usize,
    pub trace: Vec<TraceStep>,
}

impl ProcessedEntry {
    pub fn is_zero_quality(&self) -> bool {
        self.quality.q == 0.0
    }

    pub fn terms_after(&self) -> usize {
        tokenize(&self.final_text).len()
    }

    /// `<timestamp> <final text>`, the timestamp as it was read.
    pub fn output_line(&self) -> String {
        format!("{} {}", self.entry.stamp, self.final_text)
    }
}

/// The outcome of steps 4 to 7 before anything is written to the table.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub pattern: EventPattern,
    pub q_keep: QualityScore,
    /// Encoded quality assuming a key of the configured length.
    pub q_encode: QualityScore,
    pub encode: bool,
    /// No variable terms were left, so encoding was not a choice.
    pub forced: bool,
    steps: Vec<TraceStep>,
}

struct Assessment {
    terms: Vec<Term>,
    detections: Vec<DetectedVariable>,
    nonsensitivity: f64,
    semantic: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Steps 1 to 3 only.
    Anonymize,
    /// The full procedure.
    Encode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamOptions {
    pub mode: Mode,
    pub lenient: bool,
    pub workers: usize,
    pub batch_size: usize,
}

impl Default for StreamOptions {
    fn default() -> Self {
        StreamOptions {
            mode: Mode::Encode,
            lenient: false,
            workers: 1,
            batch_size: 256,
        }
    }
}

/// One output record per input line.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamRecord {
    /// 1-based input line number.
    pub line_no: usize,
    pub outcome: std::result::Result<ProcessedEntry, Error>,
}

impl StreamRecord {
    /// The entry's output line, or an error marker that never repeats the
    /// input text.
    pub fn output_line(&self) -> String {
        match &self.outcome {
            Ok(p) => p.output_line(),
            Err(Error::MalformedEntry(_)) => format!("#ERROR# line {} malformed-entry", self.line_no),
            Err(_) => format!("#ERROR# line {} unprocessable", self.line_no),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Anonymizer {
    classes: Vec<VariableClass>,
    policy: PolicyTable,
    hash_bits: u32,
    record_trace: bool,
}

impl Anonymizer {
    /// Detection uses `patterns` followed by the policy's lexicon literals.
    pub fn new(patterns: &PatternSet, policy: PolicyTable) -> Result<Self> {
        let mut classes = patterns.classes().to_vec();
        let next = patterns.max_rank().map_or(0, |r| r + 1);
        classes.extend(policy.lexicon_classes(next)?);
        Ok(Anonymizer {
            classes,
            policy,
            hash_bits: DEFAULT_BITS,
            record_trace: false,
        })
    }

    pub fn with_hash_bits(mut self, bits: u32) -> Result<Self> {
        crate::codec::hash_pattern(&EventPattern::new(""), bits)?;
        self.hash_bits = bits;
        Ok(self)
    }

    /// Records every intermediate state with its quality.
    pub fn with_trace(mut self, on: bool) -> Self {
        self.record_trace = on;
        self
    }

    pub fn policy(&self) -> &PolicyTable {
        &self.policy
    }

    pub fn hash_bits(&self) -> u32 {
        self.hash_bits
    }

    pub fn classes(&self) -> &[VariableClass] {
        &self.classes
    }

    pub fn detect(&self, text: &str) -> Vec<DetectedVariable> {
        detect(text, &self.classes)
    }

    /// Detects and classifies `text`, returning its flagged terms.
    pub fn classify(&self, text: &str) -> Vec<Term> {
        let detections = self.detect(text);
        self.policy.classify_terms(&tokenize(text), &detections)
    }

    fn assess(&self, text: &str) -> Assessment {
        let detections = self.detect(text);
        let terms = self.policy.classify_terms(&tokenize(text), &detections);
        // an all-whitespace rewrite cannot happen: placeholders are non-empty
        let nonsensitivity = quality::nonsensitivity(&terms).unwrap_or(1.0);
        let semantic = quality::semantic(&terms).unwrap_or(0.0);
        Assessment {
            terms,
            detections,
            nonsensitivity,
            semantic,
        }
    }

    fn textual_score(&self, a: &Assessment, useful: bool) -> QualityScore {
        score(
            useful,
            a.nonsensitivity,
            a.semantic,
            quality::TEXTUAL_REDUCTION,
            self.policy.coefficients,
        )
    }

    fn encoded_score(&self, useful: bool, raw_length: usize, key_length: usize) -> QualityScore {
        let r = quality::reduction(EntryState::Encoded, raw_length, key_length);
        score(useful, 1.0, 1.0, r, self.policy.coefficients)
    }

    fn step(&self, label: String, text: String, useful: bool) -> TraceStep {
        let quality = self.textual_score(&self.assess(&text), useful);
        TraceStep { label, text, quality }
    }

    /// Steps 1 to 3: removes sensitive and semantic-less variables and keeps
    /// meaningful ones.
    pub fn anonymize(&self, entry: LogEntry) -> ProcessedEntry {
        let original_terms = tokenize(&entry.message);
        let useful = |state| self.policy.usefulness(&original_terms, state);

        let raw = self.assess(&entry.message);
        let mut trace = Vec::new();
        if self.record_trace {
            trace.push(TraceStep {
                label: "raw".into(),
                text: entry.message.clone(),
                quality: self.textual_score(&raw, useful(EntryState::Raw)),
            });
        }
        let terms_before = raw.terms.len();
        let sensitive_before = raw.terms.iter().filter(|t| t.sensitive).count();
        let variables_before = raw.detections.len();

        let mut text = entry.message.clone();
        let mut current = raw;
        for _ in 0..MAX_ROUNDS {
            let mut sensitive = Vec::new();
            let mut semantic_less = Vec::new();
            for d in &current.detections {
                match self.policy.variable_kind(d, &current.terms) {
                    VariableKind::Sensitive => sensitive.push(d.clone()),
                    VariableKind::SemanticLess => semantic_less.push(d.clone()),
                    VariableKind::Meaningful => {}
                }
            }
            if sensitive.is_empty() && semantic_less.is_empty() {
                break;
            }
            let sensitive = self.policy.anonymization_order(&sensitive);
            if self.record_trace {
                for k in 0..sensitive.len() {
                    let step_text = constantify(&text, &sensitive[..=k], None).expect("spans from this text");
                    let label = format!("sensitive:{}", sensitive[k].class_name);
                    trace.push(self.step(label, step_text, useful(EntryState::Anonymized)));
                }
            }
            let all: Vec<DetectedVariable> = sensitive.iter().chain(&semantic_less).cloned().collect();
            text = constantify(&text, &all, None).expect("spans from this text");
            if self.record_trace && !semantic_less.is_empty() {
                trace.push(self.step("semantic-less".into(), text.clone(), useful(EntryState::Anonymized)));
            }
            current = self.assess(&text);
        }

        let quality = self.textual_score(&current, useful(EntryState::Anonymized));
        ProcessedEntry {
            state: EntryState::Anonymized,
            final_text: text.clone(),
            anonymized_text: text,
            quality,
            pattern: None,
            key: None,
            remaining: current.detections,
            terms_before,
            sensitive_before,
            variables_before,
            trace,
            entry,
        }
    }

    /// Replaces every variable term until none is detected.
    pub fn full_constantify(&self, text: &str) -> String {
        let mut text = text.to_string();
        for _ in 0..MAX_ROUNDS {
            let ds = self.detect(&text);
            if ds.is_empty() {
                break;
            }
            text = constantify(&text, &ds, None).expect("spans from this text");
        }
        text
    }

    /// Steps 4 to 7 without touching the reference table.
    pub fn plan(&self, processed: &ProcessedEntry) -> Candidate {
        let original_terms = tokenize(&processed.entry.message);
        let useful = |state| self.policy.usefulness(&original_terms, state);
        let forced = processed.remaining.is_empty();

        let mut steps = Vec::new();
        if self.record_trace && !forced {
            // least important meaningful terms go first
            let terms = tokenize(&processed.anonymized_text);
            let weight = |d: &DetectedVariable| {
                terms
                    .iter()
                    .filter(|t| t.overlaps(d.span.0, d.span.1))
                    .filter_map(|t| self.policy.semantic_match(&t.text))
                    .max()
                    .unwrap_or(0)
            };
            let mut order = processed.remaining.clone();
            order.sort_by_key(|d| (weight(d), d.span.0));
            for k in 0..order.len() {
                let step_text =
                    constantify(&processed.anonymized_text, &order[..=k], None).expect("spans from this text");
                let label = format!("meaningful:{}", order[k].class_name);
                steps.push(self.step(label, step_text, useful(EntryState::Anonymized)));
            }
        }

        let pattern = EventPattern::new(&self.full_constantify(&processed.anonymized_text));
        let key_length = (self.hash_bits / 4) as usize;
        let q_encode = self.encoded_score(useful(EntryState::Encoded), processed.entry.raw_length, key_length);
        let q_keep = processed.quality;
        Candidate {
            pattern,
            q_keep,
            encode: forced || q_encode.q >= q_keep.q,
            q_encode,
            forced,
            steps,
        }
    }

    /// Applies a plan: encoded entries get their key from `table`.
    pub fn commit(
        &self,
        mut processed: ProcessedEntry,
        candidate: Candidate,
        table: &SharedTable,
    ) -> Result<ProcessedEntry> {
        if !candidate.encode {
            return Ok(processed);
        }
        let key = table.get_or_insert(&candidate.pattern)?;
        let original_terms = tokenize(&processed.entry.message);
        let useful = self.policy.usefulness(&original_terms, EntryState::Encoded);
        let quality = self.encoded_score(useful, processed.entry.raw_length, key.hex.chars().count());
        if self.record_trace {
            processed.trace.extend(candidate.steps);
            processed.trace.push(TraceStep {
                label: "encoded".into(),
                text: key.hex.clone(),
                quality,
            });
        }
        processed.state = EntryState::Encoded;
        processed.final_text = key.hex.clone();
        processed.quality = quality;
        processed.pattern = Some(candidate.pattern.text);
        processed.key = Some(key.hex);
        Ok(processed)
    }

    /// Keeps the entry textual or encodes it, whichever scores higher.
    pub fn decide(&self, processed: ProcessedEntry, table: &SharedTable) -> Result<ProcessedEntry> {
        let candidate = self.plan(&processed);
        self.commit(processed, candidate, table)
    }

    /// Parses, anonymizes and (in encode mode) encodes one line.
    pub fn process_line(&self, line: &str, mode: Mode, lenient: bool, table: &SharedTable) -> Result<ProcessedEntry> {
        let entry = if lenient {
            parse_line_lenient(line)?
        } else {
            parse_line(line)?
        };
        let processed = self.anonymize(entry);
        match mode {
            Mode::Anonymize => Ok(processed),
            Mode::Encode => self.decide(processed, table),
        }
    }

    /// Sequential stream processing: one record per line, in order.
    /// Malformed lines become error records; table errors end the stream.
    pub fn process_stream<'a, I, S>(
        &'a self,
        lines: I,
        mode: Mode,
        lenient: bool,
        table: &'a SharedTable,
    ) -> impl Iterator<Item = Result<StreamRecord>> + 'a
    where
        I: IntoIterator<Item = S> + 'a,
        S: AsRef<str>,
    {
        lines.into_iter().enumerate().map(move |(i, line)| {
            let outcome = match self.process_line(line.as_ref(), mode, lenient, table) {
                Err(e @ (Error::MalformedEntry(_) | Error::EmptyEntry)) => Err(e),
                Err(fatal) => return Err(fatal),
                Ok(p) => Ok(p),
            };
            Ok(StreamRecord {
                line_no: i + 1,
                outcome,
            })
        })
    }

    fn prepare(&self, line: &str, opts: &StreamOptions) -> Result<(ProcessedEntry, Option<Candidate>)> {
        let entry = if opts.lenient {
            parse_line_lenient(line)?
        } else {
            parse_line(line)?
        };
        let processed = self.anonymize(entry);
        let candidate = (opts.mode == Mode::Encode).then(|| self.plan(&processed));
        Ok((processed, candidate))
    }

    /// Parallel stream processing: a reader batches lines, `workers` threads
    /// anonymize and plan, and the calling thread restores input order,
    /// commits keys and hands each record to `sink`.
    pub fn process_parallel<I, F>(&self, lines: I, opts: StreamOptions, table: &SharedTable, mut sink: F) -> Result<()>
    where
        I: Iterator<Item = std::io::Result<String>> + Send,
        F: FnMut(StreamRecord) -> Result<()>,
    {
        type Prepared = (usize, Result<(ProcessedEntry, Option<Candidate>)>);
        let workers = opts.workers.max(1);
        let batch_size = opts.batch_size.max(1);

        std::thread::scope(|scope| {
            let (work_tx, work_rx) = bounded::<(usize, usize, Vec<String>)>(workers * 4);
            let (done_tx, done_rx) = bounded::<(usize, Vec<Prepared>)>(workers * 4);

            let reader = scope.spawn(move || -> Result<()> {
                let mut batch = Vec::with_capacity(batch_size);
                let mut batch_id = 0;
                let mut first_line = 1;
                for line in lines {
                    batch.push(line?);
                    if batch.len() == batch_size {
                        let full = std::mem::replace(&mut batch, Vec::with_capacity(batch_size));
                        let n = full.len();
                        if work_tx.send((batch_id, first_line, full)).is_err() {
                            return Ok(());
                        }
                        batch_id += 1;
                        first_line += n;
                    }
                }
                if !batch.is_empty() {
                    let _ = work_tx.send((batch_id, first_line, batch));
                }
                Ok(())
            });

            for _ in 0..workers {
                let work_rx = work_rx.clone();
                let done_tx = done_tx.clone();
                let opts = &opts;
                scope.spawn(move || {
                    for (batch_id, first_line, batch) in work_rx {
                        let prepared: Vec<Prepared> = batch
                            .iter()
                            .enumerate()
                            .map(|(i, line)| (first_line + i, self.prepare(line, opts)))
                            .collect();
                        if done_tx.send((batch_id, prepared)).is_err() {
                            return;
                        }
                    }
                });
            }
            drop(work_rx);
            drop(done_tx);

            let mut pending: BTreeMap<usize, Vec<Prepared>> = BTreeMap::new();
            let mut next = 0;
            for (batch_id, prepared) in &done_rx {
                pending.insert(batch_id, prepared);
                while let Some(ready) = pending.remove(&next) {
                    for (line_no, result) in ready {
                        let outcome = match result {
                            Ok((processed, Some(candidate))) => Ok(self.commit(processed, candidate, table)?),
                            Ok((processed, None)) => Ok(processed),
                            Err(e) => Err(e),
                        };
                        sink(StreamRecord { line_no, outcome })?;
                    }
                    next += 1;
                }
            }
            drop(done_rx);
            reader.join().expect("reader thread panicked")
        })
    }
}
