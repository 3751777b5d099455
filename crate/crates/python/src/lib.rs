//! Python bindings: `import logcleanse`.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::OnceLock;

use logcleanse::anonymizer::{Mode, StreamOptions};
use logcleanse::codec::parse_annotations;
use logcleanse::{
    Anonymizer, CompletenessMatrix, CorpusStats, EventPattern, PatternSet, PolicyTable, ProcessedEntry, ReferenceTable,
    SharedTable,
};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn value_error(e: logcleanse::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn load_policy(policy: &str) -> PyResult<PolicyTable> {
    if logcleanse::policy::PRESET_NAMES.contains(&policy) {
        PolicyTable::preset(policy)
    } else {
        PolicyTable::parse(policy)
    }
    .map_err(value_error)
}

fn parse_mode(mode: &str) -> PyResult<Mode> {
    match mode {
        "anonymize" => Ok(Mode::Anonymize),
        "encode" => Ok(Mode::Encode),
        other => Err(PyValueError::new_err(format!("unknown mode `{other}`"))),
    }
}

/// Splits `<timestamp> <message>` into `(epoch seconds, message)`.
#[pyfunction]
#[pyo3(signature = (line, lenient = false))]
fn parse_line(line: &str, lenient: bool) -> PyResult<(i64, String)> {
    let entry = if lenient {
        logcleanse::parse_line_lenient(line)
    } else {
        logcleanse::parse_line(line)
    }
    .map_err(value_error)?;
    Ok((entry.timestamp, entry.message))
}

#[pyfunction]
fn tokenize(message: &str) -> Vec<String> {
    logcleanse::tokenize(message).into_iter().map(|t| t.text).collect()
}

/// Variable terms found by the built-in classes:
/// `(class, start, end, original, placeholder)` with byte offsets.
#[pyfunction]
fn detect(message: &str) -> Vec<(String, usize, usize, String, String)> {
    static BUILTIN: OnceLock<PatternSet> = OnceLock::new();
    BUILTIN
        .get_or_init(PatternSet::table_one)
        .detect(message)
        .into_iter()
        .map(|d| (d.class_name, d.span.0, d.span.1, d.original, d.placeholder))
        .collect()
}

#[pyfunction]
#[pyo3(signature = (pattern, bits = 32))]
fn hash_pattern(pattern: &str, bits: u32) -> PyResult<String> {
    logcleanse::codec::hash_pattern(&EventPattern::new(pattern), bits)
        .map(|k| k.hex)
        .map_err(value_error)
}

/// Share of present cells in a `node,date[,present]` manifest.
#[pyfunction]
fn completeness(manifest: &str) -> PyResult<f64> {
    CompletenessMatrix::from_manifest(manifest)
        .and_then(|m| m.completeness())
        .map_err(value_error)
}

#[pyclass(name = "ProcessedEntry", module = "logcleanse", frozen)]
struct PyProcessedEntry {
    inner: ProcessedEntry,
}

#[pymethods]
impl PyProcessedEntry {
    #[getter]
    fn timestamp(&self) -> i64 {
        self.inner.entry.timestamp
    }

    #[getter]
    fn message(&self) -> &str {
        &self.inner.entry.message
    }

    /// `raw`, `anonymized` or `encoded`.
    #[getter]
    fn state(&self) -> &'static str {
        self.inner.state.as_str()
    }

    #[getter]
    fn final_text(&self) -> &str {
        &self.inner.final_text
    }

    #[getter]
    fn anonymized_text(&self) -> &str {
        &self.inner.anonymized_text
    }

    #[getter]
    fn quality(&self) -> f64 {
        self.inner.quality.q
    }

    #[getter]
    fn pattern(&self) -> Option<&str> {
        self.inner.pattern.as_deref()
    }

    #[getter]
    fn key(&self) -> Option<&str> {
        self.inner.key.as_deref()
    }

    /// `(label, text, quality)` per recorded step; empty unless tracing.
    #[getter]
    fn trace(&self) -> Vec<(String, String, f64)> {
        self.inner
            .trace
            .iter()
            .map(|s| (s.label.clone(), s.text.clone(), s.quality.q))
            .collect()
    }

    fn output_line(&self) -> String {
        self.inner.output_line()
    }

    fn __repr__(&self) -> String {
        format!(
            "ProcessedEntry(state={:?}, final_text={:?})",
            self.inner.state.as_str(),
            self.inner.final_text
        )
    }
}

/// Hash-key to event-pattern table. Safe to share between threads.
#[pyclass(name = "ReferenceTable", module = "logcleanse", frozen)]
struct PyReferenceTable {
    inner: SharedTable,
}

#[pymethods]
impl PyReferenceTable {
    #[new]
    #[pyo3(signature = (hash_bits = 32, annotations = None))]
    fn new(hash_bits: u32, annotations: Option<&str>) -> PyResult<Self> {
        let table = ReferenceTable::new(hash_bits).map_err(value_error)?;
        Ok(Self::wrap(table, annotations))
    }

    #[staticmethod]
    #[pyo3(signature = (text, hash_bits = 32, annotations = None))]
    fn from_json(text: &str, hash_bits: u32, annotations: Option<&str>) -> PyResult<Self> {
        let table = ReferenceTable::from_json(text, hash_bits).map_err(value_error)?;
        Ok(Self::wrap(table, annotations))
    }

    #[staticmethod]
    #[pyo3(signature = (path, hash_bits = 32, annotations = None))]
    fn load(path: PathBuf, hash_bits: u32, annotations: Option<&str>) -> PyResult<Self> {
        let table = ReferenceTable::load(&path, hash_bits).map_err(value_error)?;
        Ok(Self::wrap(table, annotations))
    }

    fn to_json(&self) -> String {
        self.inner.lock().to_json()
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.lock().save(&path).map_err(value_error)
    }

    fn __len__(&self) -> usize {
        self.inner.lock().len()
    }

    fn total_count(&self) -> u64 {
        self.inner.lock().total_count()
    }

    /// `(pattern, meaning, count)` for a key.
    fn lookup(&self, key: &str) -> PyResult<(String, String, u64)> {
        let table = self.inner.lock();
        let row = table.lookup(key).map_err(value_error)?;
        Ok((row.pattern.clone(), row.meaning.clone(), row.count))
    }

    fn key_of(&self, pattern: &str) -> Option<String> {
        self.inner
            .lock()
            .key_of(&EventPattern::new(pattern).text)
            .map(String::from)
    }

    /// Shortens keys by frequency in place and returns the old-to-new map.
    fn optimize_key_lengths(&self) -> HashMap<String, String> {
        let mut table = self.inner.lock();
        let optimized = table.optimize_key_lengths();
        *table = optimized.table;
        optimized.remap.into_iter().collect()
    }

    /// Share of entries held by the `k` most frequent patterns.
    fn coverage(&self, k: usize) -> f64 {
        logcleanse::frequent_pattern_coverage(&self.inner.lock(), k)
    }
}

impl PyReferenceTable {
    fn wrap(table: ReferenceTable, annotations: Option<&str>) -> Self {
        let mut inner = SharedTable::new(table);
        if let Some(text) = annotations {
            inner = inner.with_annotations(parse_annotations(text));
        }
        PyReferenceTable { inner }
    }
}

/// The anonymization and encoding pipeline.
#[pyclass(name = "Anonymizer", module = "logcleanse", frozen)]
struct PyAnonymizer {
    inner: Anonymizer,
}

#[pymethods]
impl PyAnonymizer {
    /// `policy` is a preset name or policy text; `patterns` is a pattern
    /// table replacing the built-in classes.
    #[new]
    #[pyo3(signature = (policy = "paper-table2", hash_bits = 32, trace = false, patterns = None))]
    fn new(policy: &str, hash_bits: u32, trace: bool, patterns: Option<&str>) -> PyResult<Self> {
        let patterns = match patterns {
            Some(text) => PatternSet::load(text, false).map_err(value_error)?,
            None => PatternSet::table_one(),
        };
        let inner = Anonymizer::new(&patterns, load_policy(policy)?)
            .and_then(|a| a.with_hash_bits(hash_bits))
            .map_err(value_error)?
            .with_trace(trace);
        Ok(PyAnonymizer { inner })
    }

    /// `(term, sensitive, semantic)` for each term of `message`.
    fn classify(&self, message: &str) -> Vec<(String, bool, bool)> {
        self.inner
            .classify(message)
            .into_iter()
            .map(|t| (t.text, t.sensitive, t.semantic))
            .collect()
    }

    #[pyo3(signature = (line, lenient = false))]
    fn anonymize(&self, line: &str, lenient: bool) -> PyResult<PyProcessedEntry> {
        let table = SharedTable::new(ReferenceTable::new(self.inner.hash_bits()).map_err(value_error)?);
        let inner = self
            .inner
            .process_line(line, Mode::Anonymize, lenient, &table)
            .map_err(value_error)?;
        Ok(PyProcessedEntry { inner })
    }

    #[pyo3(signature = (line, table, lenient = false))]
    fn encode(&self, line: &str, table: &PyReferenceTable, lenient: bool) -> PyResult<PyProcessedEntry> {
        let inner = self
            .inner
            .process_line(line, Mode::Encode, lenient, &table.inner)
            .map_err(value_error)?;
        Ok(PyProcessedEntry { inner })
    }

    /// Processes many lines and returns `(output lines, JSON report)`.
    /// Rejected lines become `#ERROR#` records.
    #[pyo3(signature = (lines, table, mode = "encode", workers = 1, lenient = false))]
    fn process(
        &self,
        py: Python<'_>,
        lines: Vec<String>,
        table: &PyReferenceTable,
        mode: &str,
        workers: usize,
        lenient: bool,
    ) -> PyResult<(Vec<String>, String)> {
        let opts = StreamOptions {
            mode: parse_mode(mode)?,
            lenient,
            workers: workers.max(1),
            ..StreamOptions::default()
        };
        let shared = &table.inner;
        let anonymizer = &self.inner;
        py.detach(move || {
            let mut out = Vec::with_capacity(lines.len());
            let mut stats = CorpusStats::new();
            anonymizer.process_parallel(lines.into_iter().map(Ok), opts, shared, |record| {
                let line = record.output_line();
                match &record.outcome {
                    Ok(p) => stats.accumulate(p),
                    Err(_) => stats.accumulate_error(line.len()),
                }
                out.push(line);
                Ok(())
            })?;
            Ok((out, stats.report().to_json()))
        })
        .map_err(value_error)
    }
}

#[pymodule]
#[pyo3(name = "logcleanse")]
fn logcleanse_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(parse_line, m)?)?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(detect, m)?)?;
    m.add_function(wrap_pyfunction!(hash_pattern, m)?)?;
    m.add_function(wrap_pyfunction!(completeness, m)?)?;
    m.add_class::<PyAnonymizer>()?;
    m.add_class::<PyReferenceTable>()?;
    m.add_class::<PyProcessedEntry>()?;
    m.add("PRESETS", logcleanse::policy::PRESET_NAMES.to_vec())?;
    Ok(())
}
