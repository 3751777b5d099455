//! Corpus metrics and collection completeness.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::anonymizer::ProcessedEntry;
use crate::codec::ReferenceTable;
use crate::quality::EntryState;
use crate::{Error, Result};

/// Running counters. One per worker; [`CorpusStats::merge`] is associative
/// and commutative.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total_entries: u64,
    pub error_entries: u64,
    pub total_terms: u64,
    pub sensitive_terms: u64,
    pub terms_after: u64,
    pub encoded_entries: u64,
    /// Entries kept textual while still carrying meaningful variables.
    pub kept_semantic_entries: u64,
    pub zero_quality_entries: u64,
    /// Entries whose output line is longer than the input line.
    pub grown_entries: u64,
    pub bytes_in: u64,
    pub bytes_out: u64,
    pub message_bytes_in: u64,
    pub anonymized_message_bytes: u64,
    pub message_bytes_out: u64,
    pub census: BTreeMap<String, u64>,
}

impl CorpusStats {
    pub fn new() -> Self {
        Self::default()
    }

    /// Line sizes include the timestamp, its separator and the newline.
    pub fn accumulate(&mut self, p: &ProcessedEntry) {
        let stamp = p.entry.stamp.len() as u64 + 1;
        let msg_in = p.entry.message.len() as u64;
        let msg_out = p.final_text.len() as u64;
        self.total_entries += 1;
        self.total_terms += p.terms_before as u64;
        self.sensitive_terms += p.sensitive_before as u64;
        self.terms_after += p.terms_after() as u64;
        self.bytes_in += stamp + msg_in + 1;
        self.bytes_out += stamp + msg_out + 1;
        self.message_bytes_in += msg_in;
        self.anonymized_message_bytes += p.anonymized_text.len() as u64;
        self.message_bytes_out += msg_out;
        if msg_out > msg_in {
            self.grown_entries += 1;
        }
        if p.is_zero_quality() {
            self.zero_quality_entries += 1;
        }
        match p.state {
            EntryState::Encoded => {
                self.encoded_entries += 1;
                if let Some(pattern) = &p.pattern {
                    *self.census.entry(pattern.clone()).or_insert(0) += 1;
                }
            }
            _ if !p.remaining.is_empty() => self.kept_semantic_entries += 1,
            _ => {}
        }
    }

    /// Counts a rejected line. Its input bytes are unknown to the report;
    /// the error record written in its place is counted as output.
    pub fn accumulate_error(&mut self, output_line_len: usize) {
        self.error_entries += 1;
        self.bytes_out += output_line_len as u64 + 1;
    }

    pub fn merge(&mut self, other: &CorpusStats) {
        self.total_entries += other.total_entries;
        self.error_entries += other.error_entries;
        self.total_terms += other.total_terms;
        self.sensitive_terms += other.sensitive_terms;
        self.terms_after += other.terms_after;
        self.encoded_entries += other.encoded_entries;
        self.kept_semantic_entries += other.kept_semantic_entries;
        self.zero_quality_entries += other.zero_quality_entries;
        self.grown_entries += other.grown_entries;
        self.bytes_in += other.bytes_in;
        self.bytes_out += other.bytes_out;
        self.message_bytes_in += other.message_bytes_in;
        self.anonymized_message_bytes += other.anonymized_message_bytes;
        self.message_bytes_out += other.message_bytes_out;
        for (pattern, n) in &other.census {
            *self.census.entry(pattern.clone()).or_insert(0) += n;
        }
    }

    /// Patterns by descending count, then text.
    pub fn census_by_frequency(&self) -> Vec<(&str, u64)> {
        let mut rows: Vec<(&str, u64)> = self.census.iter().map(|(p, n)| (p.as_str(), *n)).collect();
        rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        rows
    }

    pub fn report(&self) -> CorpusReport {
        let entries = self.total_entries as f64;
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let pct = |out: u64, inp: u64| {
            if inp == 0 {
                0.0
            } else {
                100.0 * (1.0 - out as f64 / inp as f64)
            }
        };
        let mut coverage_curve = Vec::with_capacity(self.census.len());
        let mut acc = 0;
        for (rank, (_, n)) in self.census_by_frequency().into_iter().enumerate() {
            acc += n;
            coverage_curve.push((rank + 1, ratio(acc, self.total_entries)));
        }
        let mean_terms_before = if entries > 0.0 {
            self.total_terms as f64 / entries
        } else {
            0.0
        };
        let mean_terms_after = if entries > 0.0 {
            self.terms_after as f64 / entries
        } else {
            0.0
        };
        CorpusReport {
            total_entries: self.total_entries,
            error_entries: self.error_entries,
            total_terms: self.total_terms,
            sensitive_terms: self.sensitive_terms,
            sensitive_fraction: ratio(self.sensitive_terms, self.total_terms),
            unique_patterns: self.census.len() as u64,
            coverage_curve,
            bytes_in: self.bytes_in,
            bytes_out: self.bytes_out,
            reduction_pct: pct(self.bytes_out, self.bytes_in),
            message_reduction_pct: pct(self.message_bytes_out, self.message_bytes_in),
            anonymization_change_pct: -pct(self.anonymized_message_bytes, self.message_bytes_in),
            encoded_fraction: ratio(self.encoded_entries, self.total_entries),
            kept_semantic_fraction: ratio(self.kept_semantic_entries, self.total_entries),
            zero_quality_entries: self.zero_quality_entries,
            grown_entries: self.grown_entries,
            mean_terms_before,
            mean_terms_after,
            terms_reduction_pct: if mean_terms_before > 0.0 {
                100.0 * (1.0 - mean_terms_after / mean_terms_before)
            } else {
                0.0
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub total_entries: u64,
    pub error_entries: u64,
    pub total_terms: u64,
    pub sensitive_terms: u64,
    pub sensitive_fraction: f64,
    pub unique_patterns: u64,
    /// `(rank, cumulative entry fraction)` over the encoded-pattern census.
    pub coverage_curve: Vec<(usize, f64)>,
    pub bytes_in: u64,
    pub bytes_out: u64,
    /// `100 * (1 - bytes_out / bytes_in)` over whole lines.
    pub reduction_pct: f64,
    /// The same over messages only.
    pub message_reduction_pct: f64,
    /// Size change of the messages caused by anonymization alone, in percent
    /// (positive means growth).
    pub anonymization_change_pct: f64,
    pub encoded_fraction: f64,
    pub kept_semantic_fraction: f64,
    pub zero_quality_entries: u64,
    pub grown_entries: u64,
    pub mean_terms_before: f64,
    pub mean_terms_after: f64,
    /// Terms-per-entry proxy for downstream processing cost.
    pub terms_reduction_pct: f64,
}

impl CorpusReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for CorpusReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "entries:            {} ({} rejected)",
            self.total_entries, self.error_entries
        )?;
        writeln!(
            f,
            "sensitive terms:    {} of {} ({:.1}%)",
            self.sensitive_terms,
            self.total_terms,
            100.0 * self.sensitive_fraction
        )?;
        writeln!(f, "unique patterns:    {}", self.unique_patterns)?;
        if let Some((_, top)) = self.coverage_curve.get(39).or(self.coverage_curve.last()) {
            writeln!(f, "top-40 coverage:    {:.1}%", 100.0 * top)?;
        }
        writeln!(f, "encoded entries:    {:.1}%", 100.0 * self.encoded_fraction)?;
        writeln!(f, "kept with meaning:  {:.1}%", 100.0 * self.kept_semantic_fraction)?;
        writeln!(
            f,
            "bytes:              {} -> {} ({:.1}% smaller)",
            self.bytes_in, self.bytes_out, self.reduction_pct
        )?;
        writeln!(
            f,
            "anonymization only: {:+.2}% message bytes",
            self.anonymization_change_pct
        )?;
        write!(
            f,
            "terms per entry:    {:.2} -> {:.2} ({:.1}% fewer)",
            self.mean_terms_before, self.mean_terms_after, self.terms_reduction_pct
        )
    }
}

/// Share of all encoded entries held by the `k` most frequent rows.
pub fn frequent_pattern_coverage(table: &ReferenceTable, k: usize) -> f64 {
    let total = table.total_count();
    if total == 0 {
        return 0.0;
    }
    let top: u64 = table.rows_by_frequency().iter().take(k).map(|r| r.count).sum();
    top as f64 / total as f64
}

/// Consecutive missing days of one node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapRun {
    pub node: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

/// Which (node, day) cells have a collected log file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletenessMatrix {
    nodes: Vec<String>,
    days: Vec<NaiveDate>,
    present: Vec<bool>,
}

fn parse_flag(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "y" | "yes" | "true" | "present" => Some(true),
        "0" | "n" | "no" | "false" | "missing" => Some(false),
        _ => None,
    }
}

impl CompletenessMatrix {
    /// All cells start missing.
    pub fn new(nodes: Vec<String>, days: Vec<NaiveDate>) -> Self {
        let present = vec![false; nodes.len() * days.len()];
        CompletenessMatrix { nodes, days, present }
    }

    /// Reads `node,date[,present]` rows (dates as `YYYY-MM-DD`). The day axis
    /// spans every date from the first to the last one mentioned; cells that
    /// are never listed count as missing. A header row is allowed.
    pub fn from_manifest(text: &str) -> Result<Self> {
        let mut cells = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = |reason: &str| Error::Manifest {
                line: i + 1,
                reason: reason.to_string(),
            };
            if cols.len() < 2 || cols.len() > 3 {
                return Err(bad("expected node,date[,present]"));
            }
            let date = match NaiveDate::parse_from_str(cols[1], "%Y-%m-%d") {
                Ok(d) => d,
                Err(_) if cells.is_empty() && i == 0 => continue,
                Err(_) => return Err(bad("date must be YYYY-MM-DD")),
            };
            if cols[0].is_empty() {
                return Err(bad("empty node id"));
            }
            let present = match cols.get(2) {
                None => true,
                Some(v) => parse_flag(v).ok_or_else(|| bad("present must be 1/0, yes/no or true/false"))?,
            };
            cells.push((cols[0].to_string(), date, present));
        }
        let nodes: BTreeSet<&str> = cells.iter().map(|c| c.0.as_str()).collect();
        let (Some(first), Some(last)) = (cells.iter().map(|c| c.1).min(), cells.iter().map(|c| c.1).max()) else {
            return Err(Error::EmptyMatrix);
        };
        let days: Vec<NaiveDate> = first.iter_days().take_while(|d| *d <= last).collect();
        let mut m = CompletenessMatrix::new(nodes.into_iter().map(String::from).collect(), days);
        for (node, date, present) in &cells {
            if *present {
                m.set(node, *date, true);
            }
        }
        Ok(m)
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn days(&self) -> &[NaiveDate] {
        &self.days
    }

    fn index(&self, node: &str, day: NaiveDate) -> Option<usize> {
        let n = self.nodes.iter().position(|x| x == node)?;
        let d = self.days.iter().position(|x| *x == day)?;
        Some(n * self.days.len() + d)
    }

    /// Returns false if the cell is outside the matrix.
    pub fn set(&mut self, node: &str, day: NaiveDate, present: bool) -> bool {
        match self.index(node, day) {
            Some(i) => {
                self.present[i] = present;
                true
            }
            None => false,
        }
    }

    pub fn is_present(&self, node: &str, day: NaiveDate) -> Option<bool> {
        self.index(node, day).map(|i| self.present[i])
    }

    pub fn cells(&self) -> usize {
        self.present.len()
    }

    pub fn missing(&self) -> usize {
        self.present.iter().filter(|p| !**p).count()
    }

    /// `1 - missing / cells`.
    pub fn completeness(&self) -> Result<f64> {
        if self.present.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        Ok(1.0 - self.missing() as f64 / self.cells() as f64)
    }

    /// Runs of consecutive missing days, by node then start date.
    pub fn gap_runs(&self) -> Vec<GapRun> {
        let mut runs = Vec::new();
        let width = self.days.len();
        for (n, node) in self.nodes.iter().enumerate() {
            let row = &self.present[n * width..(n + 1) * width];
            let mut start = None;
            for (d, present) in row.iter().enumerate() {
                match (present, start) {
                    (false, None) => start = Some(d),
                    (true, Some(s)) => {
                        runs.push(GapRun {
                            node: node.clone(),
                            start: self.days[s],
                            end: self.days[d - 1],
                        });
                        start = None;
                    }
                    _ => {}
                }
            }
            if let Some(s) = start {
                runs.push(GapRun {
                    node: node.clone(),
                    start: self.days[s],
                    end: self.days[width - 1],
                });
            }
        }
        runs
    }

    pub fn gap_csv(&self) -> String {
        let mut out = String::from("node,start_date,end_date\n");
        for run in self.gap_runs() {
            out.push_str(&format!("{},{},{}\n", run.node, run.start, run.end));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anonymizer::Anonymizer;
    use crate::codec::{EventPattern, SharedTable};
    use crate::detector::PatternSet;
    use crate::entry::{parse_line, tokenize};
    use crate::policy::PolicyTable;

    fn engine() -> Anonymizer {
        Anonymizer::new(&PatternSet::table_one(), PolicyTable::preset("paper-table2").unwrap()).unwrap()
    }

    fn encode(a: &Anonymizer, t: &SharedTable, line: &str) -> ProcessedEntry {
        a.decide(a.anonymize(parse_line(line).unwrap()), t).unwrap()
    }

    fn day(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    #[test]
    fn single_encoded_sample() {
        let a = engine();
        let t = SharedTable::new(ReferenceTable::new(32).unwrap());
        let mut s = CorpusStats::new();
        s.accumulate(&encode(
            &a,
            &t,
            "1462053899 Accepted publickey for Siavash from 4.3.2.1",
        ));
        let stamp = "1462053899 ".len() as u64;
        assert_eq!(s.bytes_in, stamp + 43 + 1);
        assert_eq!(s.bytes_out, stamp + 8 + 1);
        let r = s.report();
        assert_eq!(r.encoded_fraction, 1.0);
        assert_eq!(r.unique_patterns, 1);
        assert_eq!(r.coverage_curve, vec![(1, 1.0)]);
        assert_eq!((r.total_terms, r.sensitive_terms), (6, 2));
        assert!((r.message_reduction_pct - 100.0 * (1.0 - 8.0 / 43.0)).abs() < 1e-9);
    }

    #[test]
    fn unchanged_entry_contributes_nothing() {
        let a = engine();
        let mut s = CorpusStats::new();
        s.accumulate(&a.anonymize(parse_line("7 disabling lock debugging due to kernel taint").unwrap()));
        let r = s.report();
        assert_eq!(r.bytes_in, r.bytes_out);
        assert_eq!(r.reduction_pct, 0.0);
        assert_eq!(r.anonymization_change_pct, 0.0);
        assert_eq!(r.unique_patterns, 0);
    }

    #[test]
    fn sensitive_terms_match_a_recount() {
        let a = engine();
        let t = SharedTable::new(ReferenceTable::new(32).unwrap());
        let batch = [
            "1 Accepted publickey for Siavash from 4.3.2.1",
            "2 session closed for root",
            "3 Failed password for invalid user admin from 10.1.1.9 port 2222 ssh2",
            "4 mail to bob@example.org bounced",
            "5 disk at /dev/sda1 is 93% full",
            "6 nothing variable here",
            "7 eth0 link 00:1a:2b:3c:4d:5e up",
            "8 wrote 4096 bytes to /tmp/x",
            "9 sshd[1234]: Connection closed by 192.168.0.1",
            "10 user=alice uid=1000 logged in",
        ];
        let mut s = CorpusStats::new();
        let mut recount = 0;
        for line in batch {
            let p = encode(&a, &t, line);
            let entry = parse_line(line).unwrap();
            let ds = a.detect(&entry.message);
            let terms = a.policy().classify_terms(&tokenize(&entry.message), &ds);
            recount += terms.iter().filter(|t| t.sensitive).count() as u64;
            s.accumulate(&p);
        }
        assert!(recount > 0);
        assert_eq!(s.report().sensitive_terms, recount);
        assert_eq!(s.report().total_entries, 10);
    }

    #[test]
    fn merge_is_order_free() {
        let a = engine();
        let t = SharedTable::new(ReferenceTable::new(32).unwrap());
        let lines = ["1 session closed for a", "2 session closed for b", "3 job done at 0x1f"];
        let parts: Vec<CorpusStats> = lines
            .iter()
            .map(|l| {
                let mut s = CorpusStats::new();
                s.accumulate(&encode(&a, &t, l));
                s
            })
            .collect();
        let mut ab = parts[0].clone();
        ab.merge(&parts[1]);
        ab.merge(&parts[2]);
        let mut ba = parts[2].clone();
        ba.merge(&parts[0]);
        ba.merge(&parts[1]);
        assert_eq!(ab, ba);
        let mut whole = CorpusStats::new();
        for l in lines {
            whole.accumulate(&encode(&a, &t, l));
        }
        assert_eq!(whole, ab);
        let mut e = CorpusStats::new();
        e.merge(&ab);
        assert_eq!(e, ab);
    }

    #[test]
    fn coverage_of_tables() {
        let mut table = ReferenceTable::new(32).unwrap();
        for i in 0..10 {
            for _ in 0..=i {
                table.get_or_insert(&EventPattern::new(&format!("p{i}")), None).unwrap();
            }
        }
        assert_eq!(frequent_pattern_coverage(&table, 0), 0.0);
        assert_eq!(frequent_pattern_coverage(&table, 10), 1.0);
        assert_eq!(frequent_pattern_coverage(&table, 99), 1.0);
        assert!((frequent_pattern_coverage(&table, 1) - 10.0 / 55.0).abs() < 1e-12);
        let optimized = table.optimize_key_lengths().table;
        for k in 0..12 {
            assert_eq!(
                frequent_pattern_coverage(&table, k),
                frequent_pattern_coverage(&optimized, k)
            );
        }
    }

    #[test]
    fn shaped_table_coverage() {
        let mut table = ReferenceTable::new(32).unwrap();
        let mut add = |p: String, n: u64| {
            for _ in 0..n {
                table.get_or_insert(&EventPattern::new(&p), None).unwrap();
            }
        };
        for i in 0..40 {
            add(format!("frequent {i}"), 225);
        }
        for i in 0..1960 {
            add(format!("rare {i}"), if i < 1000 { 1 } else { 0 });
        }
        assert!(frequent_pattern_coverage(&table, 40) >= 0.90);
    }

    #[test]
    fn manifest_completeness() {
        let mut csv = String::from("node,date,present\n");
        let mut missing = 0;
        for n in 0..100 {
            for d in 1..=10 {
                let gone = (n * 10 + d) % 33 == 0 && missing < 30;
                if gone {
                    missing += 1;
                }
                csv.push_str(&format!("n{n:03},2017-01-{d:02},{}\n", if gone { 0 } else { 1 }));
            }
        }
        assert_eq!(missing, 30);
        let m = CompletenessMatrix::from_manifest(&csv).unwrap();
        assert_eq!((m.nodes().len(), m.days().len()), (100, 10));
        assert_eq!(m.completeness().unwrap(), 0.97);
        assert_eq!(m.gap_runs().len(), 30);
    }

    #[test]
    fn unlisted_cells_are_missing() {
        let m = CompletenessMatrix::from_manifest("a,2017-01-01\na,2017-01-04\nb,2017-01-02\n").unwrap();
        assert_eq!(m.days().len(), 4);
        assert_eq!(m.cells(), 8);
        assert_eq!(m.missing(), 5);
        assert_eq!(
            m.gap_csv(),
            "node,start_date,end_date\na,2017-01-02,2017-01-03\nb,2017-01-01,2017-01-01\nb,2017-01-03,2017-01-04\n"
        );
        assert_eq!(m.is_present("a", day("2017-01-04")), Some(true));
        assert_eq!(m.is_present("c", day("2017-01-04")), None);
    }

    #[test]
    fn trivial_matrices() {
        let days = vec![day("2017-01-01"), day("2017-01-02")];
        let mut m = CompletenessMatrix::new(vec!["a".into(), "b".into()], days.clone());
        assert_eq!(m.completeness().unwrap(), 0.0);
        for n in ["a", "b"] {
            for d in &days {
                assert!(m.set(n, *d, true));
            }
        }
        assert_eq!(m.completeness().unwrap(), 1.0);
        assert!(m.gap_runs().is_empty());
        assert_eq!(
            CompletenessMatrix::new(vec![], days).completeness(),
            Err(Error::EmptyMatrix)
        );
        assert_eq!(
            CompletenessMatrix::from_manifest("node,date\n"),
            Err(Error::EmptyMatrix)
        );
    }

    #[test]
    fn manifest_errors() {
        assert!(matches!(
            CompletenessMatrix::from_manifest("a,2017-01-01\nb,yesterday\n"),
            Err(Error::Manifest { line: 2, .. })
        ));
        assert!(matches!(
            CompletenessMatrix::from_manifest("a,2017-01-01,maybe\n"),
            Err(Error::Manifest { line: 1, .. })
        ));
        assert!(matches!(
            CompletenessMatrix::from_manifest("a\n"),
            Err(Error::Manifest { line: 1, .. })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn completeness_is_one_minus_missing_share(cells in proptest::collection::vec(any::<bool>(), 1..60), width in 1usize..6) {
                let days: Vec<NaiveDate> = day("2020-02-27").iter_days().take(width).collect();
                let rows = cells.len().div_ceil(width);
                let nodes: Vec<String> = (0..rows).map(|i| format!("n{i}")).collect();
                let mut m = CompletenessMatrix::new(nodes.clone(), days.clone());
                let mut missing = rows * width;
                for (i, p) in cells.iter().enumerate() {
                    if *p {
                        m.set(&nodes[i / width], days[i % width], true);
                        missing -= 1;
                    }
                }
                let c = m.completeness().unwrap();
                prop_assert_eq!(c, 1.0 - missing as f64 / (rows * width) as f64);
                prop_assert!((0.0..=1.0).contains(&c));
                let gap_days: i64 = m.gap_runs().iter().map(|g| (g.end - g.start).num_days() + 1).sum();
                prop_assert_eq!(gap_days as usize, missing);
            }

            #[test]
            fn coverage_curve_is_monotone(counts in proptest::collection::vec(1u64..50, 1..30)) {
                let mut s = CorpusStats::new();
                for (i, n) in counts.iter().enumerate() {
                    s.census.insert(format!("p{i}"), *n);
                    s.total_entries += n;
                }
                let curve = s.report().coverage_curve;
                prop_assert!(curve.windows(2).all(|w| w[0].1 <= w[1].1));
                prop_assert!(curve.last().unwrap().1 <= 1.0 + 1e-12);
            }
        }
    }
}
