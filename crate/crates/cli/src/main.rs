use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use logcleanse::anonymizer::{Mode, StreamOptions};
use logcleanse::codec::{parse_annotations, DEFAULT_BITS};
use logcleanse::{
    Anonymizer, Coefficients, CompletenessMatrix, CorpusStats, Error, PatternSet, PolicyTable, ReferenceTable,
    SharedTable,
};

const DEFAULT_POLICY: &str = "paper-table2";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RunMode {
    /// Remove sensitive and semantic-less variables only.
    Anonymize,
    /// Anonymize, then replace event patterns with hash-keys.
    Encode,
    /// Run the encoder and print the corpus report instead of the stream.
    Stats,
    /// Read a `node,date[,present]` manifest and report collection gaps.
    Completeness,
}

/// Streaming syslog anonymizer and event-pattern encoder.
///
/// Input lines are `<timestamp> <message>`; output lines keep the timestamp
/// and carry the anonymized message or its hash-key.
#[derive(Debug, Parser)]
#[command(name = "logcleanse", version)]
struct Cli {
    #[arg(long, value_enum, default_value = "encode")]
    mode: RunMode,

    /// Policy file or preset name (paper-table2, tud-table5).
    #[arg(long, env = "LOGCLEANSE_POLICY")]
    policy: Option<String>,

    /// Pattern table replacing the built-in detection classes.
    #[arg(long)]
    patterns: Option<PathBuf>,

    /// Hash-key length in bits (16..=256, multiple of 8).
    #[arg(long, default_value_t = DEFAULT_BITS)]
    hash_bits: u32,

    /// Quality coefficients `n,s,r`, each in (0, 1].
    #[arg(long, value_parser = parse_coefficients)]
    coeff: Option<Coefficients>,

    /// Reference table (JSON); read if present, rewritten at the end.
    #[arg(long)]
    table: Option<PathBuf>,

    /// `pattern<TAB>meaning` lines for new table rows.
    #[arg(long)]
    annotations: Option<PathBuf>,

    /// Input file, `-` for standard input.
    #[arg(long, default_value = "-")]
    input: PathBuf,

    /// Output file, `-` for standard output.
    #[arg(long, default_value = "-")]
    output: PathBuf,

    /// Accept lines without a timestamp (timestamp 0).
    #[arg(long)]
    lenient: bool,

    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    workers: u16,

    /// After encoding, shorten keys by frequency and write the `old,new`
    /// key map to this CSV file.
    #[arg(long)]
    optimize_keys: Option<PathBuf>,

    /// Write the JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn parse_coefficients(s: &str) -> Result<Coefficients, String> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| "expected three numbers n,s,r".to_string())?;
    match vals[..] {
        [n, s, r] => Coefficients::new(n, s, r).ok_or_else(|| "coefficients must lie in (0, 1]".to_string()),
        _ => Err("expected three numbers n,s,r".to_string()),
    }
}

fn read_text(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn load_policy(cli: &Cli) -> Result<PolicyTable, Error> {
    let name = cli.policy.as_deref().unwrap_or_else(|| {
        eprintln!("logcleanse: no policy given, using preset {DEFAULT_POLICY}");
        DEFAULT_POLICY
    });
    let mut policy = if logcleanse::policy::PRESET_NAMES.contains(&name) {
        PolicyTable::preset(name)?
    } else {
        PolicyTable::parse(&read_text(Path::new(name))?)?
    };
    if let Some(c) = cli.coeff {
        policy.coefficients = c;
    }
    Ok(policy)
}

fn open_input(path: &Path) -> Result<Box<dyn Read + Send>, Error> {
    if path == Path::new("-") {
        Ok(Box::new(io::stdin()))
    } else {
        let f = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Ok(Box::new(f))
    }
}

fn open_output(path: &Path) -> Result<Box<dyn Write>, Error> {
    if path == Path::new("-") {
        Ok(Box::new(io::stdout()))
    } else {
        let f = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Ok(Box::new(f))
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Lines without their terminator; invalid UTF-8 is replaced, not fatal.
fn input_lines(input: Box<dyn Read + Send>) -> impl Iterator<Item = io::Result<String>> + Send {
    BufReader::new(input).split(b'\n').map(|r| {
        r.map(|mut bytes| {
            if bytes.last() == Some(&b'\r') {
                bytes.pop();
            }
            String::from_utf8(bytes).unwrap_or_else(|e| String::from_utf8_lossy(e.as_bytes()).into_owned())
        })
    })
}

/// Returns true if any line was rejected.
fn run_stream(cli: &Cli) -> Result<bool, Error> {
    let policy = load_policy(cli)?;
    let patterns = match &cli.patterns {
        Some(path) => PatternSet::load(&read_text(path)?, false)?,
        None => PatternSet::table_one(),
    };
    let anonymizer = Anonymizer::new(&patterns, policy)?.with_hash_bits(cli.hash_bits)?;

    if cli.mode == RunMode::Encode && cli.table.is_none() {
        return Err(Error::Config("--table is required in encode mode".into()));
    }
    // new rows follow --hash-bits even when a stored table used another length
    let table = match &cli.table {
        Some(path) if path.exists() => ReferenceTable::load(path, cli.hash_bits)?,
        _ => ReferenceTable::new(cli.hash_bits)?,
    };
    let mut shared = SharedTable::new(table);
    if let Some(path) = &cli.annotations {
        shared = shared.with_annotations(parse_annotations(&read_text(path)?));
    }

    let mode = if cli.mode == RunMode::Anonymize {
        Mode::Anonymize
    } else {
        Mode::Encode
    };
    let opts = StreamOptions {
        mode,
        lenient: cli.lenient,
        workers: cli.workers as usize,
        ..StreamOptions::default()
    };
    let emit_stream = cli.mode != RunMode::Stats;
    let mut out = BufWriter::new(open_output(&cli.output)?);
    let mut stats = CorpusStats::new();
    let mut errors = 0u64;
    anonymizer.process_parallel(input_lines(open_input(&cli.input)?), opts, &shared, |record| {
        let line = record.output_line();
        match &record.outcome {
            Ok(p) => stats.accumulate(p),
            Err(_) => {
                errors += 1;
                stats.accumulate_error(line.len());
            }
        }
        if emit_stream {
            writeln!(out, "{line}")?;
        }
        Ok(())
    })?;

    let mut table = shared.into_inner();
    if let Some(csv_path) = &cli.optimize_keys {
        let optimized = table.optimize_key_lengths();
        let mut csv = String::from("old,new\n");
        for (old, new) in &optimized.remap {
            csv.push_str(&format!("{old},{new}\n"));
        }
        write_file(csv_path, &csv)?;
        table = optimized.table;
    }
    if cli.mode == RunMode::Encode {
        if let Some(path) = &cli.table {
            table.save(path)?;
        }
    }

    let report = stats.report();
    if cli.mode == RunMode::Stats && report.total_entries + report.error_entries > 0 {
        writeln!(out, "{}", report.to_json())?;
    }
    out.flush()?;
    if let Some(path) = &cli.report {
        write_file(path, &report.to_json())?;
    }
    if cli.mode != RunMode::Anonymize {
        eprintln!("{report}");
    }
    if errors > 0 {
        eprintln!("logcleanse: {errors} line(s) rejected");
    }
    Ok(errors > 0)
}

fn run_completeness(cli: &Cli) -> Result<bool, Error> {
    let mut text = String::new();
    open_input(&cli.input)?.read_to_string(&mut text)?;
    if text.trim().is_empty() {
        return Ok(false);
    }
    let matrix = CompletenessMatrix::from_manifest(&text)?;
    let completeness = matrix.completeness()?;
    let mut out = BufWriter::new(open_output(&cli.output)?);
    out.write_all(matrix.gap_csv().as_bytes())?;
    out.flush()?;
    let summary = serde_json::json!({
        "nodes": matrix.nodes().len(),
        "days": matrix.days().len(),
        "cells": matrix.cells(),
        "missing": matrix.missing(),
        "completeness": completeness,
    });
    if let Some(path) = &cli.report {
        write_file(
            path,
            &serde_json::to_string_pretty(&summary).expect("summary serializes"),
        )?;
    }
    eprintln!(
        "completeness {:.4} ({} of {} cells missing, {} nodes x {} days)",
        completeness,
        matrix.missing(),
        matrix.cells(),
        matrix.nodes().len(),
        matrix.days().len()
    );
    Ok(false)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.mode {
        RunMode::Completeness => run_completeness(&cli),
        _ => run_stream(&cli),
    };
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            eprintln!("logcleanse: {e}");
            ExitCode::from(2)
        }
    }
}
