//! Event patterns, SHAKE-128 hash-keys and the published reference table.
//!
//! A key is the lowercase hex of the first `bits / 8` bytes of the SHAKE-128
//! output over the pattern's UTF-8 bytes. Because the hash has extendable
//! output, a shorter key is always a prefix of a longer one; collisions are
//! resolved by growing only the newcomer's key by 8 bits at a time.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;
use std::sync::{Mutex, MutexGuard};

use serde::{Deserialize, Serialize};
use sha3::digest::{ExtendableOutput, Update, XofReader};
use sha3::Shake128;

use crate::entry::tokenize;
use crate::{Error, Result};

pub const DEFAULT_BITS: u32 = 32;
pub const MIN_BITS: u32 = 16;
pub const MAX_BITS: u32 = 256;

/// A fully constantified message, single-space joined.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EventPattern {
    pub text: String,
    pub term_count: usize,
}

impl EventPattern {
    pub fn new(text: &str) -> Self {
        let terms: Vec<String> = tokenize(text).into_iter().map(|t| t.text).collect();
        EventPattern {
            text: terms.join(" "),
            term_count: terms.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HashKey {
    pub hex: String,
    pub bits: u32,
}

fn check_bits(bits: u32) -> Result<()> {
    if !bits.is_multiple_of(8) || !(MIN_BITS..=MAX_BITS).contains(&bits) {
        return Err(Error::UnsupportedLength(bits));
    }
    Ok(())
}

fn shake_hex(text: &str, bits: u32) -> String {
    let mut hasher = Shake128::default();
    hasher.update(text.as_bytes());
    let mut out = vec![0u8; (bits / 8) as usize];
    hasher.finalize_xof().read(&mut out);
    hex::encode(out)
}

pub fn hash_pattern(pattern: &EventPattern, bits: u32) -> Result<HashKey> {
    check_bits(bits)?;
    Ok(HashKey {
        hex: shake_hex(&pattern.text, bits),
        bits,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRow {
    pub key: String,
    pub bits: u32,
    pub pattern: String,
    pub meaning: String,
    pub count: u64,
}

/// Key to pattern mapping with meanings and frequencies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceTable {
    rows: BTreeMap<String, TableRow>,
    by_pattern: HashMap<String, String>,
    default_bits: u32,
}

/// Result of [`ReferenceTable::optimize_key_lengths`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Optimized {
    pub table: ReferenceTable,
    /// Old key to new key, for every row.
    pub remap: BTreeMap<String, String>,
}

impl ReferenceTable {
    pub fn new(default_bits: u32) -> Result<Self> {
        check_bits(default_bits)?;
        Ok(ReferenceTable {
            rows: BTreeMap::new(),
            by_pattern: HashMap::new(),
            default_bits,
        })
    }

    pub fn default_bits(&self) -> u32 {
        self.default_bits
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn total_count(&self) -> u64 {
        self.rows.values().map(|r| r.count).sum()
    }

    /// Bytes taken by all emitted keys: `sum(count * key length)`.
    pub fn encoded_bytes(&self) -> u64 {
        self.rows.values().map(|r| r.count * r.key.len() as u64).sum()
    }

    pub fn rows(&self) -> impl Iterator<Item = &TableRow> {
        self.rows.values()
    }

    /// Rows by descending count, then key.
    pub fn rows_by_frequency(&self) -> Vec<&TableRow> {
        let mut rows: Vec<&TableRow> = self.rows.values().collect();
        rows.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.key.cmp(&b.key)));
        rows
    }

    pub fn key_of(&self, pattern: &str) -> Option<&str> {
        self.by_pattern.get(pattern).map(String::as_str)
    }

    /// The key `pattern` has or would receive if inserted now.
    pub fn prospective_key(&self, pattern: &EventPattern) -> Result<HashKey> {
        if let Some(key) = self.by_pattern.get(&pattern.text) {
            let row = &self.rows[key];
            return Ok(HashKey {
                hex: row.key.clone(),
                bits: row.bits,
            });
        }
        let mut bits = self.default_bits;
        loop {
            let key = hash_pattern(pattern, bits)?;
            if !self.rows.contains_key(&key.hex) {
                return Ok(key);
            }
            bits += 8;
            if bits > MAX_BITS {
                return Err(Error::KeySpaceExhausted(pattern.text.clone()));
            }
        }
    }

    /// Counts one more occurrence of `pattern`, inserting it on first sight.
    /// `meaning` defaults to the pattern text.
    pub fn get_or_insert(&mut self, pattern: &EventPattern, meaning: Option<&str>) -> Result<HashKey> {
        if let Some(key) = self.by_pattern.get(&pattern.text) {
            let row = self.rows.get_mut(key).expect("indexes agree");
            row.count += 1;
            return Ok(HashKey {
                hex: row.key.clone(),
                bits: row.bits,
            });
        }
        let key = self.prospective_key(pattern)?;
        self.by_pattern.insert(pattern.text.clone(), key.hex.clone());
        self.rows.insert(
            key.hex.clone(),
            TableRow {
                key: key.hex.clone(),
                bits: key.bits,
                pattern: pattern.text.clone(),
                meaning: meaning.unwrap_or(&pattern.text).to_string(),
                count: 1,
            },
        );
        Ok(key)
    }

    pub fn lookup(&self, hex: &str) -> Result<&TableRow> {
        self.rows.get(hex).ok_or_else(|| Error::UnknownKey(hex.to_string()))
    }

    /// Reassigns keys so frequent patterns get the shortest free prefix
    /// (at least 16 bits). If the greedy assignment would not shrink the
    /// total emitted bytes, the table is returned unchanged.
    pub fn optimize_key_lengths(&self) -> Optimized {
        let mut order: Vec<&TableRow> = self.rows.values().collect();
        order.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.pattern.cmp(&b.pattern)));

        let mut table = ReferenceTable {
            rows: BTreeMap::new(),
            by_pattern: HashMap::new(),
            default_bits: self.default_bits,
        };
        let mut remap = BTreeMap::new();
        for row in order {
            let mut bits = MIN_BITS;
            let mut hex = shake_hex(&row.pattern, bits);
            while table.rows.contains_key(&hex) {
                bits += 8;
                // two distinct patterns cannot agree on 256 bits
                hex = shake_hex(&row.pattern, bits);
            }
            remap.insert(row.key.clone(), hex.clone());
            table.by_pattern.insert(row.pattern.clone(), hex.clone());
            table.rows.insert(
                hex.clone(),
                TableRow {
                    key: hex,
                    bits,
                    ..row.clone()
                },
            );
        }
        if table.encoded_bytes() > self.encoded_bytes() {
            let remap = self.rows.keys().map(|k| (k.clone(), k.clone())).collect();
            return Optimized {
                table: self.clone(),
                remap,
            };
        }
        Optimized { table, remap }
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<&TableRow> = self.rows_by_frequency();
        serde_json::to_string_pretty(&rows).expect("rows serialize")
    }

    /// Parses the JSON array form, checking that every key is the digest
    /// prefix of its pattern and that the mapping is injective.
    pub fn from_json(text: &str, default_bits: u32) -> Result<Self> {
        let rows: Vec<TableRow> = serde_json::from_str(text).map_err(|e| Error::TableCorrupt(e.to_string()))?;
        let mut table = ReferenceTable::new(default_bits)?;
        for row in rows {
            if check_bits(row.bits).is_err() || shake_hex(&row.pattern, row.bits) != row.key {
                return Err(Error::TableCorrupt(format!(
                    "key `{}` is not the {}-bit digest of its pattern",
                    row.key, row.bits
                )));
            }
            if row.count == 0 {
                return Err(Error::TableCorrupt(format!("key `{}` has count 0", row.key)));
            }
            if table.rows.contains_key(&row.key) || table.by_pattern.contains_key(&row.pattern) {
                return Err(Error::TableCorrupt(format!("key `{}` or its pattern repeats", row.key)));
            }
            table.by_pattern.insert(row.pattern.clone(), row.key.clone());
            table.rows.insert(row.key.clone(), row);
        }
        Ok(table)
    }

    pub fn load(path: &Path, default_bits: u32) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?, default_bits)
    }

    /// Writes to a temporary file next to `path` and renames it into place.
    pub fn save(&self, path: &Path) -> Result<()> {
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(self.to_json().as_bytes())?;
        tmp.write_all(b"\n")?;
        tmp.persist(path).map_err(|e| Error::Io(e.to_string()))?;
        Ok(())
    }
}

/// Parses `pattern<TAB>meaning` lines; patterns are canonicalized.
pub fn parse_annotations(text: &str) -> HashMap<String, String> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with("//"))
        .filter_map(|l| l.split_once('\t'))
        .map(|(p, m)| (EventPattern::new(p).text, m.trim().to_string()))
        .collect()
}

/// A reference table shared between encoders.
#[derive(Debug)]
pub struct SharedTable {
    table: Mutex<ReferenceTable>,
    annotations: HashMap<String, String>,
}

impl SharedTable {
    pub fn new(table: ReferenceTable) -> Self {
        SharedTable {
            table: Mutex::new(table),
            annotations: HashMap::new(),
        }
    }

    pub fn with_annotations(mut self, annotations: HashMap<String, String>) -> Self {
        self.annotations = annotations;
        self
    }

    pub fn default_bits(&self) -> u32 {
        self.lock().default_bits()
    }

    pub fn get_or_insert(&self, pattern: &EventPattern) -> Result<HashKey> {
        let meaning = self.annotations.get(&pattern.text).map(String::as_str);
        self.lock().get_or_insert(pattern, meaning)
    }

    pub fn lock(&self) -> MutexGuard<'_, ReferenceTable> {
        self.table.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn snapshot(&self) -> ReferenceTable {
        self.lock().clone()
    }

    pub fn into_inner(self) -> ReferenceTable {
        self.table.into_inner().unwrap_or_else(|e| e.into_inner())
    }
}
