//! Entry quality: `Q = U * (n*N) * (s*S) * (r*R)`.

use serde::{Deserialize, Serialize};

use crate::entry::Term;
use crate::{Error, Result};

/// Reduction credited to any textual entry: general-purpose compression
/// reaches a quarter of the original size, so 0.75 is always achievable.
pub const TEXTUAL_REDUCTION: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryState {
    Raw,
    Anonymized,
    Encoded,
}

impl EntryState {
    pub fn as_str(self) -> &'static str {
        match self {
            EntryState::Raw => "raw",
            EntryState::Anonymized => "anonymized",
            EntryState::Encoded => "encoded",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "raw" => Some(EntryState::Raw),
            "anonymized" | "constantified" => Some(EntryState::Anonymized),
            "encoded" => Some(EntryState::Encoded),
            _ => None,
        }
    }
}

/// Importance weights of nonsensitivity, semantic and reduction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub n: f64,
    pub s: f64,
    pub r: f64,
}

impl Default for Coefficients {
    fn default() -> Self {
        Coefficients { n: 1.0, s: 1.0, r: 1.0 }
    }
}

impl Coefficients {
    pub fn new(n: f64, s: f64, r: f64) -> Option<Self> {
        let ok = |v: f64| v > 0.0 && v <= 1.0;
        (ok(n) && ok(s) && ok(r)).then_some(Coefficients { n, s, r })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityScore {
    pub usefulness: bool,
    pub nonsensitivity: f64,
    pub semantic: f64,
    pub reduction: f64,
    pub coefficients: Coefficients,
    pub q: f64,
}

pub fn nonsensitivity(terms: &[Term]) -> Result<f64> {
    if terms.is_empty() {
        return Err(Error::EmptyEntry);
    }
    let clean = terms.iter().filter(|t| !t.sensitive).count();
    Ok(clean as f64 / terms.len() as f64)
}

pub fn semantic(terms: &[Term]) -> Result<f64> {
    if terms.is_empty() {
        return Err(Error::EmptyEntry);
    }
    let meaningful = terms.iter().filter(|t| t.semantic).count();
    Ok(meaningful as f64 / terms.len() as f64)
}

/// Textual states get the fixed compression credit; encoded entries are
/// credited with their actual shrinkage.
pub fn reduction(state: EntryState, original_length: usize, current_length: usize) -> f64 {
    match state {
        EntryState::Raw | EntryState::Anonymized => TEXTUAL_REDUCTION,
        EntryState::Encoded => {
            let original = original_length.max(1) as f64;
            (1.0 - current_length as f64 / original).clamp(0.0, 1.0)
        }
    }
}

pub fn score(
    usefulness: bool,
    nonsensitivity: f64,
    semantic: f64,
    reduction: f64,
    coefficients: Coefficients,
) -> QualityScore {
    let u = if usefulness { 1.0 } else { 0.0 };
    let q = u * (coefficients.n * nonsensitivity) * (coefficients.s * semantic) * (coefficients.r * reduction);
    QualityScore {
        usefulness,
        nonsensitivity,
        semantic,
        reduction,
        coefficients,
        q,
    }
}
