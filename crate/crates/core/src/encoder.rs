//! Text-to-vector encoding: character n-gram extraction, CRC32 feature
//! hashing, weighted accumulation, log-saturation and L2 normalization.
//!
//! Encoding is a pure function of `(text, config)`. Identical inputs produce
//! bit-identical vectors across calls and processes, and the result does not
//! depend on word order (per-bucket contributions are counted as integers
//! before any floating-point arithmetic happens).

use std::collections::BTreeMap;

use serde::Serialize;

use crate::crc32::HashVariant;
use crate::error::{Error, Result};
use crate::vector::DenseVector;

pub const DEFAULT_DIMENSION: usize = 32_768;

/// Everything that determines the encoding function: target dimension,
/// which n-gram lengths are extracted, their weights, and the hash variant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EncoderConfig {
    dimension: usize,
    ngram_sizes: Vec<usize>,
    weight_table: BTreeMap<usize, f64>,
    hash_variant: HashVariant,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig::new(
            DEFAULT_DIMENSION,
            &[3, 4, 5],
            &[(3, 1.0), (4, 5.0), (5, 10.0)],
            HashVariant::default(),
        )
        .expect("default config is valid")
    }
}

impl EncoderConfig {
    pub fn new(
        dimension: usize,
        ngram_sizes: &[usize],
        weights: &[(usize, f64)],
        hash_variant: HashVariant,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidConfig("dimension must be >= 1".into()));
        }
        if ngram_sizes.is_empty() {
            return Err(Error::InvalidConfig("at least one n-gram size required".into()));
        }
        if ngram_sizes.contains(&0) {
            return Err(Error::InvalidConfig("n-gram sizes must be >= 1".into()));
        }
        if weights.is_empty() {
            return Err(Error::InvalidConfig("weight table must not be empty".into()));
        }
        let mut weight_table = BTreeMap::new();
        for &(length, weight) in weights {
            if length == 0 {
                return Err(Error::InvalidConfig("weight keys must be >= 1".into()));
            }
            if !weight.is_finite() || weight < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "weight for length {length} must be a finite nonnegative number, got {weight}"
                )));
            }
            if weight_table.insert(length, weight).is_some() {
                return Err(Error::InvalidConfig(format!(
                    "duplicate weight for length {length}"
                )));
            }
        }
        if !weight_table.values().any(|&w| w > 0.0) {
            return Err(Error::InvalidConfig("at least one weight must be > 0".into()));
        }

        let mut ngram_sizes = ngram_sizes.to_vec();
        ngram_sizes.sort_unstable();
        ngram_sizes.dedup();

        let config = EncoderConfig {
            dimension,
            ngram_sizes,
            weight_table,
            hash_variant,
        };
        // Every extractable length must resolve to a weight.
        for &n in &config.ngram_sizes {
            config.weight_for_length(n)?;
        }
        Ok(config)
    }

    /// Same config at a different dimension; used by dimension sweeps.
    pub fn with_dimension(&self, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidConfig("dimension must be >= 1".into()));
        }
        let mut config = self.clone();
        config.dimension = dimension;
        Ok(config)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Extracted n-gram lengths, ascending and deduplicated.
    pub fn ngram_sizes(&self) -> &[usize] {
        &self.ngram_sizes
    }

    pub fn weight_table(&self) -> &BTreeMap<usize, f64> {
        &self.weight_table
    }

    pub fn hash_variant(&self) -> HashVariant {
        self.hash_variant
    }

    /// Weight for an n-gram of `length` characters (boundary markers
    /// included). Lengths above the largest configured key reuse the largest
    /// key's weight; lengths below the smallest are an error, since no
    /// extraction under this config can produce them.
    pub fn weight_for_length(&self, length: usize) -> Result<f64> {
        if let Some(&w) = self.weight_table.get(&length) {
            return Ok(w);
        }
        let (&smallest, _) = self.weight_table.first_key_value().expect("non-empty table");
        let (&largest, &top_weight) = self.weight_table.last_key_value().expect("non-empty table");
        if length > largest {
            Ok(top_weight)
        } else if length < smallest {
            Err(Error::WeightUndefined { length, smallest })
        } else {
            // Between configured keys. Treat like the over-the-top case and
            // fall back to the nearest smaller key.
            let (_, &w) = self
                .weight_table
                .range(..=length)
                .next_back()
                .expect("length >= smallest");
            Ok(w)
        }
    }

    /// Canonical one-line description; stable across runs and suitable for
    /// embedding in reports and run manifests.
    pub fn fingerprint(&self) -> String {
        let sizes = self
            .ngram_sizes
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let weights = self
            .weight_table
            .iter()
            .map(|(n, w)| format!("{n}:{w}"))
            .collect::<Vec<_>>()
            .join(",");
        format!(
            "d={};n={};w={};h={}",
            self.dimension, sizes, weights, self.hash_variant
        )
    }
}

/// One extracted character n-gram: its text (boundary markers included) and
/// the length class it was extracted as.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ngram {
    pub text: String,
    pub length_class: usize,
}

impl Ngram {
    pub fn as_bytes(&self) -> &[u8] {
        self.text.as_bytes()
    }
}

/// Lowercases the text and splits it into maximal runs of Unicode letters
/// and digits. Everything else separates words. Total: any input, including
/// empty, yields a (possibly empty) word list.
pub fn normalize_and_tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Extracts every n-gram of the configured lengths from `word`, after
/// padding it to `^word$`. Windows slide over Unicode scalar values, so
/// multi-byte characters count as one position. Output is grouped by
/// ascending length, left to right within each group; duplicates are kept.
pub fn extract_ngrams(word: &str, config: &EncoderConfig) -> Result<Vec<Ngram>> {
    if word.is_empty() {
        return Err(Error::EmptyWord);
    }
    let padded: Vec<char> = std::iter::once('^')
        .chain(word.chars())
        .chain(std::iter::once('$'))
        .collect();
    let mut ngrams = Vec::new();
    for &n in config.ngram_sizes() {
        if padded.len() < n {
            continue;
        }
        for window in padded.windows(n) {
            ngrams.push(Ngram {
                text: window.iter().collect(),
                length_class: n,
            });
        }
    }
    Ok(ngrams)
}

/// Hashes an n-gram's UTF-8 bytes to a component index in `[0, dimension)`.
/// Depends only on the bytes and the config, never on position.
pub fn hash_ngram(ngram: &Ngram, config: &EncoderConfig) -> usize {
    let crc = config.hash_variant().checksum(ngram.as_bytes());
    (crc as u64 % config.dimension() as u64) as usize
}

/// Weight of an n-gram under the config's length-keyed table.
pub fn ngram_weight(ngram: &Ngram, config: &EncoderConfig) -> Result<f64> {
    config.weight_for_length(ngram.length_class)
}

/// Pre-saturation mass per component index: each n-gram occurrence adds its
/// weight at its hashed index.
///
/// Occurrences are counted as integers per (index, length) pair first and
/// multiplied by the weight afterwards, in fixed key order. This keeps the
/// result independent of word order and makes repeated-call results
/// bit-identical, whatever the weights are.
pub fn accumulate(text: &str, config: &EncoderConfig) -> BTreeMap<usize, f64> {
    let mut counts: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for word in normalize_and_tokenize(text) {
        let ngrams = extract_ngrams(&word, config).expect("tokenizer yields non-empty words");
        for ngram in ngrams {
            let index = hash_ngram(&ngram, config);
            *counts.entry((index, ngram.length_class)).or_insert(0) += 1;
        }
    }
    let mut masses: BTreeMap<usize, f64> = BTreeMap::new();
    for ((index, length), count) in counts {
        let weight = config
            .weight_for_length(length)
            .expect("config validated at construction");
        *masses.entry(index).or_insert(0.0) += count as f64 * weight;
    }
    masses
}

/// Encodes text into a dense vector: accumulate weighted n-gram masses,
/// apply `ln(1 + x)` per component, then L2-normalize.
///
/// Arithmetic runs in f64 and is downcast to f32 at the end. Text that
/// produces no n-grams (or only zero-weight ones) encodes to the all-zero
/// vector, which scores 0 against everything.
pub fn encode(text: &str, config: &EncoderConfig) -> DenseVector {
    let masses = accumulate(text, config);
    if masses.is_empty() {
        return DenseVector::zeros(config.dimension());
    }
    let saturated: Vec<(usize, f64)> = masses
        .into_iter()
        .map(|(index, mass)| (index, mass.ln_1p()))
        .collect();
    let norm = saturated
        .iter()
        .map(|&(_, value)| value * value)
        .sum::<f64>()
        .sqrt();
    if norm <= 0.0 {
        return DenseVector::zeros(config.dimension());
    }
    let mut components = vec![0.0f32; config.dimension()];
    for (index, value) in saturated {
        components[index] = (value / norm) as f32;
    }
    DenseVector::new(components)
}
