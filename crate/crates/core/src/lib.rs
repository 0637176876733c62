//! NUMEN: training-free dense retrieval.
//!
//! Text is encoded into arbitrarily high-dimensional unit vectors by hashing
//! weighted character n-grams — no vocabulary, no training. The crate
//! provides the encoder, an exact brute-force vector index with binary
//! persistence, a Recall@k evaluation harness with a BM25 baseline, corpus
//! loaders for BEIR-style datasets, and a deterministic synthetic dataset
//! generator.
//!
//! ```
//! use numen_core::{encode, cosine_score, EncoderConfig};
//!
//! let config = EncoderConfig::default(); // 32768 dims, n in {3,4,5}, CRC32
//! let a = encode("jon likes apples", &config);
//! let b = encode("who likes apples", &config);
//! let score = cosine_score(&a, &b).unwrap();
//! assert!(score > 0.0 && score <= 1.0);
//! ```

pub mod bm25;
pub mod crc32;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod index;
pub mod ingest;
pub mod vector;

pub use crc32::HashVariant;
pub use encoder::{
    accumulate, encode, extract_ngrams, hash_ngram, ngram_weight, normalize_and_tokenize,
    EncoderConfig, Ngram, DEFAULT_DIMENSION,
};
pub use error::{Error, Result};
pub use eval::{
    collision_probability, dimension_sweep, measure_empirical_collisions, recall_at_k, Qrels,
    RecallReport, SweepRow,
};
pub use index::{SearchResult, VectorIndex};
pub use vector::{cosine_score, DenseVector};
