//! Okapi BM25 reference baseline.
//!
//! Scores with the Robertson IDF, `ln((N - df + 0.5) / (df + 0.5))` floored
//! at zero, and the usual `k1`/`b` saturation and length normalization.
//! Tokenization is the caller's job and must match the encoder's
//! `normalize_and_tokenize` for comparable runs.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 0.9, b: 0.75 }
    }
}

/// Inverted index over tokenized documents.
#[derive(Debug)]
pub struct Bm25Index {
    doc_ids: Vec<String>,
    doc_lengths: Vec<usize>,
    average_doc_length: f64,
    // term -> (doc position, term frequency), doc positions ascending
    postings: HashMap<String, Vec<(u32, u32)>>,
    params: Bm25Params,
}

impl Bm25Index {
    pub fn build<I>(documents: I, params: Bm25Params) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Vec<String>)>,
    {
        let mut doc_ids = Vec::new();
        let mut doc_lengths = Vec::new();
        let mut postings: HashMap<String, Vec<(u32, u32)>> = HashMap::new();
        let mut seen: HashSet<String> = HashSet::new();

        for (doc_id, tokens) in documents {
            if !seen.insert(doc_id.clone()) {
                return Err(Error::DuplicateDocId(doc_id));
            }
            let position = doc_ids.len() as u32;
            doc_lengths.push(tokens.len());
            let mut frequencies: HashMap<&str, u32> = HashMap::new();
            for token in &tokens {
                *frequencies.entry(token.as_str()).or_insert(0) += 1;
            }
            for (term, tf) in frequencies {
                postings.entry(term.to_owned()).or_default().push((position, tf));
            }
            doc_ids.push(doc_id);
        }
        if doc_ids.is_empty() {
            return Err(Error::InvalidArgument("BM25 corpus is empty".into()));
        }
        for list in postings.values_mut() {
            list.sort_unstable_by_key(|&(position, _)| position);
        }
        let average_doc_length =
            doc_lengths.iter().sum::<usize>() as f64 / doc_ids.len() as f64;
        Ok(Bm25Index {
            doc_ids,
            doc_lengths,
            average_doc_length,
            postings,
            params,
        })
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    /// Number of distinct terms — the "effective dimensionality" of the
    /// sparse representation.
    pub fn vocabulary_size(&self) -> usize {
        self.postings.len()
    }

    fn idf(&self, document_frequency: usize) -> f64 {
        let n = self.doc_ids.len() as f64;
        let df = document_frequency as f64;
        ((n - df + 0.5) / (df + 0.5)).ln().max(0.0)
    }

    /// Ranks candidate documents (those containing at least one query term)
    /// by BM25 score, descending, ties broken by doc id ascending; at most
    /// `k` results. An empty query yields an empty list. Query term order
    /// never matters; repeated query terms contribute once per occurrence.
    pub fn rank(&self, query_tokens: &[String], k: usize) -> Vec<(String, f64)> {
        if query_tokens.is_empty() {
            return Vec::new();
        }
        let Bm25Params { k1, b } = self.params;
        let mut scores: HashMap<u32, f64> = HashMap::new();
        for term in query_tokens {
            let Some(postings) = self.postings.get(term.as_str()) else {
                continue;
            };
            let idf = self.idf(postings.len());
            for &(position, tf) in postings {
                let doc_length = self.doc_lengths[position as usize] as f64;
                let tf = tf as f64;
                let saturation =
                    tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * doc_length / self.average_doc_length));
                *scores.entry(position).or_insert(0.0) += idf * saturation;
            }
        }
        let mut ranked: Vec<(u32, f64)> = scores.into_iter().collect();
        ranked.sort_unstable_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| self.doc_ids[a.0 as usize].cmp(&self.doc_ids[b.0 as usize]))
        });
        ranked.truncate(k);
        ranked
            .into_iter()
            .map(|(position, score)| (self.doc_ids[position as usize].clone(), score))
            .collect()
    }
}
