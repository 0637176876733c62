//! Recall@k evaluation, collision analysis, and dimension sweeps.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use log::warn;

use crate::encoder::{encode, extract_ngrams, hash_ngram, normalize_and_tokenize, EncoderConfig};
use crate::error::{Error, Result};
use crate::index::VectorIndex;

/// Relevance judgments: query id -> doc id -> grade. A grade of 1 or more
/// counts as relevant.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Qrels::default()
    }

    /// Records a judgment, returning the previous grade for this
    /// (query, doc) pair if one existed.
    pub fn insert(&mut self, query_id: impl Into<String>, doc_id: impl Into<String>, grade: u32) -> Option<u32> {
        self.judgments
            .entry(query_id.into())
            .or_default()
            .insert(doc_id.into(), grade)
    }

    pub fn contains_query(&self, query_id: &str) -> bool {
        self.judgments.contains_key(query_id)
    }

    pub fn grade(&self, query_id: &str, doc_id: &str) -> Option<u32> {
        self.judgments.get(query_id)?.get(doc_id).copied()
    }

    /// Docs judged relevant (grade >= 1) for a query.
    pub fn relevant_docs(&self, query_id: &str) -> Option<BTreeSet<&str>> {
        let docs = self.judgments.get(query_id)?;
        Some(
            docs.iter()
                .filter(|&(_, &grade)| grade >= 1)
                .map(|(doc_id, _)| doc_id.as_str())
                .collect(),
        )
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeMap<String, u32>)> {
        self.judgments.iter().map(|(q, docs)| (q.as_str(), docs))
    }

    pub fn remove_query(&mut self, query_id: &str) -> Option<BTreeMap<String, u32>> {
        self.judgments.remove(query_id)
    }

    pub fn num_queries(&self) -> usize {
        self.judgments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.judgments.is_empty()
    }
}

/// Per-query and aggregate Recall@k for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RecallReport {
    /// query id -> k -> recall
    pub per_query: BTreeMap<String, BTreeMap<usize, f64>>,
    /// k -> unweighted mean over evaluated queries
    pub aggregate: BTreeMap<usize, f64>,
    /// The cutoffs evaluated, ascending.
    pub k_values: Vec<usize>,
    /// Fingerprint of the encoder config behind the run, when there is one.
    pub config_fingerprint: Option<String>,
}

/// Recall@k: per query, the fraction of its relevant docs appearing in the
/// top k of its ranked list; aggregated as the unweighted mean over queries.
///
/// Every query in `results` must be judged in `qrels`; unknown queries are
/// an error. Queries judged but with no relevant doc are skipped with a
/// warning — recall is undefined for them.
pub fn recall_at_k(
    results: &BTreeMap<String, Vec<String>>,
    qrels: &Qrels,
    k_values: &[usize],
) -> Result<RecallReport> {
    if k_values.is_empty() {
        return Err(Error::InvalidArgument("no k values given".into()));
    }
    if k_values.contains(&0) {
        return Err(Error::InvalidArgument("k values must be >= 1".into()));
    }
    let mut k_values: Vec<usize> = k_values.to_vec();
    k_values.sort_unstable();
    k_values.dedup();

    let missing: Vec<String> = results
        .keys()
        .filter(|q| !qrels.contains_query(q))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(Error::QueriesMissingFromQrels { ids: missing });
    }

    let mut per_query: BTreeMap<String, BTreeMap<usize, f64>> = BTreeMap::new();
    for (query_id, ranked) in results {
        let relevant = qrels
            .relevant_docs(query_id)
            .expect("query presence checked above");
        if relevant.is_empty() {
            warn!("query {query_id} has no relevant documents; skipping");
            continue;
        }
        let mut by_k = BTreeMap::new();
        for &k in &k_values {
            let hits = ranked
                .iter()
                .take(k)
                .filter(|doc_id| relevant.contains(doc_id.as_str()))
                .count();
            by_k.insert(k, hits as f64 / relevant.len() as f64);
        }
        per_query.insert(query_id.clone(), by_k);
    }
    if per_query.is_empty() {
        return Err(Error::InvalidArgument(
            "no queries with relevant documents to evaluate".into(),
        ));
    }

    let mut aggregate = BTreeMap::new();
    for &k in &k_values {
        let sum: f64 = per_query.values().map(|by_k| by_k[&k]).sum();
        aggregate.insert(k, sum / per_query.len() as f64);
    }
    Ok(RecallReport {
        per_query,
        aggregate,
        k_values,
        config_fingerprint: None,
    })
}

/// Birthday-paradox approximation for the probability that hashing `n_grams`
/// distinct items into `dimension` buckets produces at least one collision:
/// `1 - exp(-n^2 / 2d)`.
pub fn collision_probability(n_grams: u64, dimension: u64) -> f64 {
    let n = n_grams as f64;
    let d = dimension as f64;
    1.0 - (-(n * n) / (2.0 * d)).exp()
}

/// Observed collision rate over `texts`: the fraction of texts in which at
/// least two distinct n-grams hash to the same index. Distinctness is by
/// n-gram string (set semantics), matching what the birthday approximation
/// models. Returns 0 for an empty slice.
pub fn measure_empirical_collisions<T: AsRef<str>>(texts: &[T], config: &EncoderConfig) -> f64 {
    if texts.is_empty() {
        return 0.0;
    }
    let mut collided_texts = 0usize;
    for text in texts {
        let mut seen_ngrams: HashSet<String> = HashSet::new();
        let mut seen_indices: HashSet<usize> = HashSet::new();
        let mut collided = false;
        for word in normalize_and_tokenize(text.as_ref()) {
            let ngrams = extract_ngrams(&word, config).expect("tokenizer yields non-empty words");
            for ngram in ngrams {
                if !seen_ngrams.insert(ngram.text.clone()) {
                    continue;
                }
                if !seen_indices.insert(hash_ngram(&ngram, config)) {
                    collided = true;
                }
            }
        }
        if collided {
            collided_texts += 1;
        }
    }
    collided_texts as f64 / texts.len() as f64
}

/// Mean number of distinct n-grams per text; the `n` to plug into
/// [`collision_probability`] when comparing against an observed rate.
pub fn mean_distinct_ngrams<T: AsRef<str>>(texts: &[T], config: &EncoderConfig) -> f64 {
    if texts.is_empty() {
        return 0.0;
    }
    let mut total = 0usize;
    for text in texts {
        let mut seen: HashSet<String> = HashSet::new();
        for word in normalize_and_tokenize(text.as_ref()) {
            let ngrams = extract_ngrams(&word, config).expect("tokenizer yields non-empty words");
            for ngram in ngrams {
                seen.insert(ngram.text);
            }
        }
        total += seen.len();
    }
    total as f64 / texts.len() as f64
}

/// One row of a dimension sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub dimension: usize,
    pub k: usize,
    pub recall: f64,
}

/// Builds an index per dimension (all other config fields fixed), evaluates
/// Recall@k for each cutoff, and returns one row per (dimension, k), ordered
/// by dimension then k ascending.
///
/// Queries without judgments in `qrels` are dropped with a warning before
/// the sweep starts.
pub fn dimension_sweep(
    corpus: &[(String, String)],
    queries: &[(String, String)],
    qrels: &Qrels,
    dims: &[usize],
    k_values: &[usize],
    base: &EncoderConfig,
) -> Result<Vec<SweepRow>> {
    if dims.is_empty() {
        return Err(Error::InvalidArgument("no dimensions given".into()));
    }
    let mut dims: Vec<usize> = dims.to_vec();
    dims.sort_unstable();
    dims.dedup();

    let usable: Vec<&(String, String)> = queries
        .iter()
        .filter(|(query_id, _)| {
            let keep = qrels.contains_query(query_id);
            if !keep {
                warn!("query {query_id} has no judgments; dropping from sweep");
            }
            keep
        })
        .collect();
    if usable.is_empty() {
        return Err(Error::InvalidArgument(
            "no queries with relevance judgments".into(),
        ));
    }
    let max_k = *k_values.iter().max().ok_or_else(|| {
        Error::InvalidArgument("no k values given".into())
    })?;

    let mut rows = Vec::with_capacity(dims.len() * k_values.len());
    for &dimension in &dims {
        let tag = |source: Error| Error::Sweep {
            dimension,
            source: Box::new(source),
        };
        let config = base.with_dimension(dimension).map_err(tag)?;
        let index = VectorIndex::build(corpus.iter().cloned(), &config).map_err(tag)?;
        let query_vectors: Vec<_> = usable
            .iter()
            .map(|(_, text)| encode(text, &config))
            .collect();
        let ranked = index.top_k_batch(&query_vectors, max_k).map_err(tag)?;
        let results: BTreeMap<String, Vec<String>> = usable
            .iter()
            .zip(ranked)
            .map(|((query_id, _), hits)| {
                (
                    query_id.clone(),
                    hits.into_iter().map(|hit| hit.doc_id).collect(),
                )
            })
            .collect();
        let report = recall_at_k(&results, qrels, k_values).map_err(tag)?;
        for &k in &report.k_values {
            rows.push(SweepRow {
                dimension,
                k,
                recall: report.aggregate[&k],
            });
        }
    }
    Ok(rows)
}
