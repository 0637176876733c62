//! `numen` — encode, index, search, evaluate, sweep, and analyze collisions
//! with the n-gram hashing retriever.
//!
//! Diagnostics go to stderr; data goes to stdout or the requested output
//! files. Exit code is zero exactly when the run completed without error.

mod manifest;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand};
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use numen_core::bm25::{Bm25Index, Bm25Params};
use numen_core::ingest::{self, QueryRecord, SynthSpec};
use numen_core::{
    collision_probability, dimension_sweep, encode, extract_ngrams, measure_empirical_collisions,
    normalize_and_tokenize, recall_at_k, DenseVector, EncoderConfig, HashVariant, VectorIndex,
};

use manifest::{RunManifest, Timings};

#[derive(Parser)]
#[command(
    name = "numen",
    version,
    about = "Training-free dense retrieval via weighted character n-gram hashing",
    propagate_version = true
)]
struct Cli {
    /// Worker threads for encoding and scoring (defaults to all cores)
    #[arg(long, global = true, env = "NUMEN_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode one text into a vector (JSON on stdout, or raw f32 LE with --out)
    Encode(EncodeArgs),
    /// Encode a corpus and write a binary index file
    Index(IndexArgs),
    /// Query an index; prints TSV rows: query_id, doc_id, rank, score
    ///
    /// This is the TREC run format minus the literal "Q0" column.
    Search(SearchArgs),
    /// Compute Recall@k against qrels, for an index or the BM25 baseline
    Eval(EvalArgs),
    /// Recall across a list of dimensions; CSV rows: dimension,k,recall
    Sweep(SweepArgs),
    /// Hash-collision analysis: closed-form estimate and/or measured rate
    Collisions(CollisionsArgs),
    /// Generate a synthetic corpus/queries/qrels triple
    Gensynth(GensynthArgs),
}

/// Encoding options shared by every command that encodes text.
#[derive(Args, Serialize)]
struct EncodingArgs {
    /// N-gram sizes, comma-separated
    #[arg(long, value_delimiter = ',', default_value = "3,4,5")]
    ngrams: Vec<usize>,

    /// Weights aligned with --ngrams, comma-separated
    #[arg(long, value_delimiter = ',', default_value = "1,5,10")]
    weights: Vec<f64>,

    /// Hash function: crc32 (IEEE) or crc32c (Castagnoli)
    #[arg(long, default_value = "crc32")]
    hash: String,
}

impl EncodingArgs {
    fn build(&self, dimension: usize) -> Result<EncoderConfig> {
        if self.ngrams.len() != self.weights.len() {
            bail!(
                "--ngrams lists {} sizes but --weights lists {} values; they must align",
                self.ngrams.len(),
                self.weights.len()
            );
        }
        let variant: HashVariant = self.hash.parse()?;
        let weights: Vec<(usize, f64)> = self
            .ngrams
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
            .collect();
        Ok(EncoderConfig::new(dimension, &self.ngrams, &weights, variant)?)
    }
}

#[derive(Args, Serialize)]
struct ConfigArgs {
    /// Vector dimension
    #[arg(long, default_value_t = numen_core::DEFAULT_DIMENSION)]
    dim: usize,

    #[command(flatten)]
    #[serde(flatten)]
    encoding: EncodingArgs,
}

impl ConfigArgs {
    fn build(&self) -> Result<EncoderConfig> {
        self.encoding.build(self.dim)
    }
}

#[derive(Args, Serialize)]
#[command(group(ArgGroup::new("input").required(true).args(["text", "file"])))]
struct EncodeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    config: ConfigArgs,

    /// Text to encode
    #[arg(long)]
    text: Option<String>,

    /// Read the text to encode from this file
    #[arg(long)]
    file: Option<PathBuf>,

    /// Print n-gram count and nonzero-component count to stderr
    #[arg(long)]
    stats: bool,

    /// Write raw little-endian f32 components here instead of JSON to stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct IndexArgs {
    #[command(flatten)]
    #[serde(flatten)]
    config: ConfigArgs,

    /// Corpus JSONL: one {"_id", "text", optional "title"} object per line
    #[arg(long)]
    corpus: PathBuf,

    /// Output index file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
#[command(group(ArgGroup::new("queryinput").required(true).args(["query", "queries"])))]
struct SearchArgs {
    /// Index file produced by `numen index`
    #[arg(long)]
    index: PathBuf,

    /// A single query text (reported under query id "q0")
    #[arg(long)]
    query: Option<String>,

    /// Queries JSONL: one {"_id", "text"} object per line
    #[arg(long)]
    queries: Option<PathBuf>,

    /// Results per query
    #[arg(long, default_value_t = 10)]
    k: usize,

    /// Write TSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
#[command(group(ArgGroup::new("system").required(true).args(["index", "bm25_corpus"])))]
struct EvalArgs {
    /// Index file produced by `numen index`
    #[arg(long)]
    index: Option<PathBuf>,

    /// Evaluate the BM25 baseline over this corpus JSONL instead of an index
    #[arg(long)]
    bm25_corpus: Option<PathBuf>,

    /// BM25 term-frequency saturation (baseline mode only)
    #[arg(long, default_value_t = 0.9)]
    k1: f64,

    /// BM25 length normalization (baseline mode only)
    #[arg(long, default_value_t = 0.75)]
    b: f64,

    /// Queries JSONL
    #[arg(long)]
    queries: PathBuf,

    /// Qrels TSV: query_id, doc_id, grade
    #[arg(long)]
    qrels: PathBuf,

    /// Recall cutoffs, comma-separated
    #[arg(long, value_delimiter = ',', default_value = "2,10,100")]
    k: Vec<usize>,

    /// Also write "dimension,k,recall" rows to this CSV
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    encoding: EncodingArgs,

    /// Corpus JSONL
    #[arg(long)]
    corpus: PathBuf,

    /// Queries JSONL
    #[arg(long)]
    queries: PathBuf,

    /// Qrels TSV
    #[arg(long)]
    qrels: PathBuf,

    /// Dimensions to sweep, comma-separated
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<usize>,

    /// Recall cutoffs, comma-separated
    #[arg(long, value_delimiter = ',', default_value = "2,10,100")]
    k: Vec<usize>,

    /// Output CSV (header: dimension,k,recall)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct CollisionsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    config: ConfigArgs,

    /// N-gram count for the closed-form estimate 1 - exp(-n^2/2d)
    #[arg(long)]
    n: Option<u64>,

    /// Measure the observed per-text collision rate over this corpus
    #[arg(long)]
    corpus: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct GensynthArgs {
    /// Number of people (= documents)
    #[arg(long, default_value_t = 5000)]
    people: usize,

    /// Size of the attribute vocabulary
    #[arg(long, default_value_t = 2000)]
    attributes: usize,

    /// Attributes listed per person
    #[arg(long, default_value_t = 8)]
    attrs_per_person: usize,

    /// Attributes conjoined per query
    #[arg(long, default_value_t = 1)]
    attrs_per_query: usize,

    /// Number of queries
    #[arg(long, default_value_t = 200)]
    queries: usize,

    /// RNG seed; same seed, same bytes
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Output directory for corpus.jsonl, queries.jsonl, qrels.tsv
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::FAILURE;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: could not configure {threads} worker threads: {e}");
            return ExitCode::FAILURE;
        }
    }

    let result = match cli.command {
        Command::Encode(args) => run_encode(args),
        Command::Index(args) => run_index(args),
        Command::Search(args) => run_search(args),
        Command::Eval(args) => run_eval(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Collisions(args) => run_collisions(args),
        Command::Gensynth(args) => run_gensynth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn read_input_text(args: &EncodeArgs) -> Result<String> {
    match (&args.text, &args.file) {
        (Some(text), None) => Ok(text.clone()),
        (None, Some(path)) => std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display())),
        _ => unreachable!("clap enforces exactly one input"),
    }
}

fn run_encode(args: EncodeArgs) -> Result<()> {
    let config = args.config.build()?;
    let text = read_input_text(&args)?;
    let started = Instant::now();
    let vector = encode(&text, &config);

    if vector.is_zero() {
        warn!("input produced no n-grams; emitting the all-zero vector");
    }
    if args.stats {
        let ngram_count: usize = normalize_and_tokenize(&text)
            .iter()
            .map(|word| extract_ngrams(word, &config).map(|g| g.len()).unwrap_or(0))
            .sum();
        eprintln!("n-grams: {ngram_count}");
        eprintln!("nonzero components: {}", vector.nonzero_count());
    }

    match &args.out {
        Some(path) => {
            let mut bytes = Vec::with_capacity(vector.dimension() * 4);
            for component in vector.components() {
                bytes.extend_from_slice(&component.to_le_bytes());
            }
            std::fs::write(path, &bytes)
                .with_context(|| format!("writing {}", path.display()))?;
            let mut manifest = RunManifest::new("encode", &args);
            manifest.config = Some(config);
            manifest.timings = Timings {
                wall_seconds: started.elapsed().as_secs_f64(),
                ..Timings::default()
            };
            if let Some(file) = &args.file {
                manifest.input(file)?;
            }
            manifest.output(path)?;
            manifest.write_alongside(path)?;
        }
        None => {
            println!("{}", serde_json::to_string(vector.components())?);
        }
    }
    Ok(())
}

fn run_index(args: IndexArgs) -> Result<()> {
    let config = args.config.build()?;
    let records = ingest::load_corpus(&args.corpus)?;
    info!("encoding {} documents at d={}", records.len(), config.dimension());

    let started = Instant::now();
    let entries: Vec<(String, DenseVector)> = records
        .par_iter()
        .map(|record| (record.doc_id.clone(), encode(&record.encoded_text(), &config)))
        .collect();
    let index = VectorIndex::from_entries(&config, entries)?;
    index.save(&args.out)?;
    let wall = started.elapsed().as_secs_f64();
    let docs_per_sec = if wall > 0.0 { index.len() as f64 / wall } else { 0.0 };
    info!(
        "indexed {} documents in {wall:.2}s ({docs_per_sec:.0} docs/sec) -> {}",
        index.len(),
        args.out.display()
    );

    let mut manifest = RunManifest::new("index", &args);
    manifest.config = Some(config);
    manifest.timings = Timings {
        wall_seconds: wall,
        index_docs_per_sec: Some(docs_per_sec),
        queries_per_sec: None,
    };
    manifest.input(&args.corpus)?;
    manifest.output(&args.out)?;
    manifest.write_alongside(&args.out)?;
    Ok(())
}

fn load_search_queries(args: &SearchArgs) -> Result<Vec<QueryRecord>> {
    match (&args.query, &args.queries) {
        (Some(text), None) => Ok(vec![QueryRecord {
            query_id: "q0".into(),
            text: text.clone(),
        }]),
        (None, Some(path)) => Ok(ingest::load_queries(path)?),
        _ => unreachable!("clap enforces exactly one query input"),
    }
}

fn run_search(args: SearchArgs) -> Result<()> {
    let index = VectorIndex::load(&args.index)?;
    let config = index.config().clone();
    let queries = load_search_queries(&args)?;

    let started = Instant::now();
    let vectors: Vec<DenseVector> = queries
        .par_iter()
        .map(|q| encode(&q.text, &config))
        .collect();
    let ranked = index.top_k_batch(&vectors, args.k)?;
    let wall = started.elapsed().as_secs_f64();
    let qps = if wall > 0.0 { queries.len() as f64 / wall } else { 0.0 };

    let mut out = String::new();
    for (query, results) in queries.iter().zip(&ranked) {
        for hit in results {
            out.push_str(&format!(
                "{}\t{}\t{}\t{:.6}\n",
                query.query_id, hit.doc_id, hit.rank, hit.score
            ));
        }
    }
    match &args.out {
        Some(path) => {
            std::fs::write(path, out.as_bytes())
                .with_context(|| format!("writing {}", path.display()))?;
            let mut manifest = RunManifest::new("search", &args);
            manifest.config = Some(config);
            manifest.timings = Timings {
                wall_seconds: wall,
                index_docs_per_sec: None,
                queries_per_sec: Some(qps),
            };
            manifest.input(&args.index)?;
            if let Some(queries_path) = &args.queries {
                manifest.input(queries_path)?;
            }
            manifest.output(path)?;
            manifest.write_alongside(path)?;
        }
        None => {
            print!("{out}");
        }
    }
    info!("{} queries in {wall:.2}s ({qps:.1} queries/sec)", queries.len());
    Ok(())
}

/// Drops queries that have no judgments, warning per drop; errors if nothing
/// remains.
fn retain_judged(queries: Vec<QueryRecord>, qrels: &numen_core::Qrels) -> Result<Vec<QueryRecord>> {
    let kept: Vec<QueryRecord> = queries
        .into_iter()
        .filter(|q| {
            let keep = qrels.contains_query(&q.query_id);
            if !keep {
                warn!("query {} has no relevance judgments; skipping", q.query_id);
            }
            keep
        })
        .collect();
    if kept.is_empty() {
        bail!("no query has relevance judgments; nothing to evaluate");
    }
    Ok(kept)
}

fn run_eval(args: EvalArgs) -> Result<()> {
    let qrels = ingest::load_qrels(&args.qrels)?;
    let queries = retain_judged(ingest::load_queries(&args.queries)?, &qrels)?;
    let max_k = *args.k.iter().max().context("at least one k required")?;

    let started = Instant::now();
    let (results, fingerprint, dimension, doc_count, config) = match (&args.index, &args.bm25_corpus)
    {
        (Some(index_path), None) => {
            let index = VectorIndex::load(index_path)?;
            let config = index.config().clone();
            let vectors: Vec<DenseVector> = queries
                .par_iter()
                .map(|q| encode(&q.text, &config))
                .collect();
            let ranked = index.top_k_batch(&vectors, max_k)?;
            let results: BTreeMap<String, Vec<String>> = queries
                .iter()
                .zip(ranked)
                .map(|(q, hits)| {
                    (
                        q.query_id.clone(),
                        hits.into_iter().map(|h| h.doc_id).collect(),
                    )
                })
                .collect();
            (
                results,
                config.fingerprint(),
                config.dimension(),
                index.len(),
                Some(config),
            )
        }
        (None, Some(corpus_path)) => {
            let records = ingest::load_corpus(corpus_path)?;
            let params = Bm25Params { k1: args.k1, b: args.b };
            let bm25 = Bm25Index::build(
                records
                    .iter()
                    .map(|r| (r.doc_id.clone(), normalize_and_tokenize(&r.encoded_text()))),
                params,
            )?;
            let results: BTreeMap<String, Vec<String>> = queries
                .par_iter()
                .map(|q| {
                    let ranked = bm25.rank(&normalize_and_tokenize(&q.text), max_k);
                    (
                        q.query_id.clone(),
                        ranked.into_iter().map(|(doc_id, _)| doc_id).collect(),
                    )
                })
                .collect();
            let fingerprint = format!(
                "bm25;k1={};b={};vocab={}",
                params.k1,
                params.b,
                bm25.vocabulary_size()
            );
            // A sparse model's effective dimension is its vocabulary size.
            (results, fingerprint, bm25.vocabulary_size(), bm25.len(), None)
        }
        _ => unreachable!("clap enforces exactly one of --index/--bm25-corpus"),
    };
    let mut report = recall_at_k(&results, &qrels, &args.k)?;
    report.config_fingerprint = Some(fingerprint.clone());
    let wall = started.elapsed().as_secs_f64();

    println!("config: {fingerprint}");
    println!("documents: {doc_count}");
    println!("queries evaluated: {}", report.per_query.len());
    for k in &report.k_values {
        println!("recall@{k} = {:.4}", report.aggregate[k]);
    }

    if let Some(csv) = &args.csv {
        let mut body = String::from("dimension,k,recall\n");
        for k in &report.k_values {
            body.push_str(&format!("{dimension},{k},{:.6}\n", report.aggregate[k]));
        }
        std::fs::write(csv, body.as_bytes())
            .with_context(|| format!("writing {}", csv.display()))?;
        let mut manifest = RunManifest::new("eval", &args);
        manifest.config = config;
        manifest.timings = Timings {
            wall_seconds: wall,
            index_docs_per_sec: None,
            queries_per_sec: Some(report.per_query.len() as f64 / wall.max(f64::MIN_POSITIVE)),
        };
        if let Some(index_path) = &args.index {
            manifest.input(index_path)?;
        }
        if let Some(corpus_path) = &args.bm25_corpus {
            manifest.input(corpus_path)?;
        }
        manifest.input(&args.queries)?;
        manifest.input(&args.qrels)?;
        manifest.output(csv)?;
        manifest.write_alongside(csv)?;
    }
    Ok(())
}

fn run_sweep(args: SweepArgs) -> Result<()> {
    let base = args.encoding.build(*args.dims.iter().max().context("at least one dimension")?)?;
    let corpus_records = ingest::load_corpus(&args.corpus)?;
    let qrels = ingest::load_qrels(&args.qrels)?;
    let queries = retain_judged(ingest::load_queries(&args.queries)?, &qrels)?;

    let corpus: Vec<(String, String)> = corpus_records
        .iter()
        .map(|r| (r.doc_id.clone(), r.encoded_text()))
        .collect();
    let query_pairs: Vec<(String, String)> = queries
        .iter()
        .map(|q| (q.query_id.clone(), q.text.clone()))
        .collect();

    let started = Instant::now();
    let rows = dimension_sweep(&corpus, &query_pairs, &qrels, &args.dims, &args.k, &base)?;
    let wall = started.elapsed().as_secs_f64();

    let mut body = String::from("dimension,k,recall\n");
    for row in &rows {
        println!("d={:<8} recall@{:<4} = {:.4}", row.dimension, row.k, row.recall);
        body.push_str(&format!("{},{},{:.6}\n", row.dimension, row.k, row.recall));
    }
    std::fs::write(&args.out, body.as_bytes())
        .with_context(|| format!("writing {}", args.out.display()))?;

    let mut manifest = RunManifest::new("sweep", &args);
    manifest.config = Some(base);
    manifest.timings = Timings {
        wall_seconds: wall,
        ..Timings::default()
    };
    manifest.input(&args.corpus)?;
    manifest.input(&args.queries)?;
    manifest.input(&args.qrels)?;
    manifest.output(&args.out)?;
    manifest.write_alongside(&args.out)?;
    Ok(())
}

fn run_collisions(args: CollisionsArgs) -> Result<()> {
    if args.n.is_none() && args.corpus.is_none() {
        bail!("nothing to do: pass --n for the formula, --corpus for a measurement, or both");
    }
    let config = args.config.build()?;
    if let Some(n) = args.n {
        println!(
            "formula: n={n} d={} p_collision={:.6}",
            config.dimension(),
            collision_probability(n, config.dimension() as u64)
        );
    }
    if let Some(corpus) = &args.corpus {
        let records = ingest::load_corpus(corpus)?;
        let texts: Vec<String> = records.iter().map(|r| r.encoded_text()).collect();
        let observed = measure_empirical_collisions(&texts, &config);
        let mean_n = numen_core::eval::mean_distinct_ngrams(&texts, &config);
        println!(
            "empirical: texts={} mean_distinct_ngrams={mean_n:.1} observed_rate={observed:.6}",
            texts.len()
        );
        println!(
            "formula at n={:.0}: p_collision={:.6}",
            mean_n.round(),
            collision_probability(mean_n.round() as u64, config.dimension() as u64)
        );
    }
    Ok(())
}

fn run_gensynth(args: GensynthArgs) -> Result<()> {
    let spec = SynthSpec {
        num_people: args.people,
        num_attributes: args.attributes,
        attributes_per_person: args.attrs_per_person,
        attributes_per_query: args.attrs_per_query,
        num_queries: args.queries,
        seed: args.seed,
    };
    let started = Instant::now();
    let dataset = ingest::generate_synthetic(&spec)?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let files = dataset.write_to(&args.out)?;
    info!(
        "wrote {} documents, {} queries, {} judged queries under {}",
        dataset.corpus.len(),
        dataset.queries.len(),
        dataset.qrels.num_queries(),
        args.out.display()
    );

    let mut manifest = RunManifest::new("gensynth", &args);
    manifest.timings = Timings {
        wall_seconds: started.elapsed().as_secs_f64(),
        ..Timings::default()
    };
    for file in &files {
        manifest.output(file)?;
    }
    manifest.write_to(&args.out.join("manifest.json"))?;
    Ok(())
}
