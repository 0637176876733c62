//! Corpus, query and qrels loading (BEIR-style files) plus a deterministic
//! synthetic dataset generator for desk-scale experiments.
//!
//! On-disk formats: `corpus.jsonl` / `queries.jsonl` hold one JSON object
//! per line with `_id`, `text` and (for documents) an optional `title`;
//! `qrels.tsv` is tab-separated `query_id  doc_id  grade` with an optional
//! `query-id\tcorpus-id\tscore` header.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::warn;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::Qrels;

const QRELS_HEADER: &str = "query-id\tcorpus-id\tscore";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentRecord {
    pub doc_id: String,
    pub title: Option<String>,
    pub text: String,
}

impl DocumentRecord {
    /// The text that gets encoded: title and body joined by a single space
    /// when a title is present.
    pub fn encoded_text(&self) -> String {
        match &self.title {
            Some(title) => format!("{title} {}", self.text),
            None => self.text.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryRecord {
    pub query_id: String,
    pub text: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawDocument {
    #[serde(rename = "_id")]
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    title: Option<String>,
    text: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawQuery {
    #[serde(rename = "_id")]
    id: String,
    text: String,
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn open_lines(path: &Path) -> Result<impl Iterator<Item = std::io::Result<String>>> {
    let file = File::open(path).map_err(|source| Error::FileIo {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(BufReader::new(file).lines())
}

/// Loads a JSONL corpus in file order. Ids must be non-empty and unique;
/// malformed lines abort with their line number.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<DocumentRecord>> {
    let path = path.as_ref();
    let mut records = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (number, line) in open_lines(path)?.enumerate() {
        let number = number + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawDocument = serde_json::from_str(&line)
            .map_err(|e| parse_error(path, number, e.to_string()))?;
        if raw.id.is_empty() {
            return Err(parse_error(path, number, "empty _id"));
        }
        if !seen.insert(raw.id.clone()) {
            return Err(parse_error(path, number, format!("duplicate _id {:?}", raw.id)));
        }
        records.push(DocumentRecord {
            doc_id: raw.id,
            title: raw.title,
            text: raw.text,
        });
    }
    Ok(records)
}

/// Loads a JSONL query file; same rules as [`load_corpus`].
pub fn load_queries(path: impl AsRef<Path>) -> Result<Vec<QueryRecord>> {
    let path = path.as_ref();
    let mut records = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (number, line) in open_lines(path)?.enumerate() {
        let number = number + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawQuery = serde_json::from_str(&line)
            .map_err(|e| parse_error(path, number, e.to_string()))?;
        if raw.id.is_empty() {
            return Err(parse_error(path, number, "empty _id"));
        }
        if !seen.insert(raw.id.clone()) {
            return Err(parse_error(path, number, format!("duplicate _id {:?}", raw.id)));
        }
        records.push(QueryRecord {
            query_id: raw.id,
            text: raw.text,
        });
    }
    Ok(records)
}

/// Loads tab-separated qrels. Repeated (query, doc) pairs keep the last
/// grade with a warning. Queries that end up with no relevant document are
/// dropped with a warning, since recall is undefined for them.
pub fn load_qrels(path: impl AsRef<Path>) -> Result<Qrels> {
    let path = path.as_ref();
    let mut qrels = Qrels::new();
    for (number, line) in open_lines(path)?.enumerate() {
        let number = number + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        if number == 1 && line == QRELS_HEADER {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_error(
                path,
                number,
                format!("expected 3 tab-separated fields, got {}", fields.len()),
            ));
        }
        let grade: u32 = fields[2].trim().parse().map_err(|_| {
            parse_error(path, number, format!("relevance grade {:?} is not a nonnegative integer", fields[2]))
        })?;
        if fields[0].is_empty() || fields[1].is_empty() {
            return Err(parse_error(path, number, "empty query or doc id"));
        }
        if let Some(previous) = qrels.insert(fields[0], fields[1], grade) {
            warn!(
                "{}:{number}: duplicate judgment for ({}, {}); replacing grade {previous} with {grade}",
                path.display(),
                fields[0],
                fields[1]
            );
        }
    }
    let unjudgeable: Vec<String> = qrels
        .iter()
        .filter(|(_, docs)| docs.values().all(|&g| g == 0))
        .map(|(query_id, _)| query_id.to_string())
        .collect();
    for query_id in unjudgeable {
        warn!("query {query_id} has no relevant documents; dropping");
        qrels.remove_query(&query_id);
    }
    Ok(qrels)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).map_err(|source| Error::FileIo {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(BufWriter::new(file))
}

pub fn write_corpus(path: impl AsRef<Path>, records: &[DocumentRecord]) -> Result<()> {
    let mut out = create(path.as_ref())?;
    for record in records {
        let raw = RawDocument {
            id: record.doc_id.clone(),
            title: record.title.clone(),
            text: record.text.clone(),
        };
        serde_json::to_writer(&mut out, &raw).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_queries(path: impl AsRef<Path>, records: &[QueryRecord]) -> Result<()> {
    let mut out = create(path.as_ref())?;
    for record in records {
        let raw = RawQuery {
            id: record.query_id.clone(),
            text: record.text.clone(),
        };
        serde_json::to_writer(&mut out, &raw).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_qrels(path: impl AsRef<Path>, qrels: &Qrels) -> Result<()> {
    let mut out = create(path.as_ref())?;
    writeln!(out, "{QRELS_HEADER}")?;
    for (query_id, docs) in qrels.iter() {
        for (doc_id, grade) in docs {
            writeln!(out, "{query_id}\t{doc_id}\t{grade}")?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Parameters for the synthetic generator. Generation is a pure function of
/// this struct: same spec, same bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SynthSpec {
    pub num_people: usize,
    pub num_attributes: usize,
    pub attributes_per_person: usize,
    pub attributes_per_query: usize,
    pub num_queries: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub corpus: Vec<DocumentRecord>,
    pub queries: Vec<QueryRecord>,
    pub qrels: Qrels,
}

impl SyntheticDataset {
    /// Writes `corpus.jsonl`, `queries.jsonl` and `qrels.tsv` into `dir`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<[PathBuf; 3]> {
        let dir = dir.as_ref();
        let corpus = dir.join("corpus.jsonl");
        let queries = dir.join("queries.jsonl");
        let qrels = dir.join("qrels.tsv");
        write_corpus(&corpus, &self.corpus)?;
        write_queries(&queries, &self.queries)?;
        write_qrels(&qrels, &self.qrels)?;
        Ok([corpus, queries, qrels])
    }
}

const QUERY_RETRIES: usize = 1000;

fn random_word(rng: &mut ChaCha8Rng, min_len: usize, max_len: usize) -> String {
    let len = rng.gen_range(min_len..=max_len);
    (0..len).map(|_| rng.gen_range(b'a'..=b'z') as char).collect()
}

/// Generates a "people like attributes" dataset: one document per person
/// listing their attributes, one query per sampled attribute subset, and
/// qrels marking every person that holds all queried attributes. Queries
/// that match nobody are resampled up to a bounded number of retries.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<SyntheticDataset> {
    if spec.num_people == 0 || spec.num_attributes == 0 || spec.num_queries == 0 {
        return Err(Error::InvalidConfig(
            "num_people, num_attributes and num_queries must be >= 1".into(),
        ));
    }
    if spec.attributes_per_person == 0 || spec.attributes_per_person > spec.num_attributes {
        return Err(Error::InvalidConfig(
            "attributes_per_person must be in 1..=num_attributes".into(),
        ));
    }
    if spec.attributes_per_query == 0 || spec.attributes_per_query > spec.num_attributes {
        return Err(Error::InvalidConfig(
            "attributes_per_query must be in 1..=num_attributes".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut attributes: Vec<String> = Vec::with_capacity(spec.num_attributes);
    let mut attribute_set: HashSet<String> = HashSet::new();
    while attributes.len() < spec.num_attributes {
        let word = random_word(&mut rng, 4, 8);
        if attribute_set.insert(word.clone()) {
            attributes.push(word);
        }
    }

    let id_width = spec.num_people.to_string().len();
    let query_width = spec.num_queries.to_string().len();

    let mut corpus = Vec::with_capacity(spec.num_people);
    let mut holdings: Vec<Vec<usize>> = Vec::with_capacity(spec.num_people);
    for person in 0..spec.num_people {
        let name = random_word(&mut rng, 5, 9);
        let chosen = sample(&mut rng, spec.num_attributes, spec.attributes_per_person);
        let listed: Vec<&str> = chosen.iter().map(|i| attributes[i].as_str()).collect();
        let mut sorted: Vec<usize> = chosen.iter().collect();
        sorted.sort_unstable();
        holdings.push(sorted);
        corpus.push(DocumentRecord {
            doc_id: format!("d{:0id_width$}", person + 1),
            title: None,
            text: format!("{name} likes {}", listed.join(", ")),
        });
    }

    let mut queries = Vec::with_capacity(spec.num_queries);
    let mut qrels = Qrels::new();
    for query in 0..spec.num_queries {
        let query_id = format!("q{:0query_width$}", query + 1);
        let mut found = false;
        for _ in 0..QUERY_RETRIES {
            let chosen = sample(&mut rng, spec.num_attributes, spec.attributes_per_query);
            let wanted: Vec<usize> = chosen.iter().collect();
            let relevant: Vec<usize> = holdings
                .iter()
                .enumerate()
                .filter(|(_, held)| wanted.iter().all(|a| held.binary_search(a).is_ok()))
                .map(|(person, _)| person)
                .collect();
            if relevant.is_empty() {
                continue;
            }
            let listed: Vec<&str> = wanted.iter().map(|&i| attributes[i].as_str()).collect();
            queries.push(QueryRecord {
                query_id: query_id.clone(),
                text: format!("who likes {}", listed.join(" ")),
            });
            for person in relevant {
                qrels.insert(query_id.clone(), corpus[person].doc_id.clone(), 1);
            }
            found = true;
            break;
        }
        if !found {
            return Err(Error::SynthInfeasible(format!(
                "no attribute subset of size {} matched any person after {QUERY_RETRIES} tries",
                spec.attributes_per_query
            )));
        }
    }

    Ok(SyntheticDataset {
        corpus,
        queries,
        qrels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(content: &str) -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("input");
        std::fs::write(&path, content).unwrap();
        (dir, path)
    }

    #[test]
    fn corpus_line_without_title() {
        let (_dir, path) = write_temp("{\"_id\":\"d1\",\"text\":\"jon likes apples\"}\n");
        let records = load_corpus(&path).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].doc_id, "d1");
        assert_eq!(records[0].title, None);
        assert_eq!(records[0].encoded_text(), "jon likes apples");
    }

    #[test]
    fn title_is_prepended_with_a_space() {
        let (_dir, path) =
            write_temp("{\"_id\":\"d1\",\"title\":\"Bio\",\"text\":\"jon likes apples\"}\n");
        let records = load_corpus(&path).unwrap();
        assert_eq!(records[0].encoded_text(), "Bio jon likes apples");
    }

    #[test]
    fn extra_fields_are_ignored() {
        let (_dir, path) =
            write_temp("{\"_id\":\"d1\",\"text\":\"x\",\"metadata\":{\"url\":\"http://e\"}}\n");
        assert_eq!(load_corpus(&path).unwrap().len(), 1);
    }

    #[test]
    fn truncated_line_reports_its_number() {
        let (_dir, path) = write_temp("{\"_id\":\"d1\",\"text\":\"x\"}\n{\"_id\":\"d2\",\"te");
        let err = load_corpus(&path).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn missing_text_field_is_an_error() {
        let (_dir, path) = write_temp("{\"_id\":\"d1\"}\n");
        let err = load_corpus(&path).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn duplicate_doc_id_is_an_error() {
        let (_dir, path) =
            write_temp("{\"_id\":\"d1\",\"text\":\"x\"}\n{\"_id\":\"d1\",\"text\":\"y\"}\n");
        let err = load_corpus(&path).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn queries_load_and_reject_duplicates() {
        let (_dir, path) = write_temp("{\"_id\":\"q1\",\"text\":\"who likes apples\"}\n");
        let queries = load_queries(&path).unwrap();
        assert_eq!(queries[0].query_id, "q1");

        let (_dir2, dup) =
            write_temp("{\"_id\":\"q1\",\"text\":\"a\"}\n{\"_id\":\"q1\",\"text\":\"b\"}\n");
        assert!(load_queries(&dup).is_err());
    }

    #[test]
    fn empty_query_file_is_empty_stream() {
        let (_dir, path) = write_temp("");
        assert!(load_queries(&path).unwrap().is_empty());
    }

    #[test]
    fn qrels_basic_line() {
        let (_dir, path) = write_temp("q1\td1\t1\n");
        let qrels = load_qrels(&path).unwrap();
        assert_eq!(qrels.grade("q1", "d1"), Some(1));
    }

    #[test]
    fn qrels_header_is_skipped() {
        let (_dir, path) = write_temp("query-id\tcorpus-id\tscore\nq1\td1\t1\n");
        let qrels = load_qrels(&path).unwrap();
        assert_eq!(qrels.num_queries(), 1);
    }

    #[test]
    fn qrels_header_only_is_empty() {
        let (_dir, path) = write_temp("query-id\tcorpus-id\tscore\n");
        assert!(load_qrels(&path).unwrap().is_empty());
    }

    #[test]
    fn qrels_last_grade_wins() {
        let (_dir, path) = write_temp("q1\td1\t1\nq1\td1\t2\n");
        let qrels = load_qrels(&path).unwrap();
        assert_eq!(qrels.grade("q1", "d1"), Some(2));
    }

    #[test]
    fn qrels_zero_relevant_queries_are_dropped() {
        let (_dir, path) = write_temp("q1\td1\t0\nq2\td1\t1\n");
        let qrels = load_qrels(&path).unwrap();
        assert!(!qrels.contains_query("q1"));
        assert!(qrels.contains_query("q2"));
    }

    #[test]
    fn qrels_bad_grade_and_column_count() {
        let (_dir, bad_grade) = write_temp("q1\td1\tlots\n");
        let err = load_qrels(&bad_grade).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");

        let (_dir2, two_cols) = write_temp("q1\td1\n");
        let err = load_qrels(&two_cols).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");

        let (_dir3, negative) = write_temp("q1\td1\t-1\n");
        assert!(load_qrels(&negative).is_err());
    }

    #[test]
    fn smallest_viable_synthetic_spec() {
        let spec = SynthSpec {
            num_people: 2,
            num_attributes: 2,
            attributes_per_person: 1,
            attributes_per_query: 1,
            num_queries: 2,
            seed: 7,
        };
        let data = generate_synthetic(&spec).unwrap();
        assert_eq!(data.corpus.len(), 2);
        assert_eq!(data.queries.len(), 2);
        for query in &data.queries {
            let relevant = data.qrels.relevant_docs(&query.query_id).unwrap();
            assert!(!relevant.is_empty());
        }
    }

    #[test]
    fn synthetic_generation_is_deterministic() {
        let spec = SynthSpec {
            num_people: 30,
            num_attributes: 12,
            attributes_per_person: 3,
            attributes_per_query: 1,
            num_queries: 8,
            seed: 99,
        };
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        generate_synthetic(&spec).unwrap().write_to(dir_a.path()).unwrap();
        generate_synthetic(&spec).unwrap().write_to(dir_b.path()).unwrap();
        for name in ["corpus.jsonl", "queries.jsonl", "qrels.tsv"] {
            let a = std::fs::read(dir_a.path().join(name)).unwrap();
            let b = std::fs::read(dir_b.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical runs");
        }
    }

    #[test]
    fn synthetic_round_trips_through_disk() {
        let spec = SynthSpec {
            num_people: 25,
            num_attributes: 10,
            attributes_per_person: 2,
            attributes_per_query: 1,
            num_queries: 5,
            seed: 3,
        };
        let data = generate_synthetic(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        data.write_to(dir.path()).unwrap();
        assert_eq!(load_corpus(dir.path().join("corpus.jsonl")).unwrap(), data.corpus);
        assert_eq!(load_queries(dir.path().join("queries.jsonl")).unwrap(), data.queries);
        assert_eq!(load_qrels(dir.path().join("qrels.tsv")).unwrap(), data.qrels);
    }

    #[test]
    fn infeasible_spec_is_reported() {
        let spec = SynthSpec {
            num_people: 1,
            num_attributes: 50,
            attributes_per_person: 1,
            attributes_per_query: 40,
            num_queries: 1,
            seed: 1,
        };
        // One person holds 1 of 50 attributes; a 40-attribute conjunction
        // can never match.
        assert!(matches!(
            generate_synthetic(&spec),
            Err(Error::SynthInfeasible(_))
        ));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let base = SynthSpec {
            num_people: 2,
            num_attributes: 2,
            attributes_per_person: 1,
            attributes_per_query: 1,
            num_queries: 1,
            seed: 0,
        };
        let mut s = base.clone();
        s.attributes_per_person = 3;
        assert!(generate_synthetic(&s).is_err());
        let mut s = base.clone();
        s.num_people = 0;
        assert!(generate_synthetic(&s).is_err());
        let mut s = base;
        s.attributes_per_query = 0;
        assert!(generate_synthetic(&s).is_err());
    }
}
