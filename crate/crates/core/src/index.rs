//! Vector index: encoded documents, exact top-k search, binary persistence.
//!
//! Search is brute force on purpose — recall numbers stay attributable to
//! the encoding alone. A built or loaded index is immutable, so any number
//! of readers may query it concurrently.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rayon::prelude::*;

use crate::crc32::{Crc32, HashVariant};
use crate::encoder::{encode, EncoderConfig};
use crate::error::{Error, Result};
use crate::vector::DenseVector;

const MAGIC: &[u8; 4] = b"NUMN";
const FORMAT_VERSION: u32 = 1;

/// One ranked hit. Within a result list scores are non-increasing and ranks
/// run 1, 2, 3, ...
#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub doc_id: String,
    pub score: f32,
    pub rank: usize,
}

#[derive(Debug, Clone)]
pub struct IndexEntry {
    doc_id: String,
    vector: DenseVector,
}

impl IndexEntry {
    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn vector(&self) -> &DenseVector {
        &self.vector
    }
}

/// An ordered collection of (doc id, vector) pairs plus the config that
/// produced the vectors. Doc ids are unique; every vector has the config's
/// dimension.
#[derive(Debug, Clone)]
pub struct VectorIndex {
    config: EncoderConfig,
    entries: Vec<IndexEntry>,
}

impl VectorIndex {
    /// Encodes `documents` in input order. Fails on a duplicate doc id.
    pub fn build<I>(documents: I, config: &EncoderConfig) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let entries = documents
            .into_iter()
            .map(|(doc_id, text)| (doc_id, encode(&text, config)))
            .collect();
        Self::from_entries(config, entries)
    }

    /// Assembles an index from pre-encoded vectors (e.g. encoded in
    /// parallel). Validates id uniqueness and dimensions.
    pub fn from_entries(config: &EncoderConfig, entries: Vec<(String, DenseVector)>) -> Result<Self> {
        let mut seen: HashSet<&str> = HashSet::with_capacity(entries.len());
        for (doc_id, vector) in &entries {
            if !seen.insert(doc_id.as_str()) {
                return Err(Error::DuplicateDocId(doc_id.clone()));
            }
            if vector.dimension() != config.dimension() {
                return Err(Error::DimensionMismatch {
                    expected: config.dimension(),
                    actual: vector.dimension(),
                });
            }
        }
        drop(seen);
        Ok(VectorIndex {
            config: config.clone(),
            entries: entries
                .into_iter()
                .map(|(doc_id, vector)| IndexEntry { doc_id, vector })
                .collect(),
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    /// Exact top-k by inner product. Returns `min(k, len)` results sorted by
    /// score descending, ties broken by doc id ascending.
    pub fn top_k(&self, query: &DenseVector, k: usize) -> Result<Vec<SearchResult>> {
        if query.dimension() != self.config.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.config.dimension(),
                actual: query.dimension(),
            });
        }
        let mut scored: Vec<(f32, usize)> = Vec::with_capacity(self.entries.len());
        for (position, entry) in self.entries.iter().enumerate() {
            let score = query.dot(&entry.vector)?;
            scored.push((score, position));
        }
        scored.sort_unstable_by(|a, b| {
            b.0.total_cmp(&a.0)
                .then_with(|| self.entries[a.1].doc_id.cmp(&self.entries[b.1].doc_id))
        });
        scored.truncate(k);
        Ok(scored
            .into_iter()
            .enumerate()
            .map(|(i, (score, position))| SearchResult {
                doc_id: self.entries[position].doc_id.clone(),
                score,
                rank: i + 1,
            })
            .collect())
    }

    /// `top_k` over many queries, scored in parallel; output order matches
    /// query order regardless of worker count.
    pub fn top_k_batch(&self, queries: &[DenseVector], k: usize) -> Result<Vec<Vec<SearchResult>>> {
        queries.par_iter().map(|q| self.top_k(q, k)).collect()
    }

    /// Writes the index in the self-describing binary format:
    /// magic `NUMN`, version, dimension, count, hash variant, n-gram sizes,
    /// weight table, entries, and a trailing CRC32 of everything before it.
    /// Little-endian throughout.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|source| Error::FileIo {
            path: path.to_path_buf(),
            source,
        })?;
        let mut writer = CrcWriter::new(BufWriter::new(file));

        writer.write_all(MAGIC)?;
        writer.write_u32::<LittleEndian>(FORMAT_VERSION)?;
        writer.write_u32::<LittleEndian>(self.config.dimension() as u32)?;
        writer.write_u64::<LittleEndian>(self.entries.len() as u64)?;
        writer.write_u8(self.config.hash_variant().code())?;

        let sizes = self.config.ngram_sizes();
        writer.write_u8(sizes.len() as u8)?;
        for &n in sizes {
            writer.write_u32::<LittleEndian>(n as u32)?;
        }
        let weights = self.config.weight_table();
        writer.write_u8(weights.len() as u8)?;
        for (&length, &weight) in weights {
            writer.write_u32::<LittleEndian>(length as u32)?;
            writer.write_f64::<LittleEndian>(weight)?;
        }

        for entry in &self.entries {
            let id_bytes = entry.doc_id.as_bytes();
            if id_bytes.len() > u16::MAX as usize {
                return Err(Error::InvalidArgument(format!(
                    "doc id {:?}... exceeds {} bytes",
                    &entry.doc_id[..32.min(entry.doc_id.len())],
                    u16::MAX
                )));
            }
            writer.write_u16::<LittleEndian>(id_bytes.len() as u16)?;
            writer.write_all(id_bytes)?;
            for &component in entry.vector.components() {
                writer.write_f32::<LittleEndian>(component)?;
            }
        }

        let checksum = writer.checksum();
        let mut inner = writer.into_inner();
        inner.write_u32::<LittleEndian>(checksum)?;
        inner.flush()?;
        Ok(())
    }

    /// Loads an index written by [`VectorIndex::save`], validating magic,
    /// version, structure and the trailing checksum.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| Error::FileIo {
            path: path.to_path_buf(),
            source,
        })?;
        let file_len = file
            .metadata()
            .map(|m| m.len())
            .map_err(|source| Error::FileIo {
                path: path.to_path_buf(),
                source,
            })?;
        let mut reader = CrcReader::new(BufReader::new(file));

        match Self::read_payload(&mut reader, file_len) {
            Ok(index) => {
                let computed = reader.checksum();
                let mut inner = reader.into_inner();
                let stored = inner
                    .read_u32::<LittleEndian>()
                    .map_err(|_| Error::IndexFormat("file truncated before checksum".into()))?;
                if computed != stored {
                    return Err(Error::IndexFormat(format!(
                        "checksum mismatch: computed {computed:#010x}, stored {stored:#010x}"
                    )));
                }
                let mut probe = [0u8; 1];
                if inner.read(&mut probe)? != 0 {
                    return Err(Error::IndexFormat("trailing data after checksum".into()));
                }
                Ok(index)
            }
            Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
                Err(Error::IndexFormat("file truncated".into()))
            }
            Err(e) => Err(e),
        }
    }

    fn read_payload<R: Read>(reader: &mut CrcReader<R>, file_len: u64) -> Result<Self> {
        let mut magic = [0u8; 4];
        reader.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::IndexFormat(format!(
                "bad magic {magic:02x?}, expected {MAGIC:02x?}"
            )));
        }
        let version = reader.read_u32::<LittleEndian>()?;
        if version != FORMAT_VERSION {
            return Err(Error::IndexFormat(format!(
                "unsupported format version {version} (supported: {FORMAT_VERSION})"
            )));
        }
        let dimension = reader.read_u32::<LittleEndian>()? as usize;
        let count = reader.read_u64::<LittleEndian>()?;
        let variant_code = reader.read_u8()?;
        let hash_variant = HashVariant::from_code(variant_code).ok_or_else(|| {
            Error::IndexFormat(format!("unknown hash variant code {variant_code}"))
        })?;

        // Each entry takes at least an id length plus the vector payload;
        // reject counts that cannot fit in the file before allocating.
        let min_entry_bytes = 2 + 4 * dimension as u64;
        if min_entry_bytes > 0 && count > file_len / min_entry_bytes.max(1) + 1 {
            return Err(Error::IndexFormat(format!(
                "entry count {count} exceeds what a {file_len}-byte file can hold"
            )));
        }

        let size_count = reader.read_u8()? as usize;
        let mut ngram_sizes = Vec::with_capacity(size_count);
        for _ in 0..size_count {
            ngram_sizes.push(reader.read_u32::<LittleEndian>()? as usize);
        }
        let weight_count = reader.read_u8()? as usize;
        let mut weights = Vec::with_capacity(weight_count);
        for _ in 0..weight_count {
            let length = reader.read_u32::<LittleEndian>()? as usize;
            let weight = reader.read_f64::<LittleEndian>()?;
            weights.push((length, weight));
        }
        let config = EncoderConfig::new(dimension, &ngram_sizes, &weights, hash_variant)?;

        let mut entries = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let id_len = reader.read_u16::<LittleEndian>()? as usize;
            let mut id_bytes = vec![0u8; id_len];
            reader.read_exact(&mut id_bytes)?;
            let doc_id = String::from_utf8(id_bytes)
                .map_err(|_| Error::IndexFormat("doc id is not valid UTF-8".into()))?;
            let mut components = vec![0.0f32; dimension];
            reader.read_f32_into::<LittleEndian>(&mut components)?;
            entries.push((doc_id, DenseVector::new(components)));
        }
        Self::from_entries(&config, entries)
    }
}

/// Writer wrapper that folds every written byte into a CRC32-IEEE checksum.
struct CrcWriter<W: Write> {
    inner: W,
    crc: Crc32,
}

impl<W: Write> CrcWriter<W> {
    fn new(inner: W) -> Self {
        CrcWriter {
            inner,
            crc: Crc32::new(HashVariant::Crc32Ieee),
        }
    }

    fn checksum(&self) -> u32 {
        self.crc.finalize()
    }

    fn into_inner(self) -> W {
        self.inner
    }
}

impl<W: Write> Write for CrcWriter<W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let written = self.inner.write(buf)?;
        self.crc.update(&buf[..written]);
        Ok(written)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

/// Reader wrapper mirroring [`CrcWriter`].
struct CrcReader<R: Read> {
    inner: R,
    crc: Crc32,
}

impl<R: Read> CrcReader<R> {
    fn new(inner: R) -> Self {
        CrcReader {
            inner,
            crc: Crc32::new(HashVariant::Crc32Ieee),
        }
    }

    fn checksum(&self) -> u32 {
        self.crc.finalize()
    }

    fn into_inner(self) -> R {
        self.inner
    }
}

impl<R: Read> Read for CrcReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.crc.update(&buf[..n]);
        Ok(n)
    }
}
