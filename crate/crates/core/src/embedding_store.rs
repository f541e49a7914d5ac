//! Dense word-embedding tables.
//!
//! Tables are read from the usual whitespace-separated text layout: one entry
//! per line, a token followed by its coordinates, no header. Vectors are
//! stored as `f32`; every dot product and norm is accumulated in `f64`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("embedding table is empty and no dimension was given")]
    Empty,
    #[error("token not in vocabulary: {0}")]
    NotFound(String),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
}

/// Raised when a similarity is undefined for the given inputs.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimilarityError {
    #[error("zero-norm vector")]
    ZeroNorm,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// An owned vector computed from table entries (means, fillers, concatenations).
#[derive(Debug, Clone, PartialEq)]
pub struct WordVector(Vec<f64>);

impl WordVector {
    pub fn new(values: Vec<f64>) -> Self {
        WordVector(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for WordVector {
    fn from(values: Vec<f64>) -> Self {
        WordVector(values)
    }
}

/// Counters for non-fatal irregularities met while loading.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadReport {
    /// Tokens seen again after their first occurrence (later rows ignored).
    pub duplicates: usize,
    /// Blank lines skipped.
    pub malformed: usize,
}

/// Immutable word → vector map with a fixed dimension.
///
/// Entries keep their insertion order, which is also the order used when the
/// table is written back out.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f32>,
}

impl EmbeddingTable {
    /// Creates an empty table. Panics if `dim` is zero.
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        EmbeddingTable {
            dim,
            words: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
        }
    }

    /// Builds a table from `(token, vector)` pairs; first occurrence wins.
    pub fn from_entries<I, S>(dim: usize, entries: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (S, Vec<f32>)>,
        S: Into<String>,
    {
        let mut table = EmbeddingTable::new(dim);
        for (word, vector) in entries {
            table.insert(word.into(), &vector)?;
        }
        Ok(table)
    }

    /// Adds an entry. Returns `Ok(false)` and leaves the table untouched when
    /// the token is already present.
    pub fn insert(&mut self, word: String, vector: &[f32]) -> Result<bool, EmbeddingError> {
        if vector.len() != self.dim {
            return Err(EmbeddingError::Dimension {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(EmbeddingError::Format {
                line: 0,
                message: format!("non-finite coordinate for {word:?}"),
            });
        }
        if self.index.contains_key(&word) {
            return Ok(false);
        }
        self.index.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.data.extend_from_slice(vector);
        Ok(true)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Exact, case-sensitive lookup.
    pub fn lookup(&self, token: &str) -> Option<&[f32]> {
        self.index.get(token).map(|&i| self.row(i))
    }

    /// Vocabulary in insertion order.
    pub fn words(&self) -> impl ExactSizeIterator<Item = &str> + '_ {
        self.words.iter().map(String::as_str)
    }

    /// `(token, vector)` pairs in insertion order.
    pub fn iter(&self) -> impl ExactSizeIterator<Item = (&str, &[f32])> + '_ {
        self.words
            .iter()
            .enumerate()
            .map(move |(i, w)| (w.as_str(), self.row(i)))
    }

    /// Returns a copy with every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f32) -> EmbeddingTable {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= factor;
        }
        out
    }

    fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

/// Reads a table from `path`.
pub fn load_table(
    path: impl AsRef<Path>,
    expected_dim: Option<usize>,
) -> Result<(EmbeddingTable, LoadReport), EmbeddingError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| EmbeddingError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_table(BufReader::new(file), expected_dim).map_err(|e| match e {
        EmbeddingError::Io { source, .. } => EmbeddingError::Io {
            path: path.display().to_string(),
            source,
        },
        other => other,
    })
}

/// Reads a table from any buffered reader.
pub fn read_table<R: BufRead>(
    reader: R,
    expected_dim: Option<usize>,
) -> Result<(EmbeddingTable, LoadReport), EmbeddingError> {
    if expected_dim == Some(0) {
        return Err(EmbeddingError::Dimension {
            expected: 0,
            found: 0,
        });
    }
    let mut report = LoadReport::default();
    let mut table: Option<EmbeddingTable> = expected_dim.map(EmbeddingTable::new);
    let mut values: Vec<f32> = Vec::new();
    let mut rows = 0usize;

    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line.map_err(|source| EmbeddingError::Io {
            path: String::from("<reader>"),
            source,
        })?;
        let mut fields = line.split_ascii_whitespace();
        let Some(token) = fields.next() else {
            report.malformed += 1;
            continue;
        };
        values.clear();
        for field in fields {
            let v: f32 = field.parse().map_err(|_| EmbeddingError::Format {
                line: line_no,
                message: format!("cannot parse {field:?} as a number"),
            })?;
            if !v.is_finite() {
                return Err(EmbeddingError::Format {
                    line: line_no,
                    message: format!("non-finite coordinate {field:?}"),
                });
            }
            values.push(v);
        }
        if values.is_empty() {
            return Err(EmbeddingError::Format {
                line: line_no,
                message: format!("token {token:?} has no coordinates"),
            });
        }
        let table = match table.as_mut() {
            Some(t) => t,
            None => table.insert(EmbeddingTable::new(values.len())),
        };
        if values.len() != table.dim {
            if rows == 0 && expected_dim.is_some() {
                return Err(EmbeddingError::Dimension {
                    expected: table.dim,
                    found: values.len(),
                });
            }
            return Err(EmbeddingError::Format {
                line: line_no,
                message: format!(
                    "row has {} coordinates, expected {}",
                    values.len(),
                    table.dim
                ),
            });
        }
        rows += 1;
        if !table.insert(token.to_string(), &values)? {
            report.duplicates += 1;
        }
    }

    table.map(|t| (t, report)).ok_or(EmbeddingError::Empty)
}

/// Writes `table` to `path` in the text format. `f32` values are printed in
/// their shortest exact form, so reading the file back is lossless.
pub fn write_table(table: &EmbeddingTable, path: impl AsRef<Path>) -> Result<(), EmbeddingError> {
    let path = path.as_ref();
    let io_err = |source| EmbeddingError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut out = BufWriter::new(file);
    write_entries(table, &mut out).map_err(io_err)?;
    out.flush().map_err(io_err)
}

pub fn write_entries<W: Write>(table: &EmbeddingTable, out: &mut W) -> io::Result<()> {
    for (word, vector) in table.iter() {
        out.write_all(word.as_bytes())?;
        for v in vector {
            write!(out, " {v}")?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Dot product accumulated in `f64`.
pub fn dot<T, U>(u: &[T], v: &[U]) -> f64
where
    T: Copy + Into<f64>,
    U: Copy + Into<f64>,
{
    u.iter().zip(v).map(|(&a, &b)| a.into() * b.into()).sum()
}

/// Euclidean norm accumulated in `f64`.
pub fn norm<T: Copy + Into<f64>>(u: &[T]) -> f64 {
    u.iter()
        .map(|&a| {
            let a: f64 = a.into();
            a * a
        })
        .sum::<f64>()
        .sqrt()
}

/// Cosine similarity `u·v / (‖u‖‖v‖)`.
pub fn cosine<T, U>(u: &[T], v: &[U]) -> Result<f64, SimilarityError>
where
    T: Copy + Into<f64>,
    U: Copy + Into<f64>,
{
    if u.len() != v.len() {
        return Err(SimilarityError::LengthMismatch(u.len(), v.len()));
    }
    let nu = norm(u);
    let nv = norm(v);
    if nu == 0.0 || nv == 0.0 {
        return Err(SimilarityError::ZeroNorm);
    }
    Ok(dot(u, v) / (nu * nv))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub word: String,
    pub similarity: f64,
}

/// The `k` vocabulary items most cosine-similar to `token`, excluding the
/// token itself. Ties are broken by lexicographic token order; zero-norm
/// entries are skipped.
pub fn nearest_neighbors(
    table: &EmbeddingTable,
    token: &str,
    k: usize,
) -> Result<Vec<Neighbor>, EmbeddingError> {
    let query = table
        .lookup(token)
        .ok_or_else(|| EmbeddingError::NotFound(token.to_string()))?;
    if norm(query) == 0.0 {
        return Err(SimilarityError::ZeroNorm.into());
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut scored: Vec<(f64, &str)> = table
        .iter()
        .filter(|(w, _)| *w != token)
        .filter_map(|(w, v)| cosine(query, v).ok().map(|s| (s, w)))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    scored.truncate(k);
    Ok(scored
        .into_iter()
        .map(|(similarity, w)| Neighbor {
            word: w.to_string(),
            similarity,
        })
        .collect())
}
