//! Relational similarity between word pairs and rank-correlation scoring of
//! relation datasets.
//!
//! Two pairs are compared by the cosine of their difference vectors, after
//! every word vector is scaled to unit length. A candidate pair is scored by
//! its mean similarity to the relation's prototype pairs, and the resulting
//! ranking is compared against human ratings with Spearman's ρ.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::embedding_store::{cosine, norm, EmbeddingTable, SimilarityError};
use crate::np_semantics::PP_SUFFIX;

#[derive(Debug, Error)]
pub enum RelsimError {
    #[error("{0}")]
    Similarity(#[from] SimilarityError),
    #[error("word not covered by the embeddings: {0}")]
    Coverage(String),
    #[error("score lists differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("correlation undefined: {0}")]
    Undefined(&'static str),
    #[error("relation {0}: no candidate pair could be scored")]
    NothingScorable(String),
    #[error("dataset line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordPair {
    pub first: String,
    pub second: String,
    pub gold_score: Option<f64>,
}

impl WordPair {
    pub fn new(first: impl Into<String>, second: impl Into<String>) -> Self {
        WordPair {
            first: first.into(),
            second: second.into(),
            gold_score: None,
        }
    }

    pub fn rated(first: impl Into<String>, second: impl Into<String>, score: f64) -> Self {
        WordPair {
            gold_score: Some(score),
            ..WordPair::new(first, second)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationDataset {
    pub relation_name: String,
    pub prototypical_pairs: Vec<WordPair>,
    pub candidate_pairs: Vec<WordPair>,
}

impl RelationDataset {
    /// Parses the line format:
    ///
    /// ```text
    /// relation Object:Component
    /// proto face nose
    /// cand car engine 42.0
    /// ```
    ///
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self, RelsimError> {
        let mut name: Option<String> = None;
        let mut protos = Vec::new();
        let mut cands = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| RelsimError::Format {
                line: line_no,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                ["relation", rest @ ..] if !rest.is_empty() => {
                    if name.is_some() {
                        return Err(err("second relation header".into()));
                    }
                    name = Some(rest.join(" "));
                }
                _ if name.is_none() => {
                    return Err(err("expected a `relation <name>` header".into()))
                }
                ["proto", w1, w2] => protos.push(WordPair::new(*w1, *w2)),
                ["cand", w1, w2, s] => {
                    let score: f64 = s
                        .parse()
                        .ok()
                        .filter(|v: &f64| v.is_finite())
                        .ok_or_else(|| err(format!("bad gold score {s:?}")))?;
                    cands.push(WordPair::rated(*w1, *w2, score));
                }
                _ => return Err(err(format!("unrecognised line {line:?}"))),
            }
        }
        let relation_name = name.ok_or(RelsimError::Format {
            line: 0,
            message: "missing `relation` header".into(),
        })?;
        if protos.is_empty() {
            return Err(RelsimError::Format {
                line: 0,
                message: format!("relation {relation_name} has no prototype pairs"),
            });
        }
        Ok(RelationDataset {
            relation_name,
            prototypical_pairs: protos,
            candidate_pairs: cands,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RelsimError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| RelsimError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }
}

fn unit<T: Copy + Into<f64>>(v: &[T]) -> Result<Vec<f64>, SimilarityError> {
    let n = norm(v);
    if n == 0.0 {
        return Err(SimilarityError::ZeroNorm);
    }
    Ok(v.iter().map(|&x| x.into() / n).collect())
}

fn difference(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Cosine of `(v1 - v2)` and `(v3 - v4)` after unit-normalizing all four.
pub fn pair_relsim<T>(v1: &[T], v2: &[T], v3: &[T], v4: &[T]) -> Result<f64, SimilarityError>
where
    T: Copy + Into<f64>,
{
    let d1 = difference(&unit(v1)?, &unit(v2)?);
    let d2 = difference(&unit(v3)?, &unit(v4)?);
    cosine(&d1, &d2)
}

/// How pairs are looked up in the embedding table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairLookup {
    /// Append `_PP` to the second word of every pair.
    pub suffix_second: bool,
    /// Retry a missing `_PP` form without the suffix.
    pub fallback_unsuffixed: bool,
}

impl Default for PairLookup {
    fn default() -> Self {
        PairLookup {
            suffix_second: true,
            fallback_unsuffixed: true,
        }
    }
}

fn resolve<'t>(
    table: &'t EmbeddingTable,
    word: &str,
    suffix: bool,
    fallback: bool,
) -> Result<&'t [f32], RelsimError> {
    if suffix {
        let suffixed = format!("{word}{PP_SUFFIX}");
        if let Some(v) = table.lookup(&suffixed) {
            return Ok(v);
        }
        if !fallback {
            return Err(RelsimError::Coverage(suffixed));
        }
    }
    table
        .lookup(word)
        .ok_or_else(|| RelsimError::Coverage(word.to_string()))
}

fn pair_vectors<'t>(
    table: &'t EmbeddingTable,
    pair: &WordPair,
    lookup: PairLookup,
) -> Result<(&'t [f32], &'t [f32]), RelsimError> {
    Ok((
        resolve(table, &pair.first, false, lookup.fallback_unsuffixed)?,
        resolve(
            table,
            &pair.second,
            lookup.suffix_second,
            lookup.fallback_unsuffixed,
        )?,
    ))
}

/// Mean relational similarity of `pair` to each prototype.
pub fn mean_proto_similarity(
    pair: &WordPair,
    protos: &[WordPair],
    table: &EmbeddingTable,
    lookup: PairLookup,
) -> Result<f64, RelsimError> {
    if protos.is_empty() {
        return Err(RelsimError::Undefined("no prototype pairs"));
    }
    let (v1, v2) = pair_vectors(table, pair, lookup)?;
    let mut total = 0.0;
    for proto in protos {
        let (v3, v4) = pair_vectors(table, proto, lookup)?;
        total += pair_relsim(v1, v2, v3, v4)?;
    }
    Ok(total / protos.len() as f64)
}

/// 1-based ranks, tied values sharing the average of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i+1 ..= j share their mean
        let rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64, RelsimError> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(RelsimError::Undefined("zero rank variance"));
    }
    Ok(sxy / (sxx.sqrt() * syy.sqrt()))
}

/// Spearman's ρ: Pearson correlation of average-tie ranks.
pub fn spearman_rho(system: &[f64], gold: &[f64]) -> Result<f64, RelsimError> {
    if system.len() != gold.len() {
        return Err(RelsimError::LengthMismatch(system.len(), gold.len()));
    }
    if system.is_empty() {
        return Err(RelsimError::Undefined("empty score lists"));
    }
    if system.iter().chain(gold).any(|v| !v.is_finite()) {
        return Err(RelsimError::Undefined("non-finite score"));
    }
    pearson(&average_ranks(system), &average_ranks(gold))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationRanking {
    pub relation_name: String,
    /// Scored candidates, best first.
    pub ranked: Vec<(WordPair, f64)>,
    /// Candidates that could not be scored, with the reason.
    pub dropped: Vec<(WordPair, String)>,
    pub rho: f64,
}

/// Scores every candidate against the prototypes, ranks them, and correlates
/// the ranking with the gold ratings.
pub fn rank_relation(
    dataset: &RelationDataset,
    table: &EmbeddingTable,
    lookup: PairLookup,
) -> Result<RelationRanking, RelsimError> {
    let mut scored = Vec::new();
    let mut dropped = Vec::new();
    for cand in &dataset.candidate_pairs {
        match mean_proto_similarity(cand, &dataset.prototypical_pairs, table, lookup) {
            Ok(s) => scored.push((cand.clone(), s)),
            Err(e) => dropped.push((cand.clone(), e.to_string())),
        }
    }
    if scored.is_empty() {
        return Err(RelsimError::NothingScorable(dataset.relation_name.clone()));
    }
    let system: Vec<f64> = scored.iter().map(|(_, s)| *s).collect();
    let gold: Vec<f64> = scored
        .iter()
        .map(|(p, _)| p.gold_score.unwrap_or(f64::NAN))
        .collect();
    let rho = spearman_rho(&system, &gold)?;
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(RelationRanking {
        relation_name: dataset.relation_name.clone(),
        ranked: scored,
        dropped,
        rho,
    })
}
