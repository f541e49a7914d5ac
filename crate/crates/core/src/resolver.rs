//! Deterministic antecedent selection for bridging anaphors.
//!
//! For each gold anaphor the pipeline is: build the candidate window, expand
//! candidates to every earlier mention of their entities, represent each
//! mention as the mean vector of its content words, and pick the candidate
//! with the highest cosine to the anaphor. Exact score ties go to the
//! candidate closest to the anaphor.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus_eval::Document;
use crate::embedding_store::{cosine, EmbeddingTable, WordVector};
use crate::np_semantics::{
    apply_suffix, collect_content_words, np_vector, ContentWordSet, MentionRole, ModifierKinds,
    NounPhrase, SuffixPolicy,
};

#[derive(Debug, Error)]
pub enum ResolveError {
    #[error("document {doc_id}: no mention with id {mention_id:?}")]
    UnknownMention { doc_id: String, mention_id: String },
    #[error("could not build worker pool: {0}")]
    Pool(String),
    #[error("predictions line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepresentationMode {
    HeadOnly,
    HeadPlusModifiers,
    /// Anaphor with modifiers, candidates by head alone.
    MixedAnaphorFullCandidateHead,
}

impl FromStr for RepresentationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "head_only" => Ok(RepresentationMode::HeadOnly),
            "head_plus_modifiers" => Ok(RepresentationMode::HeadPlusModifiers),
            "mixed_anaphor_full_candidate_head" | "mixed" => {
                Ok(RepresentationMode::MixedAnaphorFullCandidateHead)
            }
            other => Err(format!("unknown representation mode {other:?}")),
        }
    }
}

impl fmt::Display for RepresentationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RepresentationMode::HeadOnly => "head_only",
            RepresentationMode::HeadPlusModifiers => "head_plus_modifiers",
            RepresentationMode::MixedAnaphorFullCandidateHead => {
                "mixed_anaphor_full_candidate_head"
            }
        })
    }
}

/// Every knob of the resolver. `Default` is the ISNotes head+modifiers setup.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionConfig {
    /// How many sentences before the anaphor's own sentence are searched.
    pub window_sentences: usize,
    pub include_first_sentence: bool,
    pub suffix_policy: SuffixPolicy,
    pub representation_mode: RepresentationMode,
    pub modifier_kinds: ModifierKinds,
    pub include_of_postmodifier: bool,
    pub exclude_time_candidates: bool,
    pub exclude_bridging_anaphor_candidates: bool,
    pub entity_expansion: bool,
    pub fallback_unsuffixed: bool,
}

impl Default for ResolutionConfig {
    fn default() -> Self {
        ResolutionConfig {
            window_sentences: 2,
            include_first_sentence: true,
            suffix_policy: SuffixPolicy::Isnotes,
            representation_mode: RepresentationMode::HeadPlusModifiers,
            modifier_kinds: ModifierKinds::ALL,
            include_of_postmodifier: true,
            exclude_time_candidates: true,
            exclude_bridging_anaphor_candidates: true,
            entity_expansion: true,
            fallback_unsuffixed: true,
        }
    }
}

impl fmt::Display for ResolutionConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "window={} first_sentence={} suffix={} mode={} modifiers={} of_post={} \
             excl_time={} excl_anaphors={} expansion={} fallback={}",
            self.window_sentences,
            self.include_first_sentence,
            self.suffix_policy,
            self.representation_mode,
            self.modifier_kinds,
            self.include_of_postmodifier,
            self.exclude_time_candidates,
            self.exclude_bridging_anaphor_candidates,
            self.entity_expansion,
            self.fallback_unsuffixed,
        )
    }
}

impl ResolutionConfig {
    /// Modifier kinds used for a mention in the given role.
    fn kinds_for(&self, role: MentionRole) -> ModifierKinds {
        match (self.representation_mode, role) {
            (RepresentationMode::HeadOnly, _) => ModifierKinds::NONE,
            (RepresentationMode::HeadPlusModifiers, _) => self.modifier_kinds,
            (RepresentationMode::MixedAnaphorFullCandidateHead, MentionRole::Anaphor) => {
                self.modifier_kinds
            }
            (RepresentationMode::MixedAnaphorFullCandidateHead, MentionRole::Candidate) => {
                ModifierKinds::NONE
            }
        }
    }

    /// Lookup keys representing `np` in `role`, suffix applied.
    pub fn content_words(&self, np: &NounPhrase, role: MentionRole) -> ContentWordSet {
        let words = collect_content_words(np, self.kinds_for(role), self.include_of_postmodifier);
        apply_suffix(words, np, self.suffix_policy, role)
    }

    pub fn mention_vector(
        &self,
        table: &EmbeddingTable,
        np: &NounPhrase,
        role: MentionRole,
    ) -> Option<WordVector> {
        np_vector(
            table,
            &self.content_words(np, role),
            self.fallback_unsuffixed,
        )
    }
}

/// Antecedent candidates of one anaphor, closest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateList {
    pub anaphor_id: String,
    pub candidates: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub doc_id: String,
    pub anaphor_id: String,
    pub predicted_mention_id: Option<String>,
    pub predicted_entity_id: Option<String>,
    pub score: Option<f64>,
}

impl Prediction {
    fn absent(doc_id: &str, anaphor_id: &str) -> Self {
        Prediction {
            doc_id: doc_id.to_string(),
            anaphor_id: anaphor_id.to_string(),
            predicted_mention_id: None,
            predicted_entity_id: None,
            score: None,
        }
    }
}

/// True when `candidate` ends before `anaphor` starts.
pub fn precedes(candidate: &NounPhrase, anaphor: &NounPhrase) -> bool {
    candidate.sentence_index < anaphor.sentence_index
        || (candidate.sentence_index == anaphor.sentence_index
            && candidate.token_span.1 <= anaphor.token_span.0)
}

/// Orders mentions closest-first relative to a later anaphor: later sentence,
/// then later end, then later start, then mention id.
fn closeness(a: &NounPhrase, b: &NounPhrase) -> Ordering {
    (b.sentence_index, b.token_span.1, b.token_span.0)
        .cmp(&(a.sentence_index, a.token_span.1, a.token_span.0))
        .then_with(|| a.mention_id.cmp(&b.mention_id))
}

struct MentionIndex<'d> {
    doc: &'d Document,
    by_id: HashMap<&'d str, &'d NounPhrase>,
}

impl<'d> MentionIndex<'d> {
    fn new(doc: &'d Document) -> Self {
        let by_id = doc
            .mentions
            .iter()
            .map(|m| (m.mention_id.as_str(), m))
            .collect();
        MentionIndex { doc, by_id }
    }

    fn get(&self, id: &str) -> Result<&'d NounPhrase, ResolveError> {
        self.by_id
            .get(id)
            .copied()
            .ok_or_else(|| ResolveError::UnknownMention {
                doc_id: self.doc.doc_id.clone(),
                mention_id: id.to_string(),
            })
    }

    fn sort_closest_first(&self, ids: &mut Vec<String>) -> Result<(), ResolveError> {
        let mut ms = ids
            .iter()
            .map(|id| self.get(id))
            .collect::<Result<Vec<_>, _>>()?;
        ms.sort_by(|a, b| closeness(a, b));
        ms.dedup_by(|a, b| a.mention_id == b.mention_id);
        *ids = ms.into_iter().map(|m| m.mention_id.clone()).collect();
        Ok(())
    }
}

/// Mentions preceding the anaphor within the sentence window (plus the first
/// sentence when configured), minus the configured exclusions.
pub fn build_candidates(
    doc: &Document,
    anaphor: &NounPhrase,
    config: &ResolutionConfig,
) -> Result<CandidateList, ResolveError> {
    let index = MentionIndex::new(doc);
    build_with_index(&index, anaphor, config)
}

fn build_with_index(
    index: &MentionIndex<'_>,
    anaphor: &NounPhrase,
    config: &ResolutionConfig,
) -> Result<CandidateList, ResolveError> {
    index.get(&anaphor.mention_id)?;
    let in_window = |m: &NounPhrase| {
        anaphor.sentence_index - m.sentence_index <= config.window_sentences
            || (config.include_first_sentence && m.sentence_index == 0)
    };
    let mut candidates: Vec<&NounPhrase> = index
        .doc
        .mentions
        .iter()
        .filter(|m| m.mention_id != anaphor.mention_id && precedes(m, anaphor))
        .filter(|m| in_window(m))
        .filter(|m| !(config.exclude_bridging_anaphor_candidates && m.is_bridging_anaphor))
        .filter(|m| !(config.exclude_time_candidates && m.is_time() && !anaphor.is_time()))
        .collect();
    candidates.sort_by(|a, b| closeness(a, b));
    candidates.dedup_by(|a, b| a.mention_id == b.mention_id);
    Ok(CandidateList {
        anaphor_id: anaphor.mention_id.clone(),
        candidates: candidates
            .into_iter()
            .map(|m| m.mention_id.clone())
            .collect(),
    })
}

/// Adds every earlier mention of each candidate's entity.
pub fn expand_entities(
    cands: &CandidateList,
    doc: &Document,
) -> Result<CandidateList, ResolveError> {
    let index = MentionIndex::new(doc);
    expand_with_index(&index, cands)
}

fn expand_with_index(
    index: &MentionIndex<'_>,
    cands: &CandidateList,
) -> Result<CandidateList, ResolveError> {
    let anaphor = index.get(&cands.anaphor_id)?;
    let mut ids: Vec<String> = cands.candidates.clone();
    let mut seen: HashSet<String> = ids.iter().cloned().collect();
    let mut entities: Vec<&str> = Vec::new();
    for id in &cands.candidates {
        if let Some(e) = index.get(id)?.entity_id.as_deref() {
            if !entities.contains(&e) {
                entities.push(e);
            }
        }
    }
    for entity in entities {
        for member in index.doc.entity_members(entity) {
            let m = index.get(member)?;
            if m.mention_id != anaphor.mention_id
                && precedes(m, anaphor)
                && seen.insert(m.mention_id.clone())
            {
                ids.push(m.mention_id.clone());
            }
        }
    }
    index.sort_closest_first(&mut ids)?;
    Ok(CandidateList {
        anaphor_id: cands.anaphor_id.clone(),
        candidates: ids,
    })
}

/// Highest-cosine candidate; exact ties go to the candidate closest to the
/// anaphor. The order of `cands.candidates` does not matter.
pub fn select_antecedent(
    anaphor_vec: &WordVector,
    cands: &CandidateList,
    doc: &Document,
    table: &EmbeddingTable,
    config: &ResolutionConfig,
) -> Result<Prediction, ResolveError> {
    let index = MentionIndex::new(doc);
    select_with_index(&index, anaphor_vec, cands, table, config)
}

fn select_with_index(
    index: &MentionIndex<'_>,
    anaphor_vec: &WordVector,
    cands: &CandidateList,
    table: &EmbeddingTable,
    config: &ResolutionConfig,
) -> Result<Prediction, ResolveError> {
    let mut best: Option<(f64, &NounPhrase)> = None;
    for id in &cands.candidates {
        let m = index.get(id)?;
        let Some(v) = config.mention_vector(table, m, MentionRole::Candidate) else {
            continue;
        };
        let Ok(score) = cosine(anaphor_vec.as_slice(), v.as_slice()) else {
            continue;
        };
        let better = match best {
            None => true,
            Some((s, b)) => score > s || (score == s && closeness(m, b) == Ordering::Less),
        };
        if better {
            best = Some((score, m));
        }
    }
    let doc_id = &index.doc.doc_id;
    Ok(match best {
        None => Prediction::absent(doc_id, &cands.anaphor_id),
        Some((score, m)) => Prediction {
            doc_id: doc_id.clone(),
            anaphor_id: cands.anaphor_id.clone(),
            predicted_mention_id: Some(m.mention_id.clone()),
            predicted_entity_id: m.entity_id.clone(),
            score: Some(score),
        },
    })
}

fn candidates_with_index(
    index: &MentionIndex<'_>,
    anaphor: &NounPhrase,
    config: &ResolutionConfig,
) -> Result<CandidateList, ResolveError> {
    let cands = build_with_index(index, anaphor, config)?;
    if config.entity_expansion {
        expand_with_index(index, &cands)
    } else {
        Ok(cands)
    }
}

/// Candidate list for `anaphor` with entity expansion applied when enabled.
pub fn candidate_list(
    doc: &Document,
    anaphor: &NounPhrase,
    config: &ResolutionConfig,
) -> Result<CandidateList, ResolveError> {
    candidates_with_index(&MentionIndex::new(doc), anaphor, config)
}

/// One prediction per gold anaphor, in gold-link order.
pub fn resolve_document(
    doc: &Document,
    table: &EmbeddingTable,
    config: &ResolutionConfig,
) -> Result<Vec<Prediction>, ResolveError> {
    let index = MentionIndex::new(doc);
    doc.gold_anaphor_ids()
        .into_iter()
        .map(|id| {
            let anaphor = index.get(id)?;
            let Some(anaphor_vec) = config.mention_vector(table, anaphor, MentionRole::Anaphor)
            else {
                return Ok(Prediction::absent(&doc.doc_id, id));
            };
            let cands = candidates_with_index(&index, anaphor, config)?;
            select_with_index(&index, &anaphor_vec, &cands, table, config)
        })
        .collect()
}

/// Resolves every document, `jobs` at a time. Output order follows `docs`
/// regardless of `jobs`.
pub fn resolve_corpus(
    docs: &[Document],
    table: &EmbeddingTable,
    config: &ResolutionConfig,
    jobs: usize,
) -> Result<Vec<Prediction>, ResolveError> {
    let run = || -> Result<Vec<Prediction>, ResolveError> {
        let per_doc: Vec<Vec<Prediction>> = docs
            .par_iter()
            .map(|d| resolve_document(d, table, config))
            .collect::<Result<_, _>>()?;
        Ok(per_doc.into_iter().flatten().collect())
    };
    if jobs <= 1 {
        return docs
            .iter()
            .map(|d| resolve_document(d, table, config))
            .collect::<Result<Vec<_>, _>>()
            .map(|v| v.into_iter().flatten().collect());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| ResolveError::Pool(e.to_string()))?
        .install(run)
}

const PREDICTION_HEADER: &str =
    "doc_id\tanaphor_id\tpredicted_mention_id\tpredicted_entity_id\tscore";

/// Tab-separated, one prediction per line after a header; absent values are
/// empty fields.
pub fn write_predictions<W: Write>(out: &mut W, predictions: &[Prediction]) -> io::Result<()> {
    writeln!(out, "{PREDICTION_HEADER}")?;
    for p in predictions {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            p.doc_id,
            p.anaphor_id,
            p.predicted_mention_id.as_deref().unwrap_or(""),
            p.predicted_entity_id.as_deref().unwrap_or(""),
            p.score.map(|s| s.to_string()).unwrap_or_default(),
        )?;
    }
    Ok(())
}

pub fn read_predictions<R: BufRead>(reader: R) -> Result<Vec<Prediction>, ResolveError> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if n == 0 && line == PREDICTION_HEADER {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let err = |message: String| ResolveError::Format {
            line: n + 1,
            message,
        };
        if fields.len() != 5 {
            return Err(err(format!("expected 5 fields, found {}", fields.len())));
        }
        let opt = |s: &str| (!s.is_empty()).then(|| s.to_string());
        let score = match fields[4] {
            "" => None,
            s => Some(
                s.parse::<f64>()
                    .map_err(|_| err(format!("bad score {s:?}")))?,
            ),
        };
        out.push(Prediction {
            doc_id: fields[0].to_string(),
            anaphor_id: fields[1].to_string(),
            predicted_mention_id: opt(fields[2]),
            predicted_entity_id: opt(fields[3]),
            score,
        });
    }
    Ok(out)
}
