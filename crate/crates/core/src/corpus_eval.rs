//! Corpus documents, accuracy scoring, presets and the ablation harness.
//!
//! Corpora are read from JSON Lines, one document per line:
//!
//! ```json
//! {"doc_id": "wsj_1004",
//!  "sentences": [["Delmed", "said", "."]],
//!  "mentions": [{"mention_id": "m1", "sentence_index": 0, "token_span": [0, 1],
//!                "head_lemma": "delmed", "entity_id": "e1"}],
//!  "entities": {"e1": ["m1"]},
//!  "gold_links": [{"anaphor_id": "m9", "antecedent_entity_id": "e1", "relation": "other"}]}
//! ```
//!
//! `entities` may be omitted, in which case it is derived from the mentions'
//! `entity_id` fields.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding_store::EmbeddingTable;
use crate::np_semantics::{ModifierKinds, NounPhrase, SuffixPolicy};
use crate::resolver::{
    candidate_list, resolve_corpus, Prediction, RepresentationMode, ResolutionConfig, ResolveError,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: malformed document record: {message}")]
    Parse { line: usize, message: String },
    #[error("document {doc_id}: {field}: {message}")]
    Validation {
        doc_id: String,
        field: String,
        message: String,
    },
    #[error("{0}")]
    Cardinality(String),
    #[error(transparent)]
    Resolve(#[from] ResolveError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldLink {
    pub anaphor_id: String,
    pub antecedent_entity_id: String,
    /// Optional relation label (e.g. `set`, `part`, `other`) for breakdowns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub sentences: Vec<Vec<String>>,
    pub mentions: Vec<NounPhrase>,
    #[serde(default)]
    pub entities: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub gold_links: Vec<GoldLink>,
}

impl Document {
    /// Rebuilds `entities` from the mentions' `entity_id` fields, in mention order.
    pub fn derive_entities(&mut self) {
        let mut entities: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for m in &self.mentions {
            if let Some(e) = &m.entity_id {
                entities
                    .entry(e.clone())
                    .or_default()
                    .push(m.mention_id.clone());
            }
        }
        self.entities = entities;
    }

    pub fn entity_members(&self, entity_id: &str) -> &[String] {
        self.entities
            .get(entity_id)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Distinct anaphor ids of the gold links, in first-appearance order.
    pub fn gold_anaphor_ids(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.gold_links
            .iter()
            .map(|l| l.anaphor_id.as_str())
            .filter(|id| seen.insert(*id))
            .collect()
    }

    /// Checks every structural invariant, reporting the first violation.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let fail = |field: String, message: String| CorpusError::Validation {
            doc_id: self.doc_id.clone(),
            field,
            message,
        };
        if self.doc_id.is_empty() {
            return Err(fail("doc_id".into(), "empty document id".into()));
        }
        let mut ids: HashMap<&str, &NounPhrase> = HashMap::new();
        for (i, m) in self.mentions.iter().enumerate() {
            let field = |f: &str| format!("mentions[{i}].{f}");
            if !valid_id(&m.mention_id) {
                return Err(fail(
                    field("mention_id"),
                    format!("invalid id {:?}", m.mention_id),
                ));
            }
            if ids.insert(&m.mention_id, m).is_some() {
                return Err(fail(
                    field("mention_id"),
                    format!("duplicate id {:?}", m.mention_id),
                ));
            }
            if m.head_lemma.is_empty() {
                return Err(fail(field("head_lemma"), "empty head lemma".into()));
            }
            if m.premodifiers.iter().any(|p| p.lemma.is_empty()) {
                return Err(fail(
                    field("premodifiers"),
                    "empty premodifier lemma".into(),
                ));
            }
            if let Some(post) = &m.of_postmodifier {
                if post.head_lemma.is_empty() {
                    return Err(fail(
                        field("of_postmodifier.head_lemma"),
                        "empty head lemma".into(),
                    ));
                }
            }
            let Some(sentence) = self.sentences.get(m.sentence_index) else {
                return Err(fail(
                    field("sentence_index"),
                    format!("sentence {} does not exist", m.sentence_index),
                ));
            };
            let (start, end) = m.token_span;
            if start >= end || end > sentence.len() {
                return Err(fail(
                    field("token_span"),
                    format!(
                        "span [{start}, {end}) outside sentence of {} tokens",
                        sentence.len()
                    ),
                ));
            }
            if m.is_comparative_anaphor && !m.is_bridging_anaphor {
                return Err(fail(
                    field("is_comparative_anaphor"),
                    "comparative anaphor not marked as bridging anaphor".into(),
                ));
            }
            if let Some(e) = &m.entity_id {
                if !self
                    .entities
                    .get(e)
                    .is_some_and(|ms| ms.contains(&m.mention_id))
                {
                    return Err(fail(
                        field("entity_id"),
                        format!("mention not listed under entity {e:?}"),
                    ));
                }
            }
        }
        let mut listed: HashSet<&str> = HashSet::new();
        for (e, members) in &self.entities {
            if !valid_id(e) {
                return Err(fail("entities".into(), format!("invalid entity id {e:?}")));
            }
            for id in members {
                let field = format!("entities.{e}");
                let Some(m) = ids.get(id.as_str()) else {
                    return Err(fail(field, format!("unknown mention {id:?}")));
                };
                if m.entity_id.as_deref() != Some(e.as_str()) {
                    return Err(fail(
                        field,
                        format!("mention {id:?} carries a different entity_id"),
                    ));
                }
                if !listed.insert(id) {
                    return Err(fail(field, format!("mention {id:?} listed twice")));
                }
            }
        }
        for (i, link) in self.gold_links.iter().enumerate() {
            let field = |f: &str| format!("gold_links[{i}].{f}");
            match ids.get(link.anaphor_id.as_str()) {
                None => {
                    return Err(fail(
                        field("anaphor_id"),
                        format!("unknown mention {:?}", link.anaphor_id),
                    ))
                }
                Some(m) if !m.is_bridging_anaphor => {
                    return Err(fail(
                        field("anaphor_id"),
                        format!("mention {:?} is not a bridging anaphor", link.anaphor_id),
                    ))
                }
                Some(_) => {}
            }
            if !self.entities.contains_key(&link.antecedent_entity_id) {
                return Err(fail(
                    field("antecedent_entity_id"),
                    format!("unknown entity {:?}", link.antecedent_entity_id),
                ));
            }
        }
        Ok(())
    }
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && !id.contains(['\t', '\n', '\r'])
}

/// Reads and validates a JSON Lines corpus.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Document>, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_corpus(BufReader::new(file)).map_err(|e| match e {
        CorpusError::Io { source, .. } => CorpusError::Io {
            path: path.display().to_string(),
            source,
        },
        other => other,
    })
}

pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<Document>, CorpusError> {
    let mut docs = Vec::new();
    let mut doc_ids = HashSet::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: "<reader>".into(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let mut doc: Document = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            line: n + 1,
            message: e.to_string(),
        })?;
        if doc.entities.is_empty() {
            doc.derive_entities();
        }
        doc.validate()?;
        if !doc_ids.insert(doc.doc_id.clone()) {
            return Err(CorpusError::Validation {
                doc_id: doc.doc_id,
                field: "doc_id".into(),
                message: "duplicate document id".into(),
            });
        }
        docs.push(doc);
    }
    Ok(docs)
}

pub fn write_corpus<W: Write>(out: &mut W, docs: &[Document]) -> io::Result<()> {
    for d in docs {
        serde_json::to_writer(&mut *out, d)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: String,
    pub resolved_count: usize,
    pub total_anaphors: usize,
    pub accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_relation_accuracy: Option<BTreeMap<String, f64>>,
}

impl ExperimentReport {
    pub fn accuracy_percent(&self) -> f64 {
        self.accuracy * 100.0
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Entity-level accuracy: a prediction counts when its entity is a gold
/// antecedent entity of the anaphor. Absent predictions count as wrong.
pub fn score(
    predictions: &[Prediction],
    docs: &[Document],
    config: &str,
) -> Result<ExperimentReport, CorpusError> {
    let mut by_key: HashMap<(&str, &str), &Prediction> = HashMap::new();
    for p in predictions {
        if by_key.insert((&p.doc_id, &p.anaphor_id), p).is_some() {
            return Err(CorpusError::Cardinality(format!(
                "duplicate prediction for {}/{}",
                p.doc_id, p.anaphor_id
            )));
        }
    }
    let mut total = 0usize;
    let mut correct = 0usize;
    let mut relations: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for doc in docs {
        for anaphor in doc.gold_anaphor_ids() {
            total += 1;
            let Some(p) = by_key.remove(&(doc.doc_id.as_str(), anaphor)) else {
                return Err(CorpusError::Cardinality(format!(
                    "no prediction for gold anaphor {}/{anaphor}",
                    doc.doc_id
                )));
            };
            let links: Vec<&GoldLink> = doc
                .gold_links
                .iter()
                .filter(|l| l.anaphor_id == anaphor)
                .collect();
            let hit = p
                .predicted_entity_id
                .as_deref()
                .is_some_and(|e| links.iter().any(|l| l.antecedent_entity_id == e));
            if hit {
                correct += 1;
            }
            if let Some(rel) = links.iter().find_map(|l| l.relation.as_ref()) {
                let entry = relations.entry(rel.clone()).or_default();
                entry.0 += usize::from(hit);
                entry.1 += 1;
            }
        }
    }
    if let Some(((d, a), _)) = by_key.into_iter().next() {
        return Err(CorpusError::Cardinality(format!(
            "prediction for {d}/{a} does not match any gold anaphor"
        )));
    }
    let per_relation_accuracy = (!relations.is_empty()).then(|| {
        relations
            .into_iter()
            .map(|(k, (c, t))| (k, ratio(c, t)))
            .collect()
    });
    Ok(ExperimentReport {
        config: config.to_string(),
        resolved_count: correct,
        total_anaphors: total,
        accuracy: ratio(correct, total),
        per_relation_accuracy,
    })
}

/// Resolves every document with `config` and scores the result.
pub fn run_experiment(
    docs: &[Document],
    table: &EmbeddingTable,
    config: &ResolutionConfig,
    jobs: usize,
) -> Result<ExperimentReport, CorpusError> {
    let predictions = resolve_corpus(docs, table, config, jobs)?;
    score(&predictions, docs, &config.to_string())
}

/// Copies of `docs` whose comparative anaphors are no longer scored. Their
/// mentions stay in the document and can still be candidates.
pub fn without_comparative_anaphors(docs: &[Document]) -> Vec<Document> {
    docs.iter()
        .map(|doc| {
            let comparative: HashSet<&str> = doc
                .mentions
                .iter()
                .filter(|m| m.is_comparative_anaphor)
                .map(|m| m.mention_id.as_str())
                .collect();
            let mut out = doc.clone();
            out.gold_links
                .retain(|l| !comparative.contains(l.anaphor_id.as_str()));
            out
        })
        .collect()
}

/// Modifier subsets compared in the modifier ablation, with display labels.
pub fn standard_ablation_subsets() -> Vec<(&'static str, ModifierKinds)> {
    vec![
        ("head", ModifierKinds::NONE),
        ("+all", ModifierKinds::ALL),
        ("+noun", ModifierKinds::NOUN),
        ("+adjective", ModifierKinds::ADJECTIVE),
        ("+participle", ModifierKinds::PARTICIPLE),
        (
            "+noun&adjective",
            ModifierKinds::NOUN.union(ModifierKinds::ADJECTIVE),
        ),
        (
            "+noun&participle",
            ModifierKinds::NOUN.union(ModifierKinds::PARTICIPLE),
        ),
        (
            "+adjective&participle",
            ModifierKinds::ADJECTIVE.union(ModifierKinds::PARTICIPLE),
        ),
    ]
}

/// One report per modifier subset, everything else taken from `base`.
/// A head-only base is switched to head+modifiers so the subset takes effect.
pub fn ablation_run(
    docs: &[Document],
    table: &EmbeddingTable,
    base: &ResolutionConfig,
    modifier_subsets: &[ModifierKinds],
    jobs: usize,
) -> Result<Vec<ExperimentReport>, CorpusError> {
    modifier_subsets
        .iter()
        .map(|&kinds| {
            let mut config = base.clone();
            config.modifier_kinds = kinds;
            if config.representation_mode == RepresentationMode::HeadOnly {
                config.representation_mode = RepresentationMode::HeadPlusModifiers;
            }
            run_experiment(docs, table, &config, jobs)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    IsnotesHead,
    IsnotesFull,
    IsnotesMixed,
    Bashi,
    ArrauRst,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::IsnotesHead,
        Preset::IsnotesFull,
        Preset::IsnotesMixed,
        Preset::Bashi,
        Preset::ArrauRst,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::IsnotesHead => "isnotes_head",
            Preset::IsnotesFull => "isnotes_full",
            Preset::IsnotesMixed => "isnotes_mixed",
            Preset::Bashi => "bashi",
            Preset::ArrauRst => "arrau_rst",
        }
    }

    pub fn config(self) -> ResolutionConfig {
        let isnotes = ResolutionConfig::default();
        match self {
            Preset::IsnotesHead => ResolutionConfig {
                representation_mode: RepresentationMode::HeadOnly,
                ..isnotes
            },
            Preset::IsnotesFull => isnotes,
            Preset::IsnotesMixed => ResolutionConfig {
                representation_mode: RepresentationMode::MixedAnaphorFullCandidateHead,
                ..isnotes
            },
            Preset::Bashi => ResolutionConfig {
                include_first_sentence: false,
                suffix_policy: SuffixPolicy::Bashi,
                ..isnotes
            },
            Preset::ArrauRst => ResolutionConfig {
                window_sentences: 10,
                include_first_sentence: false,
                suffix_policy: SuffixPolicy::Arrau,
                ..isnotes
            },
        }
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown preset {s:?}"))
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn preset_config(name: &str) -> Result<ResolutionConfig, String> {
    name.parse::<Preset>().map(Preset::config)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Coverage {
    pub covered: usize,
    pub total: usize,
}

impl Coverage {
    pub fn fraction(&self) -> f64 {
        ratio(self.covered, self.total)
    }
}

/// How many gold anaphors have a gold antecedent entity among their candidates.
pub fn candidate_coverage(
    docs: &[Document],
    config: &ResolutionConfig,
) -> Result<Coverage, CorpusError> {
    let mut cov = Coverage::default();
    for doc in docs {
        let by_id: HashMap<&str, &NounPhrase> = doc
            .mentions
            .iter()
            .map(|m| (m.mention_id.as_str(), m))
            .collect();
        for anaphor_id in doc.gold_anaphor_ids() {
            cov.total += 1;
            let anaphor = by_id[anaphor_id];
            let cands = candidate_list(doc, anaphor, config)?;
            let gold: HashSet<&str> = doc
                .gold_links
                .iter()
                .filter(|l| l.anaphor_id == anaphor_id)
                .map(|l| l.antecedent_entity_id.as_str())
                .collect();
            let reached = cands.candidates.iter().any(|id| {
                by_id[id.as_str()]
                    .entity_id
                    .as_deref()
                    .is_some_and(|e| gold.contains(e))
            });
            cov.covered += usize::from(reached);
        }
    }
    Ok(cov)
}

/// Aligned plain-text table of reports.
pub fn format_reports(rows: &[(String, ExperimentReport)]) -> String {
    let width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max(6);
    let mut out = format!("{:<width$}  {:>8}  {:>9}\n", "system", "acc", "correct");
    for (label, r) in rows {
        out.push_str(&format!(
            "{:<width$}  {:>8.2}  {:>4}/{:<4}\n",
            label,
            r.accuracy_percent(),
            r.resolved_count,
            r.total_anaphors
        ));
        if let Some(per) = &r.per_relation_accuracy {
            for (rel, acc) in per {
                out.push_str(&format!(
                    "{:<width$}  {:>8.2}\n",
                    format!("  {rel}"),
                    acc * 100.0
                ));
            }
        }
    }
    out
}
