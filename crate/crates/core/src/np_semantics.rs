//! Noun-phrase meaning: content words, the `_PP` suffix rule, and the mean
//! vector used for scoring. Also the head/modifier pair extraction used to
//! build PP-context training data.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embedding_store::{EmbeddingTable, WordVector};

pub const PP_SUFFIX: &str = "_PP";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModifierKind {
    CommonNoun,
    Adjective,
    EdParticiple,
    IngParticiple,
}

impl ModifierKind {
    fn bit(self) -> u8 {
        match self {
            ModifierKind::CommonNoun => 1,
            ModifierKind::Adjective => 2,
            ModifierKind::EdParticiple => 4,
            ModifierKind::IngParticiple => 8,
        }
    }
}

/// A subset of [`ModifierKind`]s.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ModifierKinds(u8);

impl ModifierKinds {
    pub const NONE: ModifierKinds = ModifierKinds(0);
    pub const NOUN: ModifierKinds = ModifierKinds(1);
    pub const ADJECTIVE: ModifierKinds = ModifierKinds(2);
    pub const PARTICIPLE: ModifierKinds = ModifierKinds(4 | 8);
    pub const ALL: ModifierKinds = ModifierKinds(1 | 2 | 4 | 8);

    pub fn contains(self, kind: ModifierKind) -> bool {
        self.0 & kind.bit() != 0
    }

    pub fn with(self, kind: ModifierKind) -> Self {
        ModifierKinds(self.0 | kind.bit())
    }

    pub fn union(self, other: ModifierKinds) -> Self {
        ModifierKinds(self.0 | other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for ModifierKinds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("none");
        }
        let names = [
            (ModifierKind::CommonNoun, "noun"),
            (ModifierKind::Adjective, "adjective"),
            (ModifierKind::EdParticiple, "ed"),
            (ModifierKind::IngParticiple, "ing"),
        ];
        let parts: Vec<&str> = names
            .iter()
            .filter(|(k, _)| self.contains(*k))
            .map(|(_, n)| *n)
            .collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for ModifierKinds {
    type Err = String;

    /// Comma-separated list of `noun`, `adjective`, `participle`, `ed`, `ing`,
    /// or one of the shorthands `all` / `none`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut kinds = ModifierKinds::NONE;
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            kinds = kinds.union(match part {
                "none" => ModifierKinds::NONE,
                "all" => ModifierKinds::ALL,
                "noun" | "common_noun" => ModifierKinds::NOUN,
                "adjective" | "adj" => ModifierKinds::ADJECTIVE,
                "participle" => ModifierKinds::PARTICIPLE,
                "ed" | "ed_participle" => ModifierKinds::NONE.with(ModifierKind::EdParticiple),
                "ing" | "ing_participle" => ModifierKinds::NONE.with(ModifierKind::IngParticiple),
                other => return Err(format!("unknown modifier kind {other:?}")),
            });
        }
        Ok(kinds)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Premodifier {
    pub lemma: String,
    pub kind: ModifierKind,
}

impl Premodifier {
    pub fn new(lemma: impl Into<String>, kind: ModifierKind) -> Self {
        Premodifier {
            lemma: lemma.into(),
            kind,
        }
    }
}

/// The NP attached through "of" (the `segregation` in "policies of racial
/// segregation").
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OfPostmodifier {
    pub head_lemma: String,
    #[serde(default)]
    pub premodifiers: Vec<Premodifier>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemanticType {
    Time,
    #[default]
    Other,
}

/// An annotated mention. Lemmas and POS-derived modifier kinds come from the
/// corpus; nothing here is computed from raw text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NounPhrase {
    pub mention_id: String,
    pub sentence_index: usize,
    /// Token offsets `[start, end)` within the sentence.
    pub token_span: (usize, usize),
    pub head_lemma: String,
    #[serde(default)]
    pub premodifiers: Vec<Premodifier>,
    #[serde(default)]
    pub of_postmodifier: Option<OfPostmodifier>,
    #[serde(default)]
    pub semantic_type: SemanticType,
    #[serde(default)]
    pub is_bridging_anaphor: bool,
    #[serde(default)]
    pub is_comparative_anaphor: bool,
    #[serde(default)]
    pub entity_id: Option<String>,
}

impl NounPhrase {
    /// A bare mention with no modifiers, typed `other`.
    pub fn new(
        mention_id: impl Into<String>,
        sentence_index: usize,
        token_span: (usize, usize),
        head_lemma: impl Into<String>,
    ) -> Self {
        NounPhrase {
            mention_id: mention_id.into(),
            sentence_index,
            token_span,
            head_lemma: head_lemma.into(),
            premodifiers: Vec::new(),
            of_postmodifier: None,
            semantic_type: SemanticType::Other,
            is_bridging_anaphor: false,
            is_comparative_anaphor: false,
            entity_id: None,
        }
    }

    pub fn is_time(&self) -> bool {
        self.semantic_type == SemanticType::Time
    }
}

/// The list of lookup keys whose vectors are averaged into an NP vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentWordSet(pub Vec<String>);

impl ContentWordSet {
    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Selected premodifiers in surface order, then the head.
///
/// The "of" postmodifier counts as a noun modification: its selected
/// premodifiers and its head are appended only when `include_of_postmodifier`
/// is set and `modifier_kinds` contains common nouns. An empty `modifier_kinds`
/// therefore always yields the head alone.
pub fn collect_content_words(
    np: &NounPhrase,
    modifier_kinds: ModifierKinds,
    include_of_postmodifier: bool,
) -> ContentWordSet {
    let selected = |mods: &[Premodifier]| -> Vec<String> {
        mods.iter()
            .filter(|m| modifier_kinds.contains(m.kind) && !m.lemma.is_empty())
            .map(|m| m.lemma.clone())
            .collect()
    };
    let mut words = selected(&np.premodifiers);
    words.push(np.head_lemma.clone());
    if include_of_postmodifier && modifier_kinds.contains(ModifierKind::CommonNoun) {
        if let Some(post) = &np.of_postmodifier {
            words.extend(selected(&post.premodifiers));
            words.push(post.head_lemma.clone());
        }
    }
    ContentWordSet(words)
}

/// Corpus-specific rule for when an anaphor's content words get `_PP`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuffixPolicy {
    /// Suffix bridging anaphors that are not time expressions.
    Isnotes,
    /// As `Isnotes`, but comparative anaphors are left unsuffixed.
    Bashi,
    /// Never suffix.
    Arrau,
}

impl FromStr for SuffixPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "isnotes" => Ok(SuffixPolicy::Isnotes),
            "bashi" => Ok(SuffixPolicy::Bashi),
            "arrau" | "never" => Ok(SuffixPolicy::Arrau),
            other => Err(format!("unknown suffix policy {other:?}")),
        }
    }
}

impl fmt::Display for SuffixPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SuffixPolicy::Isnotes => "isnotes",
            SuffixPolicy::Bashi => "bashi",
            SuffixPolicy::Arrau => "arrau",
        })
    }
}

/// Whether a mention is being represented as the anaphor or as a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MentionRole {
    Anaphor,
    Candidate,
}

pub fn suffix_applies(np: &NounPhrase, policy: SuffixPolicy, role: MentionRole) -> bool {
    if role == MentionRole::Candidate || !np.is_bridging_anaphor || np.is_time() {
        return false;
    }
    match policy {
        SuffixPolicy::Isnotes => true,
        SuffixPolicy::Bashi => !np.is_comparative_anaphor,
        SuffixPolicy::Arrau => false,
    }
}

/// Appends `_PP` to every token when the policy calls for it. Tokens that
/// already carry the suffix are left alone.
pub fn apply_suffix(
    words: ContentWordSet,
    np: &NounPhrase,
    policy: SuffixPolicy,
    role: MentionRole,
) -> ContentWordSet {
    if !suffix_applies(np, policy, role) {
        return words;
    }
    ContentWordSet(
        words
            .0
            .into_iter()
            .map(|w| {
                if w.ends_with(PP_SUFFIX) {
                    w
                } else {
                    w + PP_SUFFIX
                }
            })
            .collect(),
    )
}

/// Mean of the vectors of the tokens that resolve in `table`.
///
/// A `_PP` token missing from the table is retried without the suffix when
/// `fallback_unsuffixed` is set. Unresolved tokens are dropped from the mean;
/// `None` when nothing resolves.
pub fn np_vector(
    table: &EmbeddingTable,
    words: &ContentWordSet,
    fallback_unsuffixed: bool,
) -> Option<WordVector> {
    let mut sum = vec![0.0f64; table.dim()];
    let mut found = 0usize;
    for token in words.tokens() {
        let vector = table.lookup(token).or_else(|| {
            if !fallback_unsuffixed {
                return None;
            }
            token
                .strip_suffix(PP_SUFFIX)
                .and_then(|bare| table.lookup(bare))
        });
        if let Some(v) = vector {
            for (s, &x) in sum.iter_mut().zip(v) {
                *s += f64::from(x);
            }
            found += 1;
        }
    }
    if found == 0 {
        return None;
    }
    let n = found as f64;
    Some(WordVector::new(sum.into_iter().map(|s| s / n).collect()))
}

/// Syntactic shape of an NP as seen by the pair extractor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NpStructure {
    /// `X preposition Y`, e.g. "travelers in the train station".
    Prepositional {
        head: String,
        preposition: String,
        object_head: String,
    },
    /// `Y 's X`, e.g. "the company's new appointed chairman".
    Possessive {
        possessor_head: String,
        head: String,
    },
    /// Neither structure.
    Bare { head: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NounPair {
    pub left: String,
    pub right: String,
}

impl fmt::Display for NounPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}", self.left, self.right)
    }
}

/// The NP head goes on the left with `_PP`, the noun modifier on the right.
pub fn extract_noun_pairs(np: &NpStructure) -> Option<NounPair> {
    let (head, modifier) = match np {
        NpStructure::Prepositional {
            head, object_head, ..
        } => (head, object_head),
        NpStructure::Possessive {
            possessor_head,
            head,
        } => (head, possessor_head),
        NpStructure::Bare { .. } => return None,
    };
    if head.is_empty() || modifier.is_empty() {
        return None;
    }
    Some(NounPair {
        left: format!("{head}{PP_SUFFIX}"),
        right: modifier.clone(),
    })
}

impl FromStr for NpStructure {
    type Err = String;

    /// Head-level notation, whitespace separated:
    /// `head prep object` (prepositional), `possessor 's head` (possessive),
    /// or a single `head` (bare).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let fields: Vec<&str> = s.split_whitespace().collect();
        match fields.as_slice() {
            [head] => Ok(NpStructure::Bare {
                head: head.to_string(),
            }),
            [possessor, "'s" | "'" | "’s" | "’", head] => Ok(NpStructure::Possessive {
                possessor_head: possessor.to_string(),
                head: head.to_string(),
            }),
            [head, prep, object] => Ok(NpStructure::Prepositional {
                head: head.to_string(),
                preposition: prep.to_string(),
                object_head: object.to_string(),
            }),
            _ => Err(format!("cannot read NP structure from {s:?}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn np_with(head: &str, mods: &[(&str, ModifierKind)]) -> NounPhrase {
        let mut np = NounPhrase::new("m", 0, (0, 1), head);
        np.premodifiers = mods.iter().map(|(l, k)| Premodifier::new(*l, *k)).collect();
        np
    }

    fn words(ws: &ContentWordSet) -> Vec<&str> {
        ws.tokens().iter().map(String::as_str).collect()
    }

    #[test]
    fn participle_premodifier() {
        let np = np_with("roadway", &[("collapsed", ModifierKind::EdParticiple)]);
        let ws = collect_content_words(&np, ModifierKinds::ALL, true);
        assert_eq!(words(&ws), ["collapsed", "roadway"]);
    }

    #[test]
    fn of_postmodifier_appended_after_head() {
        let mut np = np_with("policies", &[]);
        np.of_postmodifier = Some(OfPostmodifier {
            head_lemma: "segregation".into(),
            premodifiers: vec![Premodifier::new("racial", ModifierKind::Adjective)],
        });
        let ws = collect_content_words(&np, ModifierKinds::ALL, true);
        assert_eq!(words(&ws), ["policies", "racial", "segregation"]);
        let ws = collect_content_words(&np, ModifierKinds::ALL, false);
        assert_eq!(words(&ws), ["policies"]);
        let ws = collect_content_words(&np, ModifierKinds::ADJECTIVE, true);
        assert_eq!(words(&ws), ["policies"]);
        let ws = collect_content_words(&np, ModifierKinds::NOUN, true);
        assert_eq!(words(&ws), ["policies", "segregation"]);
    }

    #[test]
    fn pronoun_head_only() {
        let np = np_with("their", &[]);
        assert_eq!(
            words(&collect_content_words(&np, ModifierKinds::ALL, true)),
            ["their"]
        );
    }

    #[test]
    fn kind_filtering() {
        let np = np_with("agreement", &[("exclusive", ModifierKind::Adjective)]);
        assert_eq!(
            words(&collect_content_words(&np, ModifierKinds::NOUN, true)),
            ["agreement"]
        );
        assert_eq!(
            words(&collect_content_words(&np, ModifierKinds::ALL, true)),
            ["exclusive", "agreement"]
        );
    }

    #[test]
    fn suffix_rules() {
        let mut ana = np_with(
            "arrangements",
            &[("distribution", ModifierKind::CommonNoun)],
        );
        ana.is_bridging_anaphor = true;
        let ws = collect_content_words(&ana, ModifierKinds::ALL, true);
        let s = apply_suffix(
            ws.clone(),
            &ana,
            SuffixPolicy::Isnotes,
            MentionRole::Anaphor,
        );
        assert_eq!(words(&s), ["distribution_PP", "arrangements_PP"]);
        // idempotent
        let again = apply_suffix(s.clone(), &ana, SuffixPolicy::Isnotes, MentionRole::Anaphor);
        assert_eq!(again, s);
        // never on candidates, never under arrau
        let c = apply_suffix(
            ws.clone(),
            &ana,
            SuffixPolicy::Isnotes,
            MentionRole::Candidate,
        );
        assert_eq!(c, ws);
        let a = apply_suffix(ws.clone(), &ana, SuffixPolicy::Arrau, MentionRole::Anaphor);
        assert_eq!(a, ws);

        let mut time = np_with("march", &[]);
        time.is_bridging_anaphor = true;
        time.semantic_type = SemanticType::Time;
        let ws = collect_content_words(&time, ModifierKinds::ALL, true);
        let s = apply_suffix(ws, &time, SuffixPolicy::Isnotes, MentionRole::Anaphor);
        assert_eq!(words(&s), ["march"]);

        let mut cmp = np_with("nations", &[]);
        cmp.is_bridging_anaphor = true;
        cmp.is_comparative_anaphor = true;
        let ws = collect_content_words(&cmp, ModifierKinds::ALL, true);
        let s = apply_suffix(ws.clone(), &cmp, SuffixPolicy::Bashi, MentionRole::Anaphor);
        assert_eq!(words(&s), ["nations"]);
        let s = apply_suffix(ws, &cmp, SuffixPolicy::Isnotes, MentionRole::Anaphor);
        assert_eq!(words(&s), ["nations_PP"]);

        let cand = np_with("products", &[("dialysis", ModifierKind::CommonNoun)]);
        let ws = collect_content_words(&cand, ModifierKinds::ALL, true);
        let s = apply_suffix(ws, &cand, SuffixPolicy::Isnotes, MentionRole::Anaphor);
        assert_eq!(words(&s), ["dialysis", "products"]);
    }

    fn toy_table() -> EmbeddingTable {
        EmbeddingTable::from_entries(
            2,
            [
                ("a", vec![1.0, 0.0]),
                ("b", vec![0.0, 1.0]),
                ("c", vec![2.0, 4.0]),
                ("b_PP", vec![3.0, 3.0]),
            ],
        )
        .unwrap()
    }

    fn set(ws: &[&str]) -> ContentWordSet {
        ContentWordSet(ws.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn mean_vectors() {
        let t = toy_table();
        assert_eq!(
            np_vector(&t, &set(&["c"]), true).unwrap().as_slice(),
            &[2.0, 4.0]
        );
        assert_eq!(
            np_vector(&t, &set(&["a", "b"]), true).unwrap().as_slice(),
            &[0.5, 0.5]
        );
        // OOV dropped from the mean
        assert_eq!(
            np_vector(&t, &set(&["a", "zzz"]), true).unwrap().as_slice(),
            &[1.0, 0.0]
        );
        // repeated tokens count twice
        let v = np_vector(&t, &set(&["a", "a", "b"]), true).unwrap();
        assert_eq!(v.as_slice(), &[2.0 / 3.0, 1.0 / 3.0]);
        assert!(np_vector(&t, &set(&["zzz_PP"]), true).is_none());
        assert!(np_vector(&t, &set(&[]), true).is_none());
    }

    #[test]
    fn suffix_fallback() {
        let t = toy_table();
        assert_eq!(
            np_vector(&t, &set(&["b_PP"]), true).unwrap().as_slice(),
            &[3.0, 3.0]
        );
        assert_eq!(
            np_vector(&t, &set(&["a_PP"]), true).unwrap().as_slice(),
            &[1.0, 0.0]
        );
        assert!(np_vector(&t, &set(&["a_PP"]), false).is_none());
    }

    #[test]
    fn table_one_pairs() {
        let rows = [
            ("travelers in station", "travelers_PP", "station"),
            ("travelers from airport", "travelers_PP", "airport"),
            ("hotels for travelers", "hotels_PP", "travelers"),
            ("destination for travelers", "destination_PP", "travelers"),
            ("company 's chairman", "chairman_PP", "company"),
        ];
        for (src, left, right) in rows {
            let np: NpStructure = src.parse().unwrap();
            let pair = extract_noun_pairs(&np).unwrap();
            assert_eq!((pair.left.as_str(), pair.right.as_str()), (left, right));
        }
        let bare: NpStructure = "door".parse().unwrap();
        assert!(extract_noun_pairs(&bare).is_none());
        assert!("a b c d".parse::<NpStructure>().is_err());
    }

    #[test]
    fn modifier_kinds_parse() {
        assert_eq!(
            "none".parse::<ModifierKinds>().unwrap(),
            ModifierKinds::NONE
        );
        assert_eq!("all".parse::<ModifierKinds>().unwrap(), ModifierKinds::ALL);
        assert_eq!(
            "noun,participle,adjective"
                .parse::<ModifierKinds>()
                .unwrap(),
            ModifierKinds::ALL
        );
        assert_eq!(
            "ed,ing".parse::<ModifierKinds>().unwrap(),
            ModifierKinds::PARTICIPLE
        );
        assert!("verbs".parse::<ModifierKinds>().is_err());
        assert_eq!(ModifierKinds::ALL.to_string(), "noun,adjective,ed,ing");
        assert_eq!(ModifierKinds::NONE.to_string(), "none");
    }
}
