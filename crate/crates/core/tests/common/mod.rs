//! Test-only oracles and synthetic data.
//!
//! Everything here is written from the definitions, without calling into the
//! library paths it is used to check.

#![allow(dead_code)]

use bridging_core::corpus_eval::{Document, GoldLink};
use bridging_core::np_semantics::{
    ModifierKind, ModifierKinds, NounPhrase, OfPostmodifier, Premodifier, SemanticType,
    SuffixPolicy,
};
use bridging_core::resolver::{RepresentationMode, ResolutionConfig};
use bridging_core::EmbeddingTable;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn naive_cosine(u: &[f64], v: &[f64]) -> Option<f64> {
    let mut uv = 0.0;
    let mut uu = 0.0;
    let mut vv = 0.0;
    for i in 0..u.len() {
        uv += u[i] * v[i];
        uu += u[i] * u[i];
        vv += v[i] * v[i];
    }
    if uu == 0.0 || vv == 0.0 {
        return None;
    }
    Some(uv / (uu.sqrt() * vv.sqrt()))
}

pub fn naive_relsim(v1: &[f64], v2: &[f64], v3: &[f64], v4: &[f64]) -> Option<f64> {
    let unit = |v: &[f64]| -> Vec<f64> {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter().map(|x| x / n).collect()
    };
    let (a, b, c, d) = (unit(v1), unit(v2), unit(v3), unit(v4));
    let left: Vec<f64> = (0..a.len()).map(|i| a[i] - b[i]).collect();
    let right: Vec<f64> = (0..c.len()).map(|i| c[i] - d[i]).collect();
    naive_cosine(&left, &right)
}

/// Rank of each value: 1 + (number strictly smaller) + (ties - 1) / 2.
pub fn brute_force_ranks(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|&x| {
            let smaller = values.iter().filter(|&&y| y < x).count() as f64;
            let equal = values.iter().filter(|&&y| y == x).count() as f64;
            1.0 + smaller + (equal - 1.0) / 2.0
        })
        .collect()
}

/// Pearson correlation via the raw-sum formula; `None` on zero variance.
pub fn brute_force_pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|a| a * a).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let vx = n * sxx - sx * sx;
    let vy = n * syy - sy * sy;
    if vx.abs() < 1e-12 || vy.abs() < 1e-12 {
        return None;
    }
    Some((n * sxy - sx * sy) / (vx.sqrt() * vy.sqrt()))
}

pub fn brute_force_spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    brute_force_pearson(&brute_force_ranks(x), &brute_force_ranks(y))
}

// ---------------------------------------------------------------------------
// Resolver oracle
// ---------------------------------------------------------------------------

fn oracle_words(np: &NounPhrase, anaphor_role: bool, cfg: &ResolutionConfig) -> Vec<String> {
    let kinds = match cfg.representation_mode {
        RepresentationMode::HeadOnly => ModifierKinds::NONE,
        RepresentationMode::HeadPlusModifiers => cfg.modifier_kinds,
        RepresentationMode::MixedAnaphorFullCandidateHead => {
            if anaphor_role {
                cfg.modifier_kinds
            } else {
                ModifierKinds::NONE
            }
        }
    };
    let mut words = Vec::new();
    for p in &np.premodifiers {
        if kinds.contains(p.kind) {
            words.push(p.lemma.clone());
        }
    }
    words.push(np.head_lemma.clone());
    if cfg.include_of_postmodifier && kinds.contains(ModifierKind::CommonNoun) {
        if let Some(post) = &np.of_postmodifier {
            for p in &post.premodifiers {
                if kinds.contains(p.kind) {
                    words.push(p.lemma.clone());
                }
            }
            words.push(post.head_lemma.clone());
        }
    }
    let suffix = anaphor_role
        && np.is_bridging_anaphor
        && np.semantic_type != SemanticType::Time
        && match cfg.suffix_policy {
            SuffixPolicy::Isnotes => true,
            SuffixPolicy::Bashi => !np.is_comparative_anaphor,
            SuffixPolicy::Arrau => false,
        };
    if suffix {
        words.iter().map(|w| format!("{w}_PP")).collect()
    } else {
        words
    }
}

fn oracle_vector(
    table: &EmbeddingTable,
    np: &NounPhrase,
    anaphor_role: bool,
    cfg: &ResolutionConfig,
) -> Option<Vec<f64>> {
    let mut found: Vec<Vec<f64>> = Vec::new();
    for w in oracle_words(np, anaphor_role, cfg) {
        let mut v = table.lookup(&w);
        if v.is_none() && cfg.fallback_unsuffixed && w.ends_with("_PP") {
            v = table.lookup(&w[..w.len() - 3]);
        }
        if let Some(v) = v {
            found.push(v.iter().map(|&x| x as f64).collect());
        }
    }
    if found.is_empty() {
        return None;
    }
    let mut mean = vec![0.0; table.dim()];
    for v in &found {
        for i in 0..mean.len() {
            mean[i] += v[i];
        }
    }
    Some(mean.iter().map(|s| s / found.len() as f64).collect())
}

fn oracle_precedes(c: &NounPhrase, a: &NounPhrase) -> bool {
    if c.sentence_index != a.sentence_index {
        return c.sentence_index < a.sentence_index;
    }
    c.token_span.1 <= a.token_span.0
}

/// Candidate mentions for `a` by direct enumeration of the document.
pub fn oracle_candidates<'d>(
    doc: &'d Document,
    a: &NounPhrase,
    cfg: &ResolutionConfig,
) -> Vec<&'d NounPhrase> {
    let mut out: Vec<&NounPhrase> = Vec::new();
    for m in &doc.mentions {
        if m.mention_id == a.mention_id || !oracle_precedes(m, a) {
            continue;
        }
        let dist = a.sentence_index - m.sentence_index;
        let window =
            dist <= cfg.window_sentences || (cfg.include_first_sentence && m.sentence_index == 0);
        if !window {
            continue;
        }
        if cfg.exclude_bridging_anaphor_candidates && m.is_bridging_anaphor {
            continue;
        }
        if cfg.exclude_time_candidates
            && m.semantic_type == SemanticType::Time
            && a.semantic_type != SemanticType::Time
        {
            continue;
        }
        out.push(m);
    }
    if cfg.entity_expansion {
        let seeds: Vec<&str> = out.iter().filter_map(|m| m.entity_id.as_deref()).collect();
        for m in &doc.mentions {
            let Some(e) = m.entity_id.as_deref() else {
                continue;
            };
            if seeds.contains(&e)
                && m.mention_id != a.mention_id
                && oracle_precedes(m, a)
                && !out.iter().any(|o| o.mention_id == m.mention_id)
            {
                out.push(m);
            }
        }
    }
    out
}

/// True when `x` is strictly closer to the anaphor than `y`.
fn closer(x: &NounPhrase, y: &NounPhrase) -> bool {
    let kx = (x.sentence_index, x.token_span.1, x.token_span.0);
    let ky = (y.sentence_index, y.token_span.1, y.token_span.0);
    kx > ky || (kx == ky && x.mention_id < y.mention_id)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutcome {
    pub anaphor_id: String,
    pub mention_id: Option<String>,
    pub score: Option<f64>,
    /// Number of candidates sharing the top score.
    pub tied_at_top: usize,
}

/// Exhaustive argmax over all candidates with the closest-wins tie rule.
pub fn oracle_resolve(
    doc: &Document,
    table: &EmbeddingTable,
    cfg: &ResolutionConfig,
) -> Vec<OracleOutcome> {
    let mut anaphors: Vec<&str> = Vec::new();
    for l in &doc.gold_links {
        if !anaphors.contains(&l.anaphor_id.as_str()) {
            anaphors.push(&l.anaphor_id);
        }
    }
    anaphors
        .into_iter()
        .map(|id| {
            let a = doc.mentions.iter().find(|m| m.mention_id == id).unwrap();
            let none = OracleOutcome {
                anaphor_id: id.to_string(),
                mention_id: None,
                score: None,
                tied_at_top: 0,
            };
            let Some(av) = oracle_vector(table, a, true, cfg) else {
                return none;
            };
            let scored: Vec<(f64, &NounPhrase)> = oracle_candidates(doc, a, cfg)
                .into_iter()
                .filter_map(|m| {
                    let v = oracle_vector(table, m, false, cfg)?;
                    naive_cosine(&av, &v).map(|s| (s, m))
                })
                .collect();
            if scored.is_empty() {
                return none;
            }
            let top = scored
                .iter()
                .map(|(s, _)| *s)
                .fold(f64::NEG_INFINITY, f64::max);
            let tied: Vec<&NounPhrase> = scored
                .iter()
                .filter(|(s, _)| *s == top)
                .map(|(_, m)| *m)
                .collect();
            let mut best = tied[0];
            for m in &tied[1..] {
                if closer(m, best) {
                    best = m;
                }
            }
            OracleOutcome {
                anaphor_id: id.to_string(),
                mention_id: Some(best.mention_id.clone()),
                score: Some(top),
                tied_at_top: tied.len(),
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

pub const SYNTH_DIM: usize = 4;

/// Small integer-valued table. `w5` duplicates `w1` and `w3_PP` duplicates
/// `w3`, so distinct tokens can tie exactly; `w10`/`w11` are out of vocabulary.
pub fn synthetic_table<R: Rng>(rng: &mut R) -> EmbeddingTable {
    let mut rows: Vec<(String, Vec<f32>)> = Vec::new();
    let random_vec = |rng: &mut R| loop {
        let v: Vec<f32> = (0..SYNTH_DIM)
            .map(|_| rng.gen_range(-3..=3) as f32)
            .collect();
        if v.iter().any(|&x| x != 0.0) {
            return v;
        }
    };
    for i in 0..10 {
        rows.push((format!("w{i}"), random_vec(rng)));
    }
    let w1 = rows[1].1.clone();
    rows[5].1 = w1;
    for i in 0..5 {
        rows.push((format!("w{i}_PP"), random_vec(rng)));
    }
    let w3 = rows[3].1.clone();
    rows[10 + 3].1 = w3;
    EmbeddingTable::from_entries(SYNTH_DIM, rows).unwrap()
}

fn random_lemma<R: Rng>(rng: &mut R) -> String {
    format!("w{}", rng.gen_range(0..12))
}

fn random_premods<R: Rng>(rng: &mut R) -> Vec<Premodifier> {
    let kinds = [
        ModifierKind::CommonNoun,
        ModifierKind::Adjective,
        ModifierKind::EdParticiple,
        ModifierKind::IngParticiple,
    ];
    (0..rng.gen_range(0..=2))
        .map(|_| Premodifier::new(random_lemma(rng), *kinds.choose(rng).unwrap()))
        .collect()
}

/// A random valid document with at most 12 mentions and at least one gold
/// anaphor. With probability `tie_rate` a non-anaphor mention is duplicated
/// at another position, which produces exact score ties.
pub fn synthetic_document<R: Rng>(rng: &mut R, id: usize, tie_rate: f64) -> Document {
    let n_sent = rng.gen_range(1..=6);
    let sentences = vec![vec!["tok".to_string(); 12]; n_sent];
    let n_mentions = rng.gen_range(2..=11);
    let mut mentions: Vec<NounPhrase> = (0..n_mentions)
        .map(|i| {
            let start = rng.gen_range(0..10);
            let len = rng.gen_range(1..=2);
            let mut m = NounPhrase::new(
                format!("m{i}"),
                rng.gen_range(0..n_sent),
                (start, start + len),
                random_lemma(rng),
            );
            m.premodifiers = random_premods(rng);
            if rng.gen_bool(0.2) {
                m.of_postmodifier = Some(OfPostmodifier {
                    head_lemma: random_lemma(rng),
                    premodifiers: random_premods(rng),
                });
            }
            if rng.gen_bool(0.15) {
                m.semantic_type = SemanticType::Time;
            }
            if rng.gen_bool(0.3) {
                m.is_bridging_anaphor = true;
                m.is_comparative_anaphor = rng.gen_bool(0.3);
            }
            if rng.gen_bool(0.6) {
                m.entity_id = Some(format!("e{}", rng.gen_range(0..4)));
            }
            m
        })
        .collect();
    if !mentions.iter().any(|m| m.is_bridging_anaphor) {
        let last = mentions.len() - 1;
        mentions[last].is_bridging_anaphor = true;
    }
    if rng.gen_bool(tie_rate) {
        if let Some(src) = mentions.iter().rfind(|m| !m.is_bridging_anaphor).cloned() {
            let mut copy = src;
            copy.mention_id = format!("m{}", mentions.len());
            copy.sentence_index = rng.gen_range(0..n_sent);
            let start = rng.gen_range(0..10);
            copy.token_span = (start, start + 1);
            mentions.push(copy);
        }
    }
    if !mentions.iter().any(|m| m.entity_id.is_some()) {
        mentions[0].entity_id = Some("e0".into());
    }
    let entity_ids: Vec<String> = {
        let mut es: Vec<String> = mentions
            .iter()
            .filter_map(|m| m.entity_id.clone())
            .collect();
        es.sort();
        es.dedup();
        es
    };
    let gold_links = mentions
        .iter()
        .filter(|m| m.is_bridging_anaphor)
        .map(|m| GoldLink {
            anaphor_id: m.mention_id.clone(),
            antecedent_entity_id: entity_ids.choose(rng).unwrap().clone(),
            relation: None,
        })
        .collect();
    let mut doc = Document {
        doc_id: format!("synth{id}"),
        sentences,
        mentions,
        entities: Default::default(),
        gold_links,
    };
    doc.derive_entities();
    doc.validate().expect("synthetic document must be valid");
    doc
}

/// A random configuration: one of the presets, with some fields perturbed.
pub fn synthetic_config<R: Rng>(rng: &mut R) -> ResolutionConfig {
    use bridging_core::corpus_eval::Preset;
    let mut cfg = Preset::ALL.choose(rng).unwrap().config();
    if rng.gen_bool(0.5) {
        cfg.window_sentences = rng.gen_range(0..=6);
        cfg.modifier_kinds = [
            ModifierKinds::NONE,
            ModifierKinds::NOUN,
            ModifierKinds::ADJECTIVE,
            ModifierKinds::PARTICIPLE,
            ModifierKinds::ALL,
        ]
        .choose(rng)
        .copied()
        .unwrap();
        cfg.include_of_postmodifier = rng.gen_bool(0.7);
        cfg.exclude_time_candidates = rng.gen_bool(0.7);
        cfg.exclude_bridging_anaphor_candidates = rng.gen_bool(0.7);
        cfg.entity_expansion = rng.gen_bool(0.7);
        cfg.fallback_unsuffixed = rng.gen_bool(0.7);
    }
    cfg
}

/// Same content, different storage order of mentions and entity members.
pub fn shuffled<R: Rng>(doc: &Document, rng: &mut R) -> Document {
    let mut d = doc.clone();
    d.mentions.shuffle(rng);
    for members in d.entities.values_mut() {
        members.shuffle(rng);
    }
    d
}
