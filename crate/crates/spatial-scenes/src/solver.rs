//! Rule-based solving of spatial-relation captions.
//!
//! A caption like "The cat is left of the dog." is handled in four steps:
//! map the instance's relation onto a geometric relation (a 17-entry table;
//! everything else is undecidable from boxes alone), split the caption
//! around the longest relation phrase found in the 65-phrase lexicon, match
//! the subject and object strings against the scene's detections, and decide
//! with the box geometry. Any step that fails demotes the instance to a fair
//! coin flip with the failure recorded.
//!
//! Both tables ship as editable TSV files under `data/` and are compiled in
//! as the defaults.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::OnceLock;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{Scene, VsrInstance, image_id_from_name};
use crate::relations::{SpatialRelation, holds};

const BUILTIN_LEXICON: &str = include_str!("../data/vsr_relations.tsv");
const BUILTIN_MAPPING: &str = include_str!("../data/vsr_sstd_mapping.tsv");

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{context}, line {line}: expected two tab-separated fields, got '{content}'")]
    BadRow {
        context: String,
        line: usize,
        content: String,
    },
    #[error("{context}, line {line}: duplicate relation '{relation}'")]
    DuplicateRelation {
        context: String,
        line: usize,
        relation: String,
    },
    #[error("{context}, line {line}: '{target}' is not a two-object geometric relation")]
    BadTarget {
        context: String,
        line: usize,
        target: String,
    },
}

/// Non-comment, non-blank TSV lines with their 1-based line numbers.
fn tsv_rows(content: &str) -> impl Iterator<Item = (usize, &str)> {
    content
        .lines()
        .enumerate()
        .map(|(i, line)| (i + 1, line.trim()))
        .filter(|(_, line)| !line.is_empty() && !line.starts_with('#'))
}

fn split_tsv_row<'a>(
    context: &str,
    line: usize,
    content: &'a str,
) -> Result<(&'a str, &'a str), SolverError> {
    content
        .split_once('\t')
        .map(|(a, b)| (a.trim(), b.trim()))
        .filter(|(a, b)| !a.is_empty() && !b.is_empty())
        .ok_or_else(|| SolverError::BadRow {
            context: context.to_string(),
            line,
            content: content.to_string(),
        })
}

/// The 65 VSR relation phrases with their linguistic category.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VsrLexicon {
    categories: BTreeMap<String, String>,
}

impl VsrLexicon {
    /// The lexicon compiled in from `data/vsr_relations.tsv`.
    pub fn builtin() -> &'static VsrLexicon {
        static LEXICON: OnceLock<VsrLexicon> = OnceLock::new();
        LEXICON.get_or_init(|| {
            VsrLexicon::from_tsv(BUILTIN_LEXICON, "builtin relation lexicon")
                .expect("builtin lexicon is well-formed")
        })
    }

    pub fn from_tsv(content: &str, context: &str) -> Result<Self, SolverError> {
        let mut categories = BTreeMap::new();
        for (line, row) in tsv_rows(content) {
            let (relation, category) = split_tsv_row(context, line, row)?;
            if categories
                .insert(relation.to_lowercase(), category.to_lowercase())
                .is_some()
            {
                return Err(SolverError::DuplicateRelation {
                    context: context.to_string(),
                    line,
                    relation: relation.to_string(),
                });
            }
        }
        Ok(VsrLexicon { categories })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, SolverError> {
        let path = path.as_ref();
        let shown = path.display().to_string();
        let content = std::fs::read_to_string(path).map_err(|source| SolverError::Io {
            path: shown.clone(),
            source,
        })?;
        VsrLexicon::from_tsv(&content, &shown)
    }

    pub fn contains(&self, relation: &str) -> bool {
        self.categories.contains_key(relation)
    }

    pub fn category_of(&self, relation: &str) -> Option<&str> {
        self.categories.get(relation).map(String::as_str)
    }

    pub fn relations(&self) -> impl Iterator<Item = &str> {
        self.categories.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn category_counts(&self) -> BTreeMap<&str, usize> {
        let mut counts = BTreeMap::new();
        for category in self.categories.values() {
            *counts.entry(category.as_str()).or_insert(0) += 1;
        }
        counts
    }
}

/// VSR relation phrase → geometric relation. Only two-object relations are
/// valid targets; the constructor enforces it so `solve` can rely on arity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationMapping {
    table: BTreeMap<String, SpatialRelation>,
}

impl RelationMapping {
    /// The table compiled in from `data/vsr_sstd_mapping.tsv`.
    pub fn builtin() -> &'static RelationMapping {
        static MAPPING: OnceLock<RelationMapping> = OnceLock::new();
        MAPPING.get_or_init(|| {
            RelationMapping::from_tsv(BUILTIN_MAPPING, "builtin relation mapping")
                .expect("builtin mapping is well-formed")
        })
    }

    pub fn from_tsv(content: &str, context: &str) -> Result<Self, SolverError> {
        let mut table = BTreeMap::new();
        for (line, row) in tsv_rows(content) {
            let (vsr, target) = split_tsv_row(context, line, row)?;
            let Some(relation) = SpatialRelation::from_name(&target.to_lowercase()) else {
                return Err(SolverError::BadTarget {
                    context: context.to_string(),
                    line,
                    target: target.to_string(),
                });
            };
            if relation.arity() != 2 {
                return Err(SolverError::BadTarget {
                    context: context.to_string(),
                    line,
                    target: target.to_string(),
                });
            }
            if table.insert(vsr.to_lowercase(), relation).is_some() {
                return Err(SolverError::DuplicateRelation {
                    context: context.to_string(),
                    line,
                    relation: vsr.to_string(),
                });
            }
        }
        Ok(RelationMapping { table })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, SolverError> {
        let path = path.as_ref();
        let shown = path.display().to_string();
        let content = std::fs::read_to_string(path).map_err(|source| SolverError::Io {
            path: shown.clone(),
            source,
        })?;
        RelationMapping::from_tsv(&content, &shown)
    }

    pub fn get(&self, vsr_relation: &str) -> Option<SpatialRelation> {
        self.table.get(vsr_relation).copied()
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, SpatialRelation)> {
        self.table.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

const ARTICLES: [&str; 3] = ["the", "a", "an"];
const COPULAS: [&str; 4] = ["is", "are", "was", "were"];

/// Lowercased words with edge punctuation removed.
fn normalize_tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split_whitespace()
        .map(|w| w.trim_matches(|c: char| ".,!?;:\"".contains(c)).to_string())
        .filter(|w| !w.is_empty())
        .collect()
}

fn strip_leading_article(tokens: &[String]) -> &[String] {
    match tokens.first() {
        Some(first) if ARTICLES.contains(&first.as_str()) => &tokens[1..],
        _ => tokens,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedCaption {
    pub subject: String,
    /// The lexicon phrase the caption was split on.
    pub relation: String,
    pub object: String,
}

/// Splits a caption around the longest lexicon phrase it contains
/// (token-count, then character-count, then leftmost). The subject keeps the
/// text before the phrase minus a leading article and a trailing copula; the
/// object keeps the text after it minus a leading article. Returns `None`
/// when no phrase occurs or either side comes out empty.
pub fn parse_caption(caption: &str, lexicon: &VsrLexicon) -> Option<ParsedCaption> {
    let tokens = normalize_tokens(caption);
    let mut best: Option<(usize, usize, usize, &str)> = None; // tok_len, char_len, pos, phrase
    for phrase in lexicon.relations() {
        let phrase_tokens: Vec<&str> = phrase.split_whitespace().collect();
        if phrase_tokens.is_empty() || phrase_tokens.len() > tokens.len() {
            continue;
        }
        let hit = (0..=tokens.len() - phrase_tokens.len()).find(|&start| {
            tokens[start..start + phrase_tokens.len()]
                .iter()
                .map(String::as_str)
                .eq(phrase_tokens.iter().copied())
        });
        if let Some(pos) = hit {
            let key = (phrase_tokens.len(), phrase.len());
            let better = match best {
                None => true,
                Some((bt, bc, bp, _)) => key > (bt, bc) || (key == (bt, bc) && pos < bp),
            };
            if better {
                best = Some((phrase_tokens.len(), phrase.len(), pos, phrase));
            }
        }
    }
    let (tok_len, _, pos, phrase) = best?;

    let mut subject_tokens = strip_leading_article(&tokens[..pos]);
    if let Some(last) = subject_tokens.last()
        && COPULAS.contains(&last.as_str())
    {
        subject_tokens = &subject_tokens[..subject_tokens.len() - 1];
    }
    let object_tokens = strip_leading_article(&tokens[pos + tok_len..]);
    if subject_tokens.is_empty() || object_tokens.is_empty() {
        return None;
    }
    Some(ParsedCaption {
        subject: subject_tokens.join(" "),
        relation: phrase.to_string(),
        object: object_tokens.join(" "),
    })
}

fn normalize_phrase(phrase: &str) -> String {
    let tokens = normalize_tokens(phrase);
    strip_leading_article(&tokens).join(" ")
}

/// Finds the detection a caption phrase refers to: exact label match first,
/// then substring containment in either direction. Multiple hits resolve to
/// the largest detection (first in detector order on an exact area tie).
/// `exclude` prevents the object from reusing the subject's detection.
pub fn match_object(phrase: &str, scene: &Scene, exclude: Option<usize>) -> Option<usize> {
    let needle = normalize_phrase(phrase);
    if needle.is_empty() {
        return None;
    }
    let candidates: Vec<(usize, String)> = scene
        .objects
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != exclude)
        .map(|(i, o)| (i, normalize_phrase(&o.label)))
        .collect();
    let largest = |hits: &mut dyn Iterator<Item = usize>| -> Option<usize> {
        let mut best: Option<usize> = None;
        for i in hits {
            let replace = match best {
                None => true,
                Some(b) => scene.objects[i].pixel_area() > scene.objects[b].pixel_area(),
            };
            if replace {
                best = Some(i);
            }
        }
        best
    };
    let mut exact = candidates
        .iter()
        .filter(|(_, label)| *label == needle)
        .map(|(i, _)| *i);
    if let Some(hit) = largest(&mut exact) {
        return Some(hit);
    }
    let mut fuzzy = candidates
        .iter()
        .filter(|(_, label)| {
            !label.is_empty() && (label.contains(&needle) || needle.contains(label.as_str()))
        })
        .map(|(i, _)| *i);
    largest(&mut fuzzy)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rule,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    UnmappedRelation,
    CaptionParse,
    SubjectUnmatched,
    ObjectUnmatched,
}

impl FailureReason {
    pub fn name(self) -> &'static str {
        match self {
            FailureReason::UnmappedRelation => "unmapped_relation",
            FailureReason::CaptionParse => "caption_parse",
            FailureReason::SubjectUnmatched => "subject_unmatched",
            FailureReason::ObjectUnmatched => "object_unmatched",
        }
    }
}

/// A solver verdict. `method` records whether geometry decided the answer or
/// a fair coin did; rule answers never carry a failure reason.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub answer: bool,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_reason: Option<FailureReason>,
}

/// One JSON-lines row of solver output, aligned to the instance order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub index: usize,
    #[serde(flatten)]
    pub prediction: Prediction,
}

fn random_answer(rng: &mut impl Rng, reason: FailureReason) -> Prediction {
    Prediction {
        answer: rng.random::<bool>(),
        method: Method::Random,
        failure_reason: Some(reason),
    }
}

/// Solves one instance. A missing scene counts as the subject not being
/// found. Identical box centers — where the directional relations are
/// undefined — resolve to a rule "false": the geometry cannot affirm the
/// caption, and the failure vocabulary is fixed.
pub fn solve(
    instance: &VsrInstance,
    scene: Option<&Scene>,
    mapping: &RelationMapping,
    lexicon: &VsrLexicon,
    rng: &mut impl Rng,
) -> Prediction {
    let Some(mapped) = mapping.get(&instance.relation) else {
        return random_answer(rng, FailureReason::UnmappedRelation);
    };
    let Some(parsed) = parse_caption(&instance.caption, lexicon) else {
        return random_answer(rng, FailureReason::CaptionParse);
    };
    let Some(scene) = scene else {
        return random_answer(rng, FailureReason::SubjectUnmatched);
    };
    let Some(subject_idx) = match_object(&parsed.subject, scene, None) else {
        return random_answer(rng, FailureReason::SubjectUnmatched);
    };
    let Some(object_idx) = match_object(&parsed.object, scene, Some(subject_idx)) else {
        return random_answer(rng, FailureReason::ObjectUnmatched);
    };
    let normalized = |i: usize| {
        scene.objects[i]
            .bounding_box()
            .normalize(scene.width, scene.height)
    };
    let Ok(subject_box) = normalized(subject_idx) else {
        return random_answer(rng, FailureReason::SubjectUnmatched);
    };
    let Ok(object_box) = normalized(object_idx) else {
        return random_answer(rng, FailureReason::ObjectUnmatched);
    };
    let answer = holds(mapped, &subject_box, Some(&object_box)).unwrap_or(false);
    Prediction {
        answer,
        method: Method::Rule,
        failure_reason: None,
    }
}

/// The random stream for one instance; depends only on `(seed, index)` so
/// parallel solving is order- and worker-count-independent.
pub fn per_instance_rng(seed: u64, index: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&index.to_le_bytes());
    key[24..32].copy_from_slice(b"sstd-slv");
    ChaCha12Rng::from_seed(key)
}

pub fn scenes_by_id(scenes: Vec<Scene>) -> HashMap<u64, Scene> {
    scenes.into_iter().map(|s| (s.image_id, s)).collect()
}

/// Solves every instance on the current rayon pool. Output order matches
/// instance order; instances whose image reference resolves to no scene fall
/// back to the coin.
pub fn solve_all(
    instances: &[VsrInstance],
    scenes: &HashMap<u64, Scene>,
    mapping: &RelationMapping,
    lexicon: &VsrLexicon,
    seed: u64,
) -> Vec<Prediction> {
    instances
        .par_iter()
        .enumerate()
        .map(|(index, instance)| {
            let scene = image_id_from_name(&instance.image)
                .ok()
                .and_then(|id| scenes.get(&id));
            let mut rng = per_instance_rng(seed, index as u64);
            solve(instance, scene, mapping, lexicon, &mut rng)
        })
        .collect()
}
