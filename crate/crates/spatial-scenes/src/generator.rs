//! Synthetic spatial-relation QA generation.
//!
//! Each example is drawn from one scene in four steps: pick a relation
//! category (two-object categories get `p_two_object` of the probability mass
//! when the scene has at least two detections), pick the participating
//! objects uniformly without replacement, flip a `p_negative` coin for a "no"
//! example, then draw the relation uniformly from the relations that are
//! false (negative) or true (affirmative) for the chosen geometry. The
//! verbalized scene plus the rendered question and the answer form the
//! example.
//!
//! Degenerate draws — an empty candidate set (all-ties size comparison) or
//! identical centers (directional relations undefined) — are retried a
//! bounded number of times by redrawing everything; exhaustion skips the
//! image for the epoch so no unverifiable label is ever emitted.

use std::collections::{BTreeMap, HashSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, GridConfig};
use crate::ingest::{Scene, VsrInstance, image_id_from_name};
use crate::relations::{
    RelationCategory, RelationError, SpatialRelation, false_relations, true_relations,
};
use crate::verbalize::{VerbalizeError, VerbalizeOptions, render_question, scene_description};

/// Redraws per example before the image is skipped.
pub const SAMPLE_ATTEMPTS: u32 = 8;

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("{name} must be a probability in [0, 1], got {value}")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("scene {image_id} has no objects")]
    EmptyScene { image_id: u64 },
    #[error("scene {image_id}: no valid example after {attempts} draws")]
    RetriesExhausted { image_id: u64, attempts: u32 },
    #[error("{count} image reference(s) with no extractable id: {details}")]
    BadImageRefs { count: usize, details: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Relation(#[from] RelationError),
    #[error(transparent)]
    Verbalize(#[from] VerbalizeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Answer {
    Yes,
    No,
}

impl Answer {
    pub fn as_str(self) -> &'static str {
        match self {
            Answer::Yes => "yes",
            Answer::No => "no",
        }
    }
}

/// One generated QA example. Serialized field order is the JSON-lines
/// contract; `object` is an explicit `null` for one-object relations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SstdExample {
    pub question: String,
    pub description: String,
    pub answer: Answer,
    pub image_id: u64,
    pub relation: SpatialRelation,
    pub category: RelationCategory,
    pub subject: String,
    pub object: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub grid: GridConfig,
    /// Probability mass given to the two-object categories when the scene has
    /// at least two detections.
    pub p_two_object: f64,
    /// Probability of a negative ("no") example.
    pub p_negative: f64,
    /// Examples drawn per image per epoch.
    pub per_image: u32,
    pub verbalize: VerbalizeOptions,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            grid: GridConfig::default(),
            p_two_object: 0.7,
            p_negative: 0.5,
            per_image: 1,
            verbalize: VerbalizeOptions::default(),
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), GeneratorError> {
        for (name, value) in [
            ("p_two_object", self.p_two_object),
            ("p_negative", self.p_negative),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(GeneratorError::InvalidProbability { name, value });
            }
        }
        Ok(())
    }
}

/// Image ids that must never produce training examples.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExclusionSet {
    ids: HashSet<u64>,
}

impl ExclusionSet {
    pub fn from_ids(ids: impl IntoIterator<Item = u64>) -> Self {
        ExclusionSet {
            ids: ids.into_iter().collect(),
        }
    }

    pub fn contains(&self, image_id: u64) -> bool {
        self.ids.contains(&image_id)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Union of the image ids referenced by two benchmark splits. Rows whose
/// image field carries no extractable id are collected into one error.
pub fn build_exclusion_set(
    dev: &[VsrInstance],
    test: &[VsrInstance],
) -> Result<ExclusionSet, GeneratorError> {
    let mut ids = HashSet::new();
    let mut bad = Vec::new();
    for inst in dev.iter().chain(test.iter()) {
        match image_id_from_name(&inst.image) {
            Ok(id) => {
                ids.insert(id);
            }
            Err(_) => bad.push(format!("'{}'", inst.image)),
        }
    }
    if bad.is_empty() {
        Ok(ExclusionSet { ids })
    } else {
        Err(GeneratorError::BadImageRefs {
            count: bad.len(),
            details: bad.join(", "),
        })
    }
}

/// The per-image random stream. Determinism contract: the stream depends
/// only on `(seed, epoch, image_id)`, never on worker count or scene order,
/// so parallel generation is byte-reproducible.
pub fn per_image_rng(seed: u64, epoch: u64, image_id: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&epoch.to_le_bytes());
    key[16..24].copy_from_slice(&image_id.to_le_bytes());
    key[24..32].copy_from_slice(b"sstd-gen");
    ChaCha12Rng::from_seed(key)
}

/// Draws one example from `scene`. Draw order per attempt: category coin(s),
/// object indices, negative coin, relation index. Degenerate draws redraw
/// everything, up to [`SAMPLE_ATTEMPTS`] times.
pub fn sample_example(
    scene: &Scene,
    rng: &mut impl Rng,
    cfg: &GeneratorConfig,
) -> Result<SstdExample, GeneratorError> {
    let n = scene.objects.len();
    if n == 0 {
        return Err(GeneratorError::EmptyScene {
            image_id: scene.image_id,
        });
    }
    for _ in 0..SAMPLE_ATTEMPTS {
        let category = if n < 2 {
            RelationCategory::ObjectPosition
        } else if rng.random::<f64>() < cfg.p_two_object {
            if rng.random::<f64>() < 0.5 {
                RelationCategory::SizeComparison
            } else {
                RelationCategory::TwoObjectPositional
            }
        } else {
            RelationCategory::ObjectPosition
        };
        let subject_idx = rng.random_range(0..n);
        let object_idx = if category.arity() == 2 {
            // uniform over the other objects: sample 0..n-1 and skip subject
            let mut j = rng.random_range(0..n - 1);
            if j >= subject_idx {
                j += 1;
            }
            Some(j)
        } else {
            None
        };
        let negative = rng.random::<f64>() < cfg.p_negative;

        let subject_box = scene.objects[subject_idx]
            .bounding_box()
            .normalize(scene.width, scene.height)?;
        let object_box = object_idx
            .map(|j| {
                scene.objects[j]
                    .bounding_box()
                    .normalize(scene.width, scene.height)
            })
            .transpose()?;
        let candidates = if negative {
            false_relations(category, &subject_box, object_box.as_ref())
        } else {
            true_relations(category, &subject_box, object_box.as_ref())
        };
        let candidates = match candidates {
            Ok(set) if !set.is_empty() => set,
            // all-ties size comparison has no true relation to affirm
            Ok(_) => continue,
            // identical centers leave the directional relations undefined
            Err(RelationError::IdenticalCenters) => continue,
            Err(e) => return Err(e.into()),
        };
        let pick = rng.random_range(0..candidates.len());
        let relation = *candidates.iter().nth(pick).expect("checked non-empty");

        let subject = scene.objects[subject_idx].label.clone();
        let object = object_idx.map(|j| scene.objects[j].label.clone());
        let question = render_question(relation, &subject, object.as_deref())?;
        let description = scene_description(scene, cfg.grid, &cfg.verbalize)?.text;
        return Ok(SstdExample {
            question,
            description,
            answer: if negative { Answer::No } else { Answer::Yes },
            image_id: scene.image_id,
            relation,
            category,
            subject,
            object,
        });
    }
    Err(GeneratorError::RetriesExhausted {
        image_id: scene.image_id,
        attempts: SAMPLE_ATTEMPTS,
    })
}

/// All of one image's examples for one epoch, from its own seeded stream.
/// A retry-exhausted draw fails the whole image so callers can skip it.
pub fn image_examples(
    scene: &Scene,
    cfg: &GeneratorConfig,
    epoch: u64,
) -> Result<Vec<SstdExample>, GeneratorError> {
    let mut rng = per_image_rng(cfg.seed, epoch, scene.image_id);
    (0..cfg.per_image)
        .map(|_| sample_example(scene, &mut rng, cfg))
        .collect()
}

/// One epoch over the corpus: excluded images produce nothing, skip signals
/// (empty scene, retry exhaustion) are logged and dropped, and the output is
/// ordered by image id. Runs on the current rayon pool; the result does not
/// depend on the worker count.
pub fn generate_epoch(
    corpus: &[Scene],
    exclusion: &ExclusionSet,
    cfg: &GeneratorConfig,
    epoch: u64,
) -> Result<Vec<SstdExample>, GeneratorError> {
    cfg.validate()?;
    let mut scenes: Vec<&Scene> = corpus
        .iter()
        .filter(|s| !exclusion.contains(s.image_id))
        .collect();
    scenes.sort_by_key(|s| s.image_id);
    let per_image: Vec<Result<Vec<SstdExample>, GeneratorError>> = scenes
        .par_iter()
        .map(|scene| image_examples(scene, cfg, epoch))
        .collect();
    let mut out = Vec::new();
    for result in per_image {
        match result {
            Ok(examples) => out.extend(examples),
            Err(
                e @ (GeneratorError::EmptyScene { .. } | GeneratorError::RetriesExhausted { .. }),
            ) => log::warn!("epoch {epoch}: skipping image: {e}"),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Corpus-level counts for a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SstdStats {
    pub total: usize,
    pub images: usize,
    pub yes: usize,
    pub yes_fraction: f64,
    pub by_category: BTreeMap<String, usize>,
    pub by_relation: BTreeMap<String, usize>,
}

impl SstdStats {
    pub fn from_examples<'a>(examples: impl IntoIterator<Item = &'a SstdExample>) -> Self {
        let mut total = 0;
        let mut yes = 0;
        let mut image_ids = HashSet::new();
        let mut by_category = BTreeMap::new();
        let mut by_relation = BTreeMap::new();
        for ex in examples {
            total += 1;
            if ex.answer == Answer::Yes {
                yes += 1;
            }
            image_ids.insert(ex.image_id);
            *by_category
                .entry(ex.category.name().to_string())
                .or_insert(0) += 1;
            *by_relation
                .entry(ex.relation.name().to_string())
                .or_insert(0) += 1;
        }
        SstdStats {
            total,
            images: image_ids.len(),
            yes,
            yes_fraction: if total == 0 {
                0.0
            } else {
                yes as f64 / total as f64
            },
            by_category,
            by_relation,
        }
    }
}
