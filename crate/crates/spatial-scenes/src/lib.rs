//! Spatial scene descriptions and synthetic spatial-relation QA.
//!
//! The pipeline starts from object-detection output (labels, attributes and
//! pixel bounding boxes per image) and provides:
//!
//! - **Verbalization** ([`verbalize`]): each box is normalized, discretized
//!   on a G×G grid into four location tokens, and rendered with its label —
//!   `"0 0 3 2 cat"` — then whole scenes are joined into textual
//!   descriptions a language model can consume.
//! - **Relation geometry** ([`relations`], [`geometry`]): 23 spatial
//!   relations in three categories (image-region position, size comparison,
//!   two-object positional) decided purely from box coordinates — angle
//!   sectors between centers for left/right/above/below, inscription for
//!   inside/surrounding, overlap for the rest.
//! - **Dataset generation** ([`generator`]): seeded, worker-count-independent
//!   sampling of question/description/answer examples from scenes, with
//!   yes/no balancing, a configurable two-object share, and benchmark-image
//!   exclusion.
//! - **Rule solving** ([`solver`]): captions such as "The cat is left of the
//!   dog." are split over a 65-phrase relation lexicon, mapped through a
//!   17-entry table onto the geometric relations, grounded against the
//!   detections, and answered by geometry — falling back to a fair coin with
//!   a recorded failure reason.
//! - **Evaluation** ([`eval`]): accuracy overall, per relation and per
//!   category, rule-coverage accounting, and mean/std aggregation over runs.
//!
//! The `examples/` directory demonstrates each capability end to end; the
//! `spatial-scenes` binary ([`cli`]) exposes the same pipeline as
//! subcommands. File formats are specified in `docs/formats.md`.

pub mod cli;
pub mod eval;
pub mod generator;
pub mod geometry;
pub mod ingest;
pub mod relations;
pub mod solver;
pub mod verbalize;

pub use eval::{EvalReport, RunAggregate, RunAggregates, aggregate_runs, evaluate};
pub use generator::{
    ExclusionSet, GeneratorConfig, SstdExample, build_exclusion_set, generate_epoch, sample_example,
};
pub use geometry::{BoundingBox, GridConfig, LocationTokens, NormalizedBox};
pub use ingest::{DetectedObject, Scene, VsrInstance, parse_detections, parse_vsr};
pub use relations::{RelationCategory, SpatialRelation, holds};
pub use solver::{Prediction, RelationMapping, VsrLexicon, parse_caption, solve, solve_all};
pub use verbalize::{
    SceneDescription, VerbalizeOptions, object_phrase, render_question, scene_description,
};
