//! Rendering between detected objects and their textual form.
//!
//! An object phrase is four location tokens followed by (optional) attributes
//! and the label: `"0 0 3 2 black cat"`. A scene description joins the
//! phrases of every detection, in detector order, with a separator. The
//! grammar is documented in `docs/formats.md`:
//!
//! ```text
//! phrase := INT INT INT INT (WORD)+ | (WORD)+
//! scene  := phrase (" . " phrase)*
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, GridConfig, LocationTokens};
use crate::ingest::{DetectedObject, Scene};
use crate::relations::{RelationCategory, RelationError, SpatialRelation};

#[derive(Debug, Error)]
pub enum VerbalizeError {
    #[error("scene {image_id} has no objects to describe")]
    EmptyScene { image_id: u64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Relation(#[from] RelationError),
    #[error("phrase parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },
}

/// Controls what an object phrase contains. Defaults follow the main dataset
/// configuration: location tokens on, attributes off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerbalizeOptions {
    pub locations: bool,
    pub attributes: bool,
    pub separator: String,
}

impl Default for VerbalizeOptions {
    fn default() -> Self {
        VerbalizeOptions {
            locations: true,
            attributes: false,
            separator: " . ".to_string(),
        }
    }
}

/// A verbalized scene plus the phrase count, so callers can check the
/// description against the number of detections without re-parsing.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneDescription {
    pub text: String,
    pub object_count: usize,
}

/// Renders one detection as a token phrase. With locations enabled the box is
/// normalized against the image and discretized on `grid`.
pub fn object_phrase(
    obj: &DetectedObject,
    image_w: f64,
    image_h: f64,
    grid: GridConfig,
    opts: &VerbalizeOptions,
) -> Result<String, VerbalizeError> {
    let mut parts: Vec<String> = Vec::new();
    if opts.locations {
        let tokens = obj
            .bounding_box()
            .normalize(image_w, image_h)?
            .location_tokens(grid);
        parts.push(tokens.to_string());
    }
    if opts.attributes {
        parts.extend(obj.attributes.iter().cloned());
    }
    parts.push(obj.label.clone());
    Ok(parts.join(" "))
}

/// Concatenates every object phrase of the scene, in detector order.
pub fn scene_description(
    scene: &Scene,
    grid: GridConfig,
    opts: &VerbalizeOptions,
) -> Result<SceneDescription, VerbalizeError> {
    if scene.objects.is_empty() {
        return Err(VerbalizeError::EmptyScene {
            image_id: scene.image_id,
        });
    }
    let phrases = scene
        .objects
        .iter()
        .map(|o| object_phrase(o, scene.width, scene.height, grid, opts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SceneDescription {
        text: phrases.join(&opts.separator),
        object_count: phrases.len(),
    })
}

/// Renders a yes/no question about `rel`. `obj2` must be given exactly for
/// two-object relations.
pub fn render_question(
    rel: SpatialRelation,
    obj1: &str,
    obj2: Option<&str>,
) -> Result<String, VerbalizeError> {
    let expected = rel.arity();
    let got = 1 + u8::from(obj2.is_some());
    if expected != got {
        return Err(RelationError::ArityMismatch {
            relation: rel.name(),
            expected,
            got,
        }
        .into());
    }
    let text = match rel.category() {
        RelationCategory::ObjectPosition => format!("is {obj1} in {} region?", rel.name()),
        RelationCategory::SizeComparison => {
            format!("is {obj1} {} than {}?", rel.name(), obj2.expect("arity"))
        }
        RelationCategory::TwoObjectPositional => {
            let obj2 = obj2.expect("arity");
            if rel == SpatialRelation::Separated {
                format!("are {obj1} and {obj2} separated?")
            } else {
                format!("is {obj1} {} {obj2}?", rel.name())
            }
        }
    };
    Ok(text)
}

/// The recoverable content of one phrase: tokens (when locations were
/// rendered) and the name field. Attribute/label segmentation is not
/// recoverable, so attributes — if present — stay glued to the name.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedPhrase {
    pub tokens: Option<LocationTokens>,
    pub name: String,
}

fn tokens_with_offsets(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in text.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s, &text[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, &text[s..]));
    }
    out
}

/// Inverse of [`object_phrase`]. With `locations` the phrase must start with
/// four integers in `[0, g)`; everything after them is the name.
pub fn parse_object_phrase(
    text: &str,
    grid: GridConfig,
    locations: bool,
) -> Result<ParsedPhrase, VerbalizeError> {
    let words = tokens_with_offsets(text);
    let parse_err = |position: usize, message: String| VerbalizeError::Parse { position, message };
    if !locations {
        if words.is_empty() {
            return Err(parse_err(0, "empty phrase".to_string()));
        }
        return Ok(ParsedPhrase {
            tokens: None,
            name: words.iter().map(|(_, w)| *w).collect::<Vec<_>>().join(" "),
        });
    }
    if words.len() < 5 {
        return Err(parse_err(
            0,
            format!(
                "expected 4 location tokens and a name, got {} word(s) in '{text}'",
                words.len()
            ),
        ));
    }
    let mut coords = [0u32; 4];
    for (slot, &(pos, word)) in coords.iter_mut().zip(&words[..4]) {
        let value: u32 = word
            .parse()
            .map_err(|_| parse_err(pos, format!("expected integer token, got '{word}'")))?;
        if value >= grid.g() {
            return Err(parse_err(
                pos,
                format!("token {value} outside grid 0..{}", grid.g()),
            ));
        }
        *slot = value;
    }
    Ok(ParsedPhrase {
        tokens: Some(LocationTokens {
            x0: coords[0],
            y0: coords[1],
            x1: coords[2],
            y1: coords[3],
        }),
        name: words[4..]
            .iter()
            .map(|(_, w)| *w)
            .collect::<Vec<_>>()
            .join(" "),
    })
}

/// Splits a scene description on `opts.separator` and parses every phrase.
pub fn parse_scene_description(
    text: &str,
    grid: GridConfig,
    opts: &VerbalizeOptions,
) -> Result<Vec<ParsedPhrase>, VerbalizeError> {
    text.split(&opts.separator)
        .map(|phrase| parse_object_phrase(phrase, grid, opts.locations))
        .collect()
}
