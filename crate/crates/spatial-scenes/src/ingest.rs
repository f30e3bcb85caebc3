//! Parsers for detector output files, VSR instance files and COCO image
//! identifiers.
//!
//! The detection schema is a versioned contract (see `docs/formats.md`): a
//! top-level array of `{image_id, width, height, objects}` entries with boxes
//! in `[x, y, w, h]` pixel form. Converters from other detector dumps are
//! expected to target this schema.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{BoundingBox, GeometryError};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: malformed JSON: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("{path}: image {image_id}: {message}")]
    Schema {
        path: String,
        image_id: u64,
        message: String,
    },
    #[error("{path}: duplicate image_id {image_id}")]
    DuplicateImage { path: String, image_id: u64 },
    #[error("{path}: {count} bad row(s):\n{details}")]
    Rows {
        path: String,
        count: usize,
        details: String,
    },
    #[error("cannot extract an image id from '{name}'")]
    NoImageId { name: String },
}

/// One detection: label, detector attributes and a pixel-space box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedObject {
    pub label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attributes: Vec<String>,
    /// `[x, y, w, h]` in pixels.
    pub bbox: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

impl DetectedObject {
    pub fn bounding_box(&self) -> BoundingBox {
        let [x, y, w, h] = self.bbox;
        BoundingBox::new(x, y, w, h)
    }

    /// Pixel area, used by the solver to break ties between label matches.
    pub fn pixel_area(&self) -> f64 {
        self.bbox[2] * self.bbox[3]
    }
}

/// One image's detections, in detector order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub image_id: u64,
    pub width: f64,
    pub height: f64,
    pub objects: Vec<DetectedObject>,
}

impl Scene {
    /// Drops objects below the confidence threshold; objects without a
    /// confidence score are always kept.
    pub fn filter_confidence(&mut self, min_confidence: f64) {
        self.objects
            .retain(|o| o.confidence.is_none_or(|c| c >= min_confidence));
    }
}

/// One VSR benchmark row: a caption asserting a spatial relation, with a
/// true/false label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VsrInstance {
    /// COCO image filename, e.g. `"000000397133.jpg"`.
    pub image: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_link: Option<String>,
    pub caption: String,
    pub label: bool,
    pub relation: String,
}

#[derive(Debug, Deserialize)]
struct RawVsrRow {
    image: String,
    #[serde(default)]
    image_link: Option<String>,
    caption: String,
    label: u8,
    relation: String,
}

/// Parses a detection dump. Every scene is validated: positive image
/// dimensions, positive box extents, non-empty labels, unique image ids.
pub fn parse_detections(path: impl AsRef<Path>) -> Result<Vec<Scene>, IngestError> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let mut file = File::open(path).map_err(|source| IngestError::Io {
        path: shown.clone(),
        source,
    })?;
    let mut raw = String::new();
    file.read_to_string(&mut raw)
        .map_err(|source| IngestError::Io {
            path: shown.clone(),
            source,
        })?;
    let scenes: Vec<Scene> = serde_json::from_str(&raw).map_err(|source| IngestError::Json {
        path: shown.clone(),
        source,
    })?;
    validate_scenes(&scenes, &shown)?;
    Ok(scenes)
}

pub fn validate_scenes(scenes: &[Scene], path: &str) -> Result<(), IngestError> {
    let mut seen = std::collections::HashSet::new();
    for scene in scenes {
        let schema_err = |message: String| IngestError::Schema {
            path: path.to_string(),
            image_id: scene.image_id,
            message,
        };
        if !seen.insert(scene.image_id) {
            return Err(IngestError::DuplicateImage {
                path: path.to_string(),
                image_id: scene.image_id,
            });
        }
        if !(scene.width > 0.0 && scene.height > 0.0) {
            return Err(schema_err(format!(
                "image dimensions must be positive, got {}x{}",
                scene.width, scene.height
            )));
        }
        for (idx, obj) in scene.objects.iter().enumerate() {
            if obj.label.trim().is_empty() {
                return Err(schema_err(format!("object {idx} has an empty label")));
            }
            if let Err(e) = obj.bounding_box().validate() {
                return Err(schema_err(format!("object {idx} ({}): {e}", obj.label)));
            }
        }
    }
    Ok(())
}

/// Serializes scenes back to the detection schema.
pub fn scenes_to_json(scenes: &[Scene]) -> String {
    serde_json::to_string_pretty(scenes).expect("scene serialization cannot fail")
}

/// Parses a VSR JSON-lines file. Rows with an unknown relation are kept (the
/// caller may warn); malformed rows are collected into a single consolidated
/// error listing every offender.
pub fn parse_vsr(path: impl AsRef<Path>) -> Result<Vec<VsrInstance>, IngestError> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: shown.clone(),
        source,
    })?;
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| IngestError::Io {
            path: shown.clone(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<RawVsrRow>(&line) {
            Ok(raw) => match raw.label {
                0 | 1 => rows.push(VsrInstance {
                    image: raw.image,
                    image_link: raw.image_link,
                    caption: raw.caption,
                    label: raw.label == 1,
                    relation: raw.relation,
                }),
                other => errors.push(format!(
                    "line {}: label must be 0 or 1, got {}",
                    lineno + 1,
                    other
                )),
            },
            Err(e) => errors.push(format!("line {}: {}", lineno + 1, e)),
        }
    }
    if errors.is_empty() {
        Ok(rows)
    } else {
        Err(IngestError::Rows {
            path: shown,
            count: errors.len(),
            details: errors.join("\n"),
        })
    }
}

/// Extracts the numeric image id from a COCO-style filename or a bare integer
/// string: trailing digits of the stem, so `"COCO_train2014_000000000009.jpg"`
/// gives 9 and `"397133"` gives 397133.
pub fn image_id_from_name(name: &str) -> Result<u64, IngestError> {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    let re = PATTERN.get_or_init(|| Regex::new(r"(\d+)(?:\.[A-Za-z]+)?$").expect("static regex"));
    re.captures(name)
        .and_then(|c| c.get(1))
        .and_then(|m| m.as_str().parse::<u64>().ok())
        .ok_or_else(|| IngestError::NoImageId {
            name: name.to_string(),
        })
}

impl From<GeometryError> for IngestError {
    fn from(e: GeometryError) -> Self {
        IngestError::NoImageId {
            name: e.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    const TWO_OBJECT_SCENE: &str = r#"[
        {"image_id": 9, "width": 640, "height": 480, "objects": [
            {"label": "cat", "attributes": ["black"], "bbox": [10, 20, 100, 80], "confidence": 0.98},
            {"label": "table", "bbox": [5, 40, 300, 200]}
        ]}
    ]"#;

    #[test]
    fn parse_detections_preserves_order() {
        let f = write_temp(TWO_OBJECT_SCENE);
        let scenes = parse_detections(f.path()).unwrap();
        assert_eq!(scenes.len(), 1);
        let scene = &scenes[0];
        assert_eq!(scene.image_id, 9);
        assert_eq!(scene.objects.len(), 2);
        assert_eq!(scene.objects[0].label, "cat");
        assert_eq!(scene.objects[1].label, "table");
        assert_eq!(scene.objects[0].bbox, [10.0, 20.0, 100.0, 80.0]);
        assert_eq!(scene.objects[1].confidence, None);
    }

    #[test]
    fn parse_detections_keeps_xywh_convention() {
        let f = write_temp(
            r#"[{"image_id": 1, "width": 400, "height": 200,
                 "objects": [{"label": "cat", "bbox": [100, 50, 200, 100]}]}]"#,
        );
        let scenes = parse_detections(f.path()).unwrap();
        let b = scenes[0].objects[0].bounding_box();
        assert_eq!((b.x0, b.y0, b.w, b.h), (100.0, 50.0, 200.0, 100.0));
    }

    #[test]
    fn parse_detections_rejects_zero_width_image() {
        let f = write_temp(r#"[{"image_id": 7, "width": 0, "height": 100, "objects": []}]"#);
        let err = parse_detections(f.path()).unwrap_err();
        assert!(err.to_string().contains("image 7"), "got: {err}");
    }

    #[test]
    fn parse_detections_rejects_duplicate_ids() {
        let f = write_temp(
            r#"[{"image_id": 3, "width": 10, "height": 10, "objects": []},
                {"image_id": 3, "width": 10, "height": 10, "objects": []}]"#,
        );
        assert!(matches!(
            parse_detections(f.path()),
            Err(IngestError::DuplicateImage { image_id: 3, .. })
        ));
    }

    #[test]
    fn parse_detections_names_bad_object() {
        let f = write_temp(
            r#"[{"image_id": 5, "width": 100, "height": 100,
                 "objects": [{"label": "cat", "bbox": [0, 0, 0, 10]}]}]"#,
        );
        let err = parse_detections(f.path()).unwrap_err().to_string();
        assert!(
            err.contains("image 5") && err.contains("object 0"),
            "got: {err}"
        );
    }

    #[test]
    fn scene_roundtrip_is_lossless() {
        let f = write_temp(TWO_OBJECT_SCENE);
        let scenes = parse_detections(f.path()).unwrap();
        let back = scenes_to_json(&scenes);
        let reparsed: Vec<Scene> = serde_json::from_str(&back).unwrap();
        assert_eq!(scenes, reparsed);
    }

    #[test]
    fn filter_confidence_keeps_unscored() {
        let f = write_temp(TWO_OBJECT_SCENE);
        let mut scenes = parse_detections(f.path()).unwrap();
        scenes[0].filter_confidence(0.99);
        // cat at 0.98 dropped, unscored table kept
        assert_eq!(scenes[0].objects.len(), 1);
        assert_eq!(scenes[0].objects[0].label, "table");
    }

    #[test]
    fn parse_vsr_labels() {
        let f = write_temp(concat!(
            r#"{"image": "000000050403.jpg", "image_link": "http://example/50403", "caption": "The cat is left of the dog.", "label": 1, "relation": "left of"}"#,
            "\n",
            r#"{"image": "000000001234.jpg", "caption": "The dog is above the cat.", "label": 0, "relation": "above"}"#,
            "\n",
        ));
        let rows = parse_vsr(f.path()).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].label);
        assert!(!rows[1].label);
        assert_eq!(rows[0].relation, "left of");
    }

    #[test]
    fn parse_vsr_empty_file() {
        let f = write_temp("");
        assert!(parse_vsr(f.path()).unwrap().is_empty());
    }

    #[test]
    fn parse_vsr_collects_all_bad_rows() {
        let f = write_temp(concat!(
            r#"{"image": "1.jpg", "caption": "c", "label": 1, "relation": "on"}"#,
            "\n",
            r#"{"image": "2.jpg", "caption": "c"}"#,
            "\n",
            r#"{"image": "3.jpg", "caption": "c", "label": 7, "relation": "on"}"#,
            "\n",
        ));
        match parse_vsr(f.path()) {
            Err(IngestError::Rows { count, details, .. }) => {
                assert_eq!(count, 2);
                assert!(details.contains("line 2"));
                assert!(details.contains("line 3"));
            }
            other => panic!("expected consolidated row errors, got {other:?}"),
        }
    }

    #[test]
    fn image_id_extraction() {
        assert_eq!(
            image_id_from_name("COCO_train2014_000000000009.jpg").unwrap(),
            9
        );
        assert_eq!(
            image_id_from_name("COCO_val2014_000000397133.jpg").unwrap(),
            397133
        );
        assert_eq!(image_id_from_name("000000050403.jpg").unwrap(), 50403);
        assert_eq!(image_id_from_name("397133").unwrap(), 397133);
        assert!(image_id_from_name("cat.png").is_err());
        assert!(image_id_from_name("").is_err());
    }
}
