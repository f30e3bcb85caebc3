//! Reading detection dumps and benchmark files from disk.
//!
//! Writes a small detection JSON file and a benchmark JSONL file into a
//! temporary directory, parses both back, and derives the exclusion set
//! that keeps benchmark images out of generated training data. The file
//! formats are specified in `docs/formats.md`. Run with:
//!
//! ```text
//! cargo run --example ingest_files
//! ```

use std::fs;

use spatial_scenes::ingest::image_id_from_name;
use spatial_scenes::{build_exclusion_set, parse_detections, parse_vsr};

const DETECTIONS: &str = r#"[
  {
    "image_id": 9,
    "width": 640,
    "height": 480,
    "objects": [
      {"label": "cat", "attributes": ["black"], "bbox": [32, 48, 512, 288], "confidence": 0.98},
      {"label": "dining table", "bbox": [160, 0, 480, 480]}
    ]
  },
  {
    "image_id": 397133,
    "width": 800,
    "height": 600,
    "objects": [
      {"label": "person", "bbox": [100, 50, 200, 400], "confidence": 0.91}
    ]
  }
]"#;

const VSR_ROWS: &str = concat!(
    r#"{"image": "000000397133.jpg", "caption": "The person is left of the door.", "label": 1, "relation": "left of"}"#,
    "\n",
    r#"{"image": "COCO_val2014_000000050403.jpg", "caption": "The cat is touching the table.", "label": 0, "relation": "touching"}"#,
    "\n",
);

fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let detections_path = dir.path().join("detections.json");
    let vsr_path = dir.path().join("vsr_dev.jsonl");
    fs::write(&detections_path, DETECTIONS)?;
    fs::write(&vsr_path, VSR_ROWS)?;

    let scenes = parse_detections(&detections_path)?;
    println!("parsed {} scenes:", scenes.len());
    for scene in &scenes {
        println!(
            "  image {:6}: {}x{}, {} objects ({})",
            scene.image_id,
            scene.width,
            scene.height,
            scene.objects.len(),
            scene
                .objects
                .iter()
                .map(|o| o.label.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        );
    }

    let instances = parse_vsr(&vsr_path)?;
    println!("\nparsed {} benchmark rows:", instances.len());
    for instance in &instances {
        println!(
            "  {:40} label={} relation={:?} image_id={}",
            instance.caption,
            instance.label,
            instance.relation,
            image_id_from_name(&instance.image)?
        );
    }

    // Benchmark images must never feed the generator; the exclusion set is
    // the union of the ids referenced by the dev and test splits.
    let exclusion = build_exclusion_set(&instances, &[])?;
    println!("\nexclusion set: {} image id(s)", exclusion.len());
    for scene in &scenes {
        println!(
            "  image {:6} -> {}",
            scene.image_id,
            if exclusion.contains(scene.image_id) {
                "excluded from generation"
            } else {
                "available for generation"
            }
        );
    }
    Ok(())
}
