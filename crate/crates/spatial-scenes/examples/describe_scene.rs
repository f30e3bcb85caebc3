//! Verbalizing a detection scene as a textual description.
//!
//! Each detection becomes a phrase of location tokens, optional attributes
//! and its label; the scene description joins the phrases in detector order.
//! Run with:
//!
//! ```text
//! cargo run --example describe_scene
//! ```

use spatial_scenes::verbalize::parse_scene_description;
use spatial_scenes::{DetectedObject, GridConfig, Scene, VerbalizeOptions, scene_description};

fn detection(label: &str, attributes: &[&str], bbox: [f64; 4]) -> DetectedObject {
    DetectedObject {
        label: label.to_string(),
        attributes: attributes.iter().map(|a| a.to_string()).collect(),
        bbox,
        confidence: Some(0.9),
    }
}

fn main() -> anyhow::Result<()> {
    // A 640x480 frame with three detections, as a detector would emit them.
    let scene = Scene {
        image_id: 42,
        width: 640.0,
        height: 480.0,
        objects: vec![
            detection("cat", &["black", "sitting"], [32.0, 48.0, 512.0, 288.0]),
            detection("dining table", &["wooden"], [160.0, 0.0, 480.0, 480.0]),
            detection("cup", &[], [300.0, 60.0, 40.0, 50.0]),
        ],
    };
    let grid = GridConfig::new(4)?;

    let default_opts = VerbalizeOptions::default();
    let description = scene_description(&scene, grid, &default_opts)?;
    println!(
        "location tokens + labels ({} phrases):",
        description.object_count
    );
    println!("  {}\n", description.text);

    // Without location tokens the description degrades to bare labels —
    // useful as an ablation of how much the tokens matter.
    let no_locations = VerbalizeOptions {
        locations: false,
        ..VerbalizeOptions::default()
    };
    println!("names only:");
    println!(
        "  {}\n",
        scene_description(&scene, grid, &no_locations)?.text
    );

    // Attributes slot in between the tokens and the label.
    let with_attributes = VerbalizeOptions {
        attributes: true,
        ..VerbalizeOptions::default()
    };
    println!("with detector attributes:");
    println!(
        "  {}\n",
        scene_description(&scene, grid, &with_attributes)?.text
    );

    // Descriptions parse back: tokens and name per phrase.
    let parsed = parse_scene_description(&description.text, grid, &default_opts)?;
    println!("parsed back:");
    for phrase in parsed {
        println!(
            "  tokens {:?} name {:?}",
            phrase.tokens.expect("locations were on").to_string(),
            phrase.name
        );
    }
    Ok(())
}
