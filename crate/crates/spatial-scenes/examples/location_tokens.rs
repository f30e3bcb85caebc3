//! Discretizing bounding boxes into location tokens.
//!
//! A detector box (pixel x, y, width, height) is normalized against the
//! image and its two corners are snapped to cells of a G×G grid, giving four
//! integers that verbalize the box position. Run with:
//!
//! ```text
//! cargo run --example location_tokens
//! ```

use spatial_scenes::{BoundingBox, GridConfig};

fn main() -> anyhow::Result<()> {
    // The reference box: corners (0.05, 0.10) and (0.85, 0.70) of a unit
    // image. On a 4x4 grid it lands on tokens "0 0 3 2".
    let image = (1.0, 1.0);
    let cat = BoundingBox::new(0.05, 0.10, 0.80, 0.60);
    let normalized = cat.normalize(image.0, image.1)?;

    println!(
        "box corners: ({}, {}) .. ({}, {})",
        normalized.x0(),
        normalized.y0(),
        normalized.x1(),
        normalized.y1()
    );
    for g in [4, 8, 32] {
        let grid = GridConfig::new(g)?;
        println!(
            "G = {g:2} -> tokens \"{}\"",
            normalized.location_tokens(grid)
        );
    }

    // Pixel-space boxes work the same; normalization happens against the
    // image dimensions. 640x480 frame, box at (64, 120) sized 320x120:
    let pixel_box = BoundingBox::new(64.0, 120.0, 320.0, 120.0);
    let normalized = pixel_box.normalize(640.0, 480.0)?;
    let grid = GridConfig::default(); // G = 32
    println!(
        "\n640x480 box (64, 120, 320, 120) -> \"{}\" on the default {}x{} grid",
        normalized.location_tokens(grid),
        grid.g(),
        grid.g()
    );

    // Tokens never leave the grid: a box hugging the far corner still maps
    // to cell G-1, and a box wider than the image is clamped to the border
    // before discretization.
    let corner = BoundingBox::new(639.0, 479.0, 1.0, 1.0).normalize(640.0, 480.0)?;
    println!(
        "far-corner sliver          -> \"{}\"",
        corner.location_tokens(grid)
    );
    let overhang = BoundingBox::new(600.0, 400.0, 200.0, 200.0).normalize(640.0, 480.0)?;
    println!(
        "box overhanging the border -> \"{}\"",
        overhang.location_tokens(grid)
    );
    Ok(())
}
