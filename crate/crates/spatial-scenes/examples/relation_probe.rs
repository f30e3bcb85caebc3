//! Deciding spatial relations from box geometry.
//!
//! Probes all 23 relations for a pair of boxes: the subject's position in
//! the image (9 region relations), size comparisons (6) and two-object
//! positional relations (8, decided by angle sectors, inscription and
//! overlap). Run with:
//!
//! ```text
//! cargo run --example relation_probe
//! ```

use spatial_scenes::relations::{false_relations, true_relations};
use spatial_scenes::{NormalizedBox, RelationCategory, holds};

fn main() -> anyhow::Result<()> {
    // Subject: small box in the upper left. Reference: wide box on the
    // right edge, vertically centered.
    let subject = NormalizedBox::new(0.10, 0.15, 0.30, 0.32)?;
    let reference = NormalizedBox::new(0.55, 0.40, 0.95, 0.60)?;

    println!("subject   {:?}", subject);
    println!("reference {:?}\n", reference);

    for category in RelationCategory::ALL {
        println!("{}:", category.name());
        for relation in category.relations() {
            let object = (relation.arity() == 2).then_some(&reference);
            let verdict = holds(*relation, &subject, object)?;
            println!("  {:12} {}", relation.name(), verdict);
        }
        println!();
    }

    // The generator uses the same machinery through these two set queries:
    // affirmative examples draw from the true set, negatives from the false
    // one.
    for category in RelationCategory::ALL {
        let object = (category.arity() == 2).then_some(&reference);
        let yes = true_relations(category, &subject, object)?;
        let no = false_relations(category, &subject, object)?;
        println!(
            "{}: {} true / {} false — true set: {:?}",
            category.name(),
            yes.len(),
            no.len(),
            yes.iter().map(|r| r.name()).collect::<Vec<_>>()
        );
    }

    // Boxes sharing a center have no direction between them; directional
    // checks report an error instead of guessing.
    let outer = NormalizedBox::new(0.2, 0.2, 0.8, 0.8)?;
    let inner = NormalizedBox::new(0.4, 0.4, 0.6, 0.6)?;
    println!(
        "\nconcentric boxes: left-of check -> {:?}",
        holds(
            spatial_scenes::SpatialRelation::LeftOf,
            &inner,
            Some(&outer)
        )
    );
    println!(
        "concentric boxes: inside check  -> {:?}",
        holds(
            spatial_scenes::SpatialRelation::Inside,
            &inner,
            Some(&outer)
        )
    );
    Ok(())
}
