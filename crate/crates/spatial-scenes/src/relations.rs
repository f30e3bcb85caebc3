//! The 23 spatial relations as decidable predicates over one or two
//! normalized boxes.
//!
//! Relations come in three categories: nine one-object image regions, six
//! two-object size comparisons (strict inequalities, so ties yield neither
//! direction), and eight two-object positional relations. Directional
//! relations partition the plane into four quarter-plane sectors around the
//! reference center; `left of` is the sector complement `|theta| >= 3*pi/4`.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, NormalizedBox, center_angle};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RelationError {
    #[error("relation '{relation}' takes {expected} object(s) but {got} were given")]
    ArityMismatch {
        relation: &'static str,
        expected: u8,
        got: u8,
    },
    #[error("box centers coincide, directional relations are undefined")]
    IdenticalCenters,
}

impl From<GeometryError> for RelationError {
    fn from(_: GeometryError) -> Self {
        RelationError::IdenticalCenters
    }
}

/// The three relation families. Object-position relations describe a single
/// box; the other two compare a subject box against an object box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RelationCategory {
    #[serde(rename = "object_position")]
    ObjectPosition,
    #[serde(rename = "size_comparison")]
    SizeComparison,
    #[serde(rename = "two_object_positional")]
    TwoObjectPositional,
}

impl RelationCategory {
    pub const ALL: [RelationCategory; 3] = [
        RelationCategory::ObjectPosition,
        RelationCategory::SizeComparison,
        RelationCategory::TwoObjectPositional,
    ];

    pub fn arity(self) -> u8 {
        match self {
            RelationCategory::ObjectPosition => 1,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RelationCategory::ObjectPosition => "object_position",
            RelationCategory::SizeComparison => "size_comparison",
            RelationCategory::TwoObjectPositional => "two_object_positional",
        }
    }

    /// All relations in this category, in canonical order.
    pub fn relations(self) -> &'static [SpatialRelation] {
        use SpatialRelation::*;
        match self {
            RelationCategory::ObjectPosition => &[
                TopLeft,
                BottomLeft,
                Left,
                TopRight,
                BottomRight,
                Right,
                Top,
                Bottom,
                Center,
            ],
            RelationCategory::SizeComparison => {
                &[Wider, Narrower, Taller, Shorter, Larger, Smaller]
            }
            RelationCategory::TwoObjectPositional => &[
                Surrounding,
                Inside,
                LeftOf,
                Above,
                RightOf,
                Below,
                Overlapping,
                Separated,
            ],
        }
    }
}

/// The 23 relations. Serialized (and displayed) using their surface forms,
/// e.g. `"top left"`, `"left of"`; these exact strings appear in every file
/// format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SpatialRelation {
    // object position in the image
    #[serde(rename = "top left")]
    TopLeft,
    #[serde(rename = "bottom left")]
    BottomLeft,
    #[serde(rename = "left")]
    Left,
    #[serde(rename = "top right")]
    TopRight,
    #[serde(rename = "bottom right")]
    BottomRight,
    #[serde(rename = "right")]
    Right,
    #[serde(rename = "top")]
    Top,
    #[serde(rename = "bottom")]
    Bottom,
    #[serde(rename = "center")]
    Center,
    // object size comparison
    #[serde(rename = "wider")]
    Wider,
    #[serde(rename = "narrower")]
    Narrower,
    #[serde(rename = "taller")]
    Taller,
    #[serde(rename = "shorter")]
    Shorter,
    #[serde(rename = "larger")]
    Larger,
    #[serde(rename = "smaller")]
    Smaller,
    // two object positional relations
    #[serde(rename = "surrounding")]
    Surrounding,
    #[serde(rename = "inside")]
    Inside,
    #[serde(rename = "left of")]
    LeftOf,
    #[serde(rename = "above")]
    Above,
    #[serde(rename = "right of")]
    RightOf,
    #[serde(rename = "below")]
    Below,
    #[serde(rename = "overlapping")]
    Overlapping,
    #[serde(rename = "separated")]
    Separated,
}

impl SpatialRelation {
    pub const ALL: [SpatialRelation; 23] = {
        use SpatialRelation::*;
        [
            TopLeft,
            BottomLeft,
            Left,
            TopRight,
            BottomRight,
            Right,
            Top,
            Bottom,
            Center,
            Wider,
            Narrower,
            Taller,
            Shorter,
            Larger,
            Smaller,
            Surrounding,
            Inside,
            LeftOf,
            Above,
            RightOf,
            Below,
            Overlapping,
            Separated,
        ]
    };

    pub fn name(self) -> &'static str {
        use SpatialRelation::*;
        match self {
            TopLeft => "top left",
            BottomLeft => "bottom left",
            Left => "left",
            TopRight => "top right",
            BottomRight => "bottom right",
            Right => "right",
            Top => "top",
            Bottom => "bottom",
            Center => "center",
            Wider => "wider",
            Narrower => "narrower",
            Taller => "taller",
            Shorter => "shorter",
            Larger => "larger",
            Smaller => "smaller",
            Surrounding => "surrounding",
            Inside => "inside",
            LeftOf => "left of",
            Above => "above",
            RightOf => "right of",
            Below => "below",
            Overlapping => "overlapping",
            Separated => "separated",
        }
    }

    pub fn from_name(name: &str) -> Option<SpatialRelation> {
        SpatialRelation::ALL
            .iter()
            .copied()
            .find(|r| r.name() == name)
    }

    pub fn category(self) -> RelationCategory {
        use SpatialRelation::*;
        match self {
            TopLeft | BottomLeft | Left | TopRight | BottomRight | Right | Top | Bottom
            | Center => RelationCategory::ObjectPosition,
            Wider | Narrower | Taller | Shorter | Larger | Smaller => {
                RelationCategory::SizeComparison
            }
            _ => RelationCategory::TwoObjectPositional,
        }
    }

    pub fn arity(self) -> u8 {
        self.category().arity()
    }
}

impl std::fmt::Display for SpatialRelation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

// Region rectangles for position classification.
const QUADRANTS: [(SpatialRelation, [f64; 4]); 4] = [
    (SpatialRelation::TopLeft, [0.0, 0.0, 0.5, 0.5]),
    (SpatialRelation::TopRight, [0.5, 0.0, 1.0, 0.5]),
    (SpatialRelation::BottomLeft, [0.0, 0.5, 0.5, 1.0]),
    (SpatialRelation::BottomRight, [0.5, 0.5, 1.0, 1.0]),
];

const HALVES: [(SpatialRelation, [f64; 4]); 4] = [
    (SpatialRelation::Top, [0.0, 0.0, 1.0, 0.5]),
    (SpatialRelation::Bottom, [0.0, 0.5, 1.0, 1.0]),
    (SpatialRelation::Left, [0.0, 0.0, 0.5, 1.0]),
    (SpatialRelation::Right, [0.5, 0.0, 1.0, 1.0]),
];

/// Classifies a box into exactly one of the nine image regions: quadrants are
/// tried first, then halves, otherwise the box is in the center. Within each
/// tier the first listed region wins.
pub fn position_in_image(nbox: &NormalizedBox) -> SpatialRelation {
    let tier = |regions: &[(SpatialRelation, [f64; 4])]| {
        regions.iter().find_map(|(rel, [x0, y0, x1, y1])| {
            let region = NormalizedBox::new(*x0, *y0, *x1, *y1).expect("static region");
            nbox.inscribed_in(&region).then_some(*rel)
        })
    };
    tier(&QUADRANTS)
        .or_else(|| tier(&HALVES))
        .unwrap_or(SpatialRelation::Center)
}

/// Maps an angle in `(-pi, pi]` (image coordinates, y down) to its directional
/// relation. Sectors are half-open on the lower bound: `right of` is
/// `[-pi/4, pi/4)`, `above` is `[-3pi/4, -pi/4)`, `below` is `[pi/4, 3pi/4)`
/// and `left of` is everything else.
pub fn sector_relation(theta: f64) -> SpatialRelation {
    if (-FRAC_PI_4..FRAC_PI_4).contains(&theta) {
        SpatialRelation::RightOf
    } else if (-3.0 * FRAC_PI_4..-FRAC_PI_4).contains(&theta) {
        SpatialRelation::Above
    } else if (FRAC_PI_4..3.0 * FRAC_PI_4).contains(&theta) {
        SpatialRelation::Below
    } else {
        SpatialRelation::LeftOf
    }
}

/// Decides whether `rel` holds for the subject (and object, for two-object
/// relations). The object must be present exactly when the relation compares
/// two boxes.
pub fn holds(
    rel: SpatialRelation,
    subject: &NormalizedBox,
    object: Option<&NormalizedBox>,
) -> Result<bool, RelationError> {
    use SpatialRelation::*;
    let expected = rel.arity();
    let got = 1 + u8::from(object.is_some());
    if expected != got {
        return Err(RelationError::ArityMismatch {
            relation: rel.name(),
            expected,
            got,
        });
    }
    if rel.category() == RelationCategory::ObjectPosition {
        return Ok(position_in_image(subject) == rel);
    }
    let object = object.expect("arity checked above");
    let value = match rel {
        Wider => subject.width() > object.width(),
        Narrower => subject.width() < object.width(),
        Taller => subject.height() > object.height(),
        Shorter => subject.height() < object.height(),
        Larger => subject.area() > object.area(),
        Smaller => subject.area() < object.area(),
        Inside => subject.inscribed_in(object),
        Surrounding => object.inscribed_in(subject),
        Overlapping => subject.iou(object) > 0.0,
        Separated => subject.iou(object) == 0.0,
        LeftOf | RightOf | Above | Below => sector_relation(center_angle(subject, object)?) == rel,
        _ => unreachable!("one-object relations handled above"),
    };
    Ok(value)
}

/// All relations in `category` that hold for the given boxes.
pub fn true_relations(
    category: RelationCategory,
    subject: &NormalizedBox,
    object: Option<&NormalizedBox>,
) -> Result<BTreeSet<SpatialRelation>, RelationError> {
    category
        .relations()
        .iter()
        .copied()
        .filter_map(|rel| match holds(rel, subject, object) {
            Ok(true) => Some(Ok(rel)),
            Ok(false) => None,
            Err(e) => Some(Err(e)),
        })
        .collect()
}

/// Complement of [`true_relations`] within the category.
pub fn false_relations(
    category: RelationCategory,
    subject: &NormalizedBox,
    object: Option<&NormalizedBox>,
) -> Result<BTreeSet<SpatialRelation>, RelationError> {
    let held = true_relations(category, subject, object)?;
    Ok(category
        .relations()
        .iter()
        .copied()
        .filter(|rel| !held.contains(rel))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn nbox(x0: f64, y0: f64, x1: f64, y1: f64) -> NormalizedBox {
        NormalizedBox::new(x0, y0, x1, y1).unwrap()
    }

    #[test]
    fn every_relation_has_exactly_one_category() {
        assert_eq!(SpatialRelation::ALL.len(), 23);
        let mut counts = [0usize; 3];
        for rel in SpatialRelation::ALL {
            let idx = RelationCategory::ALL
                .iter()
                .position(|c| *c == rel.category())
                .unwrap();
            counts[idx] += 1;
            assert!(rel.category().relations().contains(&rel));
        }
        assert_eq!(counts, [9, 6, 8]);
    }

    #[test]
    fn names_roundtrip() {
        for rel in SpatialRelation::ALL {
            assert_eq!(SpatialRelation::from_name(rel.name()), Some(rel));
            let json = serde_json::to_string(&rel).unwrap();
            assert_eq!(json, format!("\"{}\"", rel.name()));
        }
        assert_eq!(SpatialRelation::from_name("beside"), None);
    }

    #[test]
    fn region_quadrant() {
        assert_eq!(
            position_in_image(&nbox(0.1, 0.1, 0.4, 0.4)),
            SpatialRelation::TopLeft
        );
    }

    #[test]
    fn region_half() {
        assert_eq!(
            position_in_image(&nbox(0.1, 0.2, 0.45, 0.9)),
            SpatialRelation::Left
        );
    }

    #[test]
    fn region_center_fallback() {
        assert_eq!(
            position_in_image(&nbox(0.3, 0.3, 0.7, 0.7)),
            SpatialRelation::Center
        );
    }

    #[test]
    fn sector_boundaries_belong_to_one_sector() {
        use SpatialRelation::*;
        assert_eq!(sector_relation(0.0), RightOf);
        assert_eq!(sector_relation(-FRAC_PI_4), RightOf);
        assert_eq!(sector_relation(FRAC_PI_4), Below);
        assert_eq!(sector_relation(3.0 * FRAC_PI_4), LeftOf);
        assert_eq!(sector_relation(-3.0 * FRAC_PI_4), Above);
        assert_eq!(sector_relation(std::f64::consts::PI), LeftOf);
    }

    #[test]
    fn holds_right_of_at_zero_angle() {
        let object = nbox(0.1, 0.4, 0.3, 0.6);
        let subject = nbox(0.7, 0.4, 0.9, 0.6);
        assert_eq!(
            holds(SpatialRelation::RightOf, &subject, Some(&object)),
            Ok(true)
        );
        assert_eq!(
            holds(SpatialRelation::LeftOf, &object, Some(&subject)),
            Ok(true)
        );
    }

    #[test]
    fn holds_inside_and_surrounding() {
        let inner = nbox(0.2, 0.2, 0.4, 0.4);
        let outer = nbox(0.1, 0.1, 0.5, 0.5);
        assert_eq!(
            holds(SpatialRelation::Inside, &inner, Some(&outer)),
            Ok(true)
        );
        assert_eq!(
            holds(SpatialRelation::Surrounding, &outer, Some(&inner)),
            Ok(true)
        );
    }

    #[test]
    fn size_tie_yields_neither() {
        let a = nbox(0.0, 0.0, 0.5, 0.3);
        let b = nbox(0.5, 0.5, 1.0, 0.9);
        assert_eq!(holds(SpatialRelation::Wider, &a, Some(&b)), Ok(false));
        assert_eq!(holds(SpatialRelation::Narrower, &a, Some(&b)), Ok(false));
    }

    #[test]
    fn arity_is_enforced() {
        let a = nbox(0.0, 0.0, 0.5, 0.5);
        assert!(matches!(
            holds(SpatialRelation::Wider, &a, None),
            Err(RelationError::ArityMismatch {
                expected: 2,
                got: 1,
                ..
            })
        ));
        assert!(matches!(
            holds(SpatialRelation::TopLeft, &a, Some(&a)),
            Err(RelationError::ArityMismatch {
                expected: 1,
                got: 2,
                ..
            })
        ));
    }

    #[test]
    fn identical_centers_propagate() {
        let a = nbox(0.2, 0.2, 0.6, 0.6);
        let b = nbox(0.3, 0.3, 0.5, 0.5);
        assert_eq!(
            holds(SpatialRelation::LeftOf, &a, Some(&b)),
            Err(RelationError::IdenticalCenters)
        );
        assert!(true_relations(RelationCategory::TwoObjectPositional, &a, Some(&b)).is_err());
        // Non-directional predicates still decide.
        assert_eq!(holds(SpatialRelation::Surrounding, &a, Some(&b)), Ok(true));
    }

    #[test]
    fn true_relations_disjoint_subject_left() {
        let subject = nbox(0.0, 0.4, 0.2, 0.6);
        let object = nbox(0.8, 0.4, 1.0, 0.6);
        let set = true_relations(
            RelationCategory::TwoObjectPositional,
            &subject,
            Some(&object),
        )
        .unwrap();
        let expected: BTreeSet<_> = [SpatialRelation::LeftOf, SpatialRelation::Separated].into();
        assert_eq!(set, expected);
    }

    #[test]
    fn true_relations_identical_boxes_all_size_ties() {
        let a = nbox(0.1, 0.1, 0.6, 0.6);
        let set = true_relations(RelationCategory::SizeComparison, &a, Some(&a)).unwrap();
        assert!(set.is_empty());
    }

    #[test]
    fn true_relations_position_is_singleton() {
        let a = nbox(0.6, 0.1, 0.9, 0.4);
        let set = true_relations(RelationCategory::ObjectPosition, &a, None).unwrap();
        assert_eq!(set.len(), 1);
        assert!(set.contains(&SpatialRelation::TopRight));
    }

    #[test]
    fn false_relations_region_complement() {
        let a = nbox(0.1, 0.1, 0.4, 0.4);
        let set = false_relations(RelationCategory::ObjectPosition, &a, None).unwrap();
        assert_eq!(set.len(), 8);
        assert!(!set.contains(&SpatialRelation::TopLeft));
    }

    #[test]
    fn false_relations_inscribed_pair() {
        let inner = nbox(0.2, 0.2, 0.4, 0.4);
        let outer = nbox(0.1, 0.1, 0.5, 0.5);
        let set =
            false_relations(RelationCategory::TwoObjectPositional, &inner, Some(&outer)).unwrap();
        // IoU > 0, so `separated` is false; `inside` holds so it is excluded.
        assert!(set.contains(&SpatialRelation::Separated));
        assert!(!set.contains(&SpatialRelation::Inside));
        assert!(!set.contains(&SpatialRelation::Overlapping));
    }

    #[test]
    fn false_relations_strict_dominance() {
        let big = nbox(0.0, 0.0, 0.8, 0.8);
        let small = nbox(0.0, 0.0, 0.3, 0.3);
        let set = false_relations(RelationCategory::SizeComparison, &big, Some(&small)).unwrap();
        let expected: BTreeSet<_> = [
            SpatialRelation::Narrower,
            SpatialRelation::Shorter,
            SpatialRelation::Smaller,
        ]
        .into();
        assert_eq!(set, expected);
    }

    prop_compose! {
        fn arb_nbox()(x0 in 0.0..0.99f64, y0 in 0.0..0.99f64,
                      w in 0.01..1.0f64, h in 0.01..1.0f64) -> NormalizedBox {
            NormalizedBox::new(x0, y0, (x0 + w).min(1.0), (y0 + h).min(1.0)).unwrap()
        }
    }

    proptest! {
        #[test]
        fn prop_exactly_one_sector(a in arb_nbox(), b in arb_nbox()) {
            use SpatialRelation::*;
            if center_angle(&a, &b).is_ok() {
                let n = [LeftOf, RightOf, Above, Below]
                    .iter()
                    .filter(|r| holds(**r, &a, Some(&b)).unwrap())
                    .count();
                prop_assert_eq!(n, 1);
            }
        }

        #[test]
        fn prop_dualities(a in arb_nbox(), b in arb_nbox()) {
            use SpatialRelation::*;
            let pairs = [
                (LeftOf, RightOf),
                (Above, Below),
                (Wider, Narrower),
                (Taller, Shorter),
                (Larger, Smaller),
                (Inside, Surrounding),
            ];
            for (rel, dual) in pairs {
                let fwd = holds(rel, &a, Some(&b));
                let rev = holds(dual, &b, Some(&a));
                prop_assert_eq!(fwd, rev);
            }
        }

        #[test]
        fn prop_overlap_separation_dichotomy(a in arb_nbox(), b in arb_nbox()) {
            let o = holds(SpatialRelation::Overlapping, &a, Some(&b)).unwrap();
            let s = holds(SpatialRelation::Separated, &a, Some(&b)).unwrap();
            prop_assert!(o != s);
        }

        #[test]
        fn prop_position_total(a in arb_nbox()) {
            let region = position_in_image(&a);
            prop_assert_eq!(region.category(), RelationCategory::ObjectPosition);
        }

        #[test]
        fn prop_inside_implies_overlap(a in arb_nbox(), b in arb_nbox()) {
            if holds(SpatialRelation::Inside, &a, Some(&b)).unwrap() {
                prop_assert!(holds(SpatialRelation::Overlapping, &a, Some(&b)).unwrap());
            }
        }
    }
}
