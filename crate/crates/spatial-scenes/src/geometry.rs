//! Bounding-box arithmetic: normalization, grid discretization into location
//! tokens, IoU, inscription tests and center angles.
//!
//! All angle computations use image coordinates, i.e. y grows downward. An
//! angle of `-pi/2` therefore means "directly above in the image".

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("image dimensions must be positive, got {width}x{height}")]
    NonPositiveImageDims { width: f64, height: f64 },
    #[error("bounding box must have positive extent, got w={width}, h={height}")]
    NonPositiveBoxExtent { width: f64, height: f64 },
    #[error("bounding box origin must be non-negative, got ({x0}, {y0})")]
    NegativeOrigin { x0: f64, y0: f64 },
    #[error("normalized box corners must satisfy 0 <= x0 <= x1 <= 1 and 0 <= y0 <= y1 <= 1")]
    InvalidCorners,
    #[error("grid resolution must be at least 1")]
    InvalidGrid,
    #[error("box centers coincide, angle is undefined")]
    IdenticalCenters,
}

/// A detector bounding box in pixel space, `(x0, y0, width, height)`.
///
/// Validity (`width > 0`, `height > 0`, non-negative origin) is enforced where
/// it matters: [`BoundingBox::normalize`] and the detection-file parser.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x0: f64,
    pub y0: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(x0: f64, y0: f64, w: f64, h: f64) -> Self {
        Self { x0, y0, w, h }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.w > 0.0 && self.h > 0.0) {
            return Err(GeometryError::NonPositiveBoxExtent {
                width: self.w,
                height: self.h,
            });
        }
        if self.x0 < 0.0 || self.y0 < 0.0 {
            return Err(GeometryError::NegativeOrigin {
                x0: self.x0,
                y0: self.y0,
            });
        }
        Ok(())
    }

    /// Converts to corner form on the unit square, dividing by the image
    /// dimensions. Boxes overhanging the image border are clamped to `[0, 1]`;
    /// detectors emit such boxes routinely.
    pub fn normalize(&self, image_w: f64, image_h: f64) -> Result<NormalizedBox, GeometryError> {
        if !(image_w > 0.0 && image_h > 0.0) {
            return Err(GeometryError::NonPositiveImageDims {
                width: image_w,
                height: image_h,
            });
        }
        self.validate()?;
        let clamp = |v: f64| v.clamp(0.0, 1.0);
        NormalizedBox::new(
            clamp(self.x0 / image_w),
            clamp(self.y0 / image_h),
            clamp((self.x0 + self.w) / image_w),
            clamp((self.y0 + self.h) / image_h),
        )
    }
}

/// A box in corner form on the unit square: `0 <= x0 <= x1 <= 1`,
/// `0 <= y0 <= y1 <= 1`. Degenerate (zero-extent) boxes are allowed; they can
/// arise when a detection is clamped against the image border.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedBox {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
}

impl NormalizedBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, GeometryError> {
        let ordered = x0 <= x1 && y0 <= y1;
        let in_range = (0.0..=1.0).contains(&x0)
            && (0.0..=1.0).contains(&x1)
            && (0.0..=1.0).contains(&y0)
            && (0.0..=1.0).contains(&y1);
        if !(ordered && in_range) {
            return Err(GeometryError::InvalidCorners);
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn y0(&self) -> f64 {
        self.y0
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }

    pub fn y1(&self) -> f64 {
        self.y1
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn measures(&self) -> BoxMeasures {
        BoxMeasures {
            width: self.width(),
            height: self.height(),
            area: self.area(),
        }
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)
    }

    /// True iff `self` lies entirely within `outer`, boundaries inclusive.
    /// Every box is inscribed in itself.
    pub fn inscribed_in(&self, outer: &NormalizedBox) -> bool {
        self.x0 >= outer.x0 && self.y0 >= outer.y0 && self.x1 <= outer.x1 && self.y1 <= outer.y1
    }

    /// Intersection over union. Edge-touching rectangles have a measure-zero
    /// intersection and count as 0.
    pub fn iou(&self, other: &NormalizedBox) -> f64 {
        let iw = (self.x1.min(other.x1) - self.x0.max(other.x0)).max(0.0);
        let ih = (self.y1.min(other.y1) - self.y0.max(other.y0)).max(0.0);
        let inter = iw * ih;
        let union = self.area() + other.area() - inter;
        if union <= 0.0 { 0.0 } else { inter / union }
    }

    /// Discretizes each corner coordinate to its grid cell: `floor(c * G)`,
    /// clamped to `G - 1` so that `c = 1.0` lands in the last cell.
    pub fn location_tokens(&self, grid: GridConfig) -> LocationTokens {
        let g = grid.g();
        let cell = |c: f64| ((c * f64::from(g)).floor() as u32).min(g - 1);
        LocationTokens {
            x0: cell(self.x0),
            y0: cell(self.y0),
            x1: cell(self.x1),
            y1: cell(self.y1),
        }
    }
}

/// Width, height and area of a normalized box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxMeasures {
    pub width: f64,
    pub height: f64,
    pub area: f64,
}

/// Grid resolution for discretization. The default of 32 matches the
/// configuration used everywhere unless overridden.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridConfig {
    g: u32,
}

impl GridConfig {
    pub const DEFAULT_G: u32 = 32;

    pub fn new(g: u32) -> Result<Self, GeometryError> {
        if g < 1 {
            return Err(GeometryError::InvalidGrid);
        }
        Ok(Self { g })
    }

    pub fn g(&self) -> u32 {
        self.g
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { g: Self::DEFAULT_G }
    }
}

/// Four grid-cell indices `(x0, y0, x1, y1)` encoding a discretized box.
/// Renders as space-joined base-10 integers, e.g. `0 0 3 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocationTokens {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl fmt::Display for LocationTokens {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {}", self.x0, self.y0, self.x1, self.y1)
    }
}

/// Angle of the subject's center as seen from the reference's center, in image
/// coordinates (y down), in `(-pi, pi]`. Zero means "directly to the right";
/// `-pi/2` means "directly above in the image".
pub fn center_angle(
    subject: &NormalizedBox,
    reference: &NormalizedBox,
) -> Result<f64, GeometryError> {
    let (sx, sy) = subject.center();
    let (rx, ry) = reference.center();
    let (dx, dy) = (sx - rx, sy - ry);
    if dx == 0.0 && dy == 0.0 {
        return Err(GeometryError::IdenticalCenters);
    }
    let theta = dy.atan2(dx);
    // atan2(-0.0, -x) yields -pi; fold onto +pi to keep the (-pi, pi] contract.
    if theta == -std::f64::consts::PI {
        Ok(std::f64::consts::PI)
    } else {
        Ok(theta)
    }
}
