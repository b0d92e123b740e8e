//! Region-of-interest accounting that needs no trained model: the center-crop
//! baseline, word/crop containment, recall, and pointing-gesture targets.

use crate::error::{Error, Result};
use crate::geometry::{clip_convex, signed_area, AxisRect, Point};
use crate::reading_order::{Paragraph, Word};

pub const DEFAULT_MIN_AREA_FRAC: f64 = 0.5;
pub const DEFAULT_CONE_DEG: f64 = 30.0;
pub const DEFAULT_K_WORDS: usize = 3;
pub const DEFAULT_K_PARAGRAPHS: usize = 1;

/// A crop rectangle inside a `width × height` source image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoiCrop {
    pub rect: AxisRect,
    pub source_size: (f64, f64),
}

impl RoiCrop {
    /// Clamps `rect` to the image bounds.
    pub fn new(rect: AxisRect, source_size: (f64, f64)) -> Self {
        let (w, h) = source_size;
        let left = rect.left.clamp(0.0, w);
        let top = rect.top.clamp(0.0, h);
        let right = rect.right().clamp(left, w);
        let bottom = rect.bottom().clamp(top, h);
        RoiCrop {
            rect: AxisRect::new(top, left, bottom - top, right - left),
            source_size,
        }
    }

    pub fn full(source_size: (f64, f64)) -> Self {
        RoiCrop::new(AxisRect::new(0.0, 0.0, source_size.1, source_size.0), source_size)
    }

    /// Fraction of the source image covered by the crop.
    pub fn area_fraction(&self) -> f64 {
        let total = self.source_size.0 * self.source_size.1;
        if total > 0.0 {
            self.rect.area() / total
        } else {
            0.0
        }
    }
}

/// The `crop_size` region centered in an `image_size` image, both given as
/// `(width, height)`. Oversized crops are clamped to the image.
pub fn center_crop(image_size: (f64, f64), crop_size: (f64, f64)) -> RoiCrop {
    let (iw, ih) = image_size;
    let cw = crop_size.0.min(iw);
    let ch = crop_size.1.min(ih);
    RoiCrop::new(
        AxisRect::new((ih - ch) / 2.0, (iw - cw) / 2.0, ch, cw),
        image_size,
    )
}

fn rect_polygon(r: &AxisRect) -> [Point; 4] {
    [
        Point::new(r.left, r.top),
        Point::new(r.right(), r.top),
        Point::new(r.right(), r.bottom()),
        Point::new(r.left, r.bottom()),
    ]
}

/// Fraction of the word box's area that falls inside the crop.
pub fn covered_fraction(word: &Word, crop: &RoiCrop) -> f64 {
    let area = word.rbox.area();
    if !(area > 0.0) {
        return 0.0;
    }
    let inter = signed_area(&clip_convex(&word.rbox.corners(), &rect_polygon(&crop.rect)));
    (inter / area).clamp(0.0, 1.0)
}

/// Whether at least `min_area_frac` of the word box lies inside the crop.
/// Zero-area boxes are never inside.
pub fn word_in_crop(word: &Word, crop: &RoiCrop, min_area_frac: f64) -> bool {
    !word.rbox.is_degenerate() && covered_fraction(word, crop) >= min_area_frac
}

/// Fraction of ground-truth words inside the crop.
pub fn roi_recall(ground_truth: &[Word], crop: &RoiCrop, min_area_frac: f64) -> Result<f64> {
    if ground_truth.is_empty() {
        return Err(Error::Undefined("undefined recall: no ground-truth words"));
    }
    let hits = ground_truth
        .iter()
        .filter(|w| word_in_crop(w, crop, min_area_frac))
        .count();
    Ok(hits as f64 / ground_truth.len() as f64)
}

/// Index finger keypoints; the pointing ray runs from `last_joint` through `tip`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointingGesture {
    pub last_joint: Point,
    pub tip: Point,
}

impl PointingGesture {
    pub fn new(last_joint: Point, tip: Point) -> Result<Self> {
        if !last_joint.is_finite() || !tip.is_finite() {
            return Err(Error::invalid("gesture keypoints must be finite"));
        }
        if last_joint == tip {
            return Err(Error::invalid("gesture tip coincides with last joint"));
        }
        Ok(PointingGesture { last_joint, tip })
    }

    pub fn direction(&self) -> Point {
        let d = self.tip - self.last_joint;
        d * (1.0 / d.norm())
    }

    /// Distance from the tip if `target` is ahead of the tip and inside the
    /// cone of half-angle `cone_deg` around the pointing direction.
    pub fn reach(&self, target: Point, cone_deg: f64) -> Option<f64> {
        let offset = target - self.tip;
        let dist = offset.norm();
        let along = offset.dot(self.direction());
        if !(along > 0.0) {
            return None;
        }
        let cos = (along / dist).min(1.0);
        (cos >= cone_deg.to_radians().cos()).then_some(dist)
    }
}

/// Items selected by a pointing gesture, nearest first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointedTargets {
    /// `(word index, distance from tip)`.
    pub words: Vec<(usize, f64)>,
    /// `(paragraph index, distance from tip)`.
    pub paragraphs: Vec<(usize, f64)>,
}

fn nearest(gesture: &PointingGesture, centers: impl Iterator<Item = Point>, cone_deg: f64, k: usize) -> Vec<(usize, f64)> {
    let mut hits: Vec<(usize, f64)> = centers
        .enumerate()
        .filter_map(|(i, c)| gesture.reach(c, cone_deg).map(|d| (i, d)))
        .collect();
    // Stable: equal distances keep input order.
    hits.sort_by(|a, b| a.1.total_cmp(&b.1));
    hits.truncate(k);
    hits
}

/// Words and paragraphs whose centers lie ahead of the fingertip within the
/// pointing cone, ranked by distance from the tip.
pub fn pointed_targets(
    gesture: &PointingGesture,
    words: &[Word],
    paragraphs: &[Paragraph],
    cone_deg: f64,
    k_words: usize,
    k_paragraphs: usize,
) -> PointedTargets {
    PointedTargets {
        words: nearest(gesture, words.iter().map(|w| w.rbox.center()), cone_deg, k_words),
        paragraphs: nearest(
            gesture,
            paragraphs.iter().map(|p| p.rbox.center()),
            cone_deg,
            k_paragraphs,
        ),
    }
}
