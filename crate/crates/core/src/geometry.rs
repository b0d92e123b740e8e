//! Planar primitives for oriented word boxes.
//!
//! Coordinates live in the image frame: origin at the top-left corner, `y`
//! growing downward. Polygons are wound so that the shoelace formula yields a
//! positive area (counter-clockwise in the usual mathematical orientation).

use std::cmp::Ordering;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3-D cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    fn lex_cmp(&self, other: &Point) -> Ordering {
        self.x
            .total_cmp(&other.x)
            .then_with(|| self.y.total_cmp(&other.y))
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

/// Maps any angle onto the canonical interval `(-π/2, π/2]`.
///
/// A rectangle is symmetric under a half turn, so this never changes the
/// point set a box describes.
pub fn canonical_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(PI);
    if a > FRAC_PI_2 {
        a - PI
    } else {
        a
    }
}

/// An oriented rectangle. `w` is measured along the direction `angle`
/// (radians, canonical in `(-π/2, π/2]`), `h` along its perpendicular.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatedBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub angle: f64,
}

impl RotatedBox {
    /// Builds a box, canonicalizing the angle.
    pub fn new(cx: f64, cy: f64, w: f64, h: f64, angle: f64) -> Self {
        RotatedBox {
            cx,
            cy,
            w,
            h,
            angle: canonical_angle(angle),
        }
    }

    pub fn axis_aligned(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self::new(cx, cy, w, h, 0.0)
    }

    /// Axis-aligned box from its top-left corner and size.
    pub fn from_ltwh(left: f64, top: f64, w: f64, h: f64) -> Self {
        Self::new(left + w / 2.0, top + h / 2.0, w, h, 0.0)
    }

    /// Checks finiteness and non-negative size.
    pub fn validate(&self) -> Result<()> {
        let fields = [self.cx, self.cy, self.w, self.h, self.angle];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("box has non-finite fields"));
        }
        if self.w < 0.0 || self.h < 0.0 {
            return Err(Error::invalid("box has negative size"));
        }
        Ok(())
    }

    pub fn center(&self) -> Point {
        Point::new(self.cx, self.cy)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.w > 0.0 && self.h > 0.0)
    }

    /// Unit vectors along the box's width and height directions.
    pub fn axes(&self) -> (Point, Point) {
        let (s, c) = self.angle.sin_cos();
        (Point::new(c, s), Point::new(-s, c))
    }

    /// Corners with positive shoelace orientation, starting at the corner at
    /// local coordinates `(-w/2, -h/2)` (the top-left one for `angle = 0`).
    pub fn corners(&self) -> [Point; 4] {
        let (u, v) = self.axes();
        let c = self.center();
        let hu = u * (self.w / 2.0);
        let hv = v * (self.h / 2.0);
        [c - hu - hv, c + hu - hv, c + hu + hv, c - hu + hv]
    }

    /// Whether `p` lies inside the box, allowing `tol` pixels of slack.
    pub fn contains(&self, p: Point, tol: f64) -> bool {
        let (u, v) = self.axes();
        let d = p - self.center();
        d.dot(u).abs() <= self.w / 2.0 + tol && d.dot(v).abs() <= self.h / 2.0 + tol
    }

    /// The same point set, with the angle reported in `(-π/4, π/4]`.
    pub fn with_small_angle(&self) -> RotatedBox {
        let mut b = *self;
        if b.angle > FRAC_PI_4 {
            b.angle -= FRAC_PI_2;
            std::mem::swap(&mut b.w, &mut b.h);
        } else if b.angle <= -FRAC_PI_4 {
            b.angle += FRAC_PI_2;
            std::mem::swap(&mut b.w, &mut b.h);
        }
        b
    }

    fn total_cmp(&self, other: &RotatedBox) -> Ordering {
        let a = [self.cx, self.cy, self.w, self.h, self.angle];
        let b = [other.cx, other.cy, other.w, other.h, other.angle];
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    }
}

/// Axis-aligned rectangle in `(top, left, height, width)` form.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AxisRect {
    pub top: f64,
    pub left: f64,
    pub height: f64,
    pub width: f64,
}

impl AxisRect {
    pub fn new(top: f64, left: f64, height: f64, width: f64) -> Self {
        AxisRect {
            top,
            left,
            height,
            width,
        }
    }

    pub fn bottom(&self) -> f64 {
        self.top + self.height
    }

    pub fn right(&self) -> f64 {
        self.left + self.width
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn center(&self) -> Point {
        Point::new(self.left + self.width / 2.0, self.top + self.height / 2.0)
    }

    /// Whether the closed rectangles share at least one point.
    pub fn touches(&self, other: &AxisRect) -> bool {
        self.left <= other.right()
            && other.left <= self.right()
            && self.top <= other.bottom()
            && other.top <= self.bottom()
    }

    pub fn contains_rect(&self, other: &AxisRect) -> bool {
        self.left <= other.left
            && self.top <= other.top
            && other.right() <= self.right()
            && other.bottom() <= self.bottom()
    }

    pub fn intersection_area(&self, other: &AxisRect) -> f64 {
        let w = self.right().min(other.right()) - self.left.max(other.left);
        let h = self.bottom().min(other.bottom()) - self.top.max(other.top);
        if w > 0.0 && h > 0.0 {
            w * h
        } else {
            0.0
        }
    }

    /// Intersection over union of two axis-aligned rectangles; 0 when either
    /// has zero area.
    pub fn iou(&self, other: &AxisRect) -> f64 {
        if !(self.area() > 0.0 && other.area() > 0.0) {
            return 0.0;
        }
        if self == other {
            return 1.0;
        }
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        (inter / union).clamp(0.0, 1.0)
    }

    pub fn to_box(&self) -> RotatedBox {
        RotatedBox::from_ltwh(self.left, self.top, self.width, self.height)
    }
}

/// Shoelace area; positive for the winding used throughout this module.
pub fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        acc += poly[i].cross(poly[(i + 1) % n]);
    }
    acc / 2.0
}

/// Sutherland-Hodgman clipping of a convex `subject` by a convex `clip`
/// polygon. Both must have positive orientation.
pub fn clip_convex(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    let mut output = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let edge = clip[(i + 1) % n] - a;
        let input = std::mem::take(&mut output);
        let m = input.len();
        for k in 0..m {
            let s = input[k];
            let e = input[(k + 1) % m];
            let ds = edge.cross(s - a);
            let de = edge.cross(e - a);
            if ds >= 0.0 {
                output.push(s);
                if de < 0.0 {
                    output.push(s + (e - s) * (ds / (ds - de)));
                }
            } else if de >= 0.0 {
                output.push(s + (e - s) * (ds / (ds - de)));
            }
        }
    }
    output
}

/// Area of the intersection of two oriented boxes.
pub fn intersection_area(a: &RotatedBox, b: &RotatedBox) -> f64 {
    if a.is_degenerate() || b.is_degenerate() {
        return 0.0;
    }
    signed_area(&clip_convex(&a.corners(), &b.corners())).max(0.0)
}

/// Rotated intersection-over-union by exact polygon clipping.
///
/// Degenerate (zero-area) boxes yield 0. The argument order is normalized
/// internally so the result is bit-for-bit symmetric.
pub fn iou(a: &RotatedBox, b: &RotatedBox) -> f64 {
    if a.is_degenerate() || b.is_degenerate() {
        return 0.0;
    }
    if a == b {
        return 1.0;
    }
    let (first, second) = if a.total_cmp(b) == Ordering::Greater {
        (b, a)
    } else {
        (a, b)
    };
    let inter = intersection_area(first, second);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = first.area() + second.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Grows a box about its center in its own frame: each side moves outward by
/// `ratio × dimension`, so the width becomes `w·(1 + 2·r_h)` and the height
/// `h·(1 + 2·r_v)`.
pub fn expand(b: &RotatedBox, r_v: f64, r_h: f64) -> RotatedBox {
    RotatedBox {
        w: b.w * (1.0 + 2.0 * r_h),
        h: b.h * (1.0 + 2.0 * r_v),
        ..*b
    }
}

/// Tightest axis-aligned rectangle covering the box's corners.
pub fn aabb(b: &RotatedBox) -> AxisRect {
    let corners = b.corners();
    let (mut x0, mut y0) = (f64::INFINITY, f64::INFINITY);
    let (mut x1, mut y1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in corners {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    AxisRect::new(y0, x0, y1 - y0, x1 - x0)
}

/// Andrew's monotone chain. The hull has positive orientation, contains no
/// collinear or duplicate vertices, and starts at the lexicographically
/// smallest point `(x, then y)`.
pub fn convex_hull(points: &[Point]) -> Result<Vec<Point>> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let mut pts = points.to_vec();
    pts.sort_by(Point::lex_cmp);
    pts.dedup();
    if pts.len() < 3 {
        return Ok(pts);
    }

    let turn = |o: Point, a: Point, b: Point| (a - o).cross(b - o);
    let mut lower: Vec<Point> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    Ok(lower)
}

/// Minimum-area enclosing rectangle by rotating calipers over the convex hull.
///
/// One side of the result is collinear with a hull edge. Among rectangles of
/// equal area (to 1e-12 relative) the one with the smaller `|angle|` wins; the
/// result is reported with its angle in `(-π/4, π/4]`.
pub fn min_area_rect(points: &[Point]) -> Result<RotatedBox> {
    let hull = convex_hull(points)?;
    let n = hull.len();
    if n == 1 {
        return Ok(RotatedBox::new(hull[0].x, hull[0].y, 0.0, 0.0, 0.0));
    }

    let frame = |i: usize| {
        let a = hull[i];
        let d = hull[(i + 1) % n] - a;
        let e = d * (1.0 / d.norm());
        (a, e, Point::new(-e.y, e.x))
    };

    // Calipers: `far` maximizes the normal projection, `hi`/`lo` bound the
    // projection on the edge direction. All three only ever move forward.
    let (a0, e0, n0) = frame(0);
    let argbest = |key: &dyn Fn(Point) -> f64| {
        (0..n)
            .max_by(|&i, &j| key(hull[i]).total_cmp(&key(hull[j])).then(j.cmp(&i)))
            .unwrap()
    };
    let mut far = argbest(&|p| n0.dot(p - a0));
    let mut hi = argbest(&|p| e0.dot(p));
    let mut lo = argbest(&|p| -e0.dot(p));

    let mut best: Option<(f64, RotatedBox)> = None;
    for i in 0..n {
        let (a, e, nrm) = frame(i);
        for _ in 0..n {
            let next = (far + 1) % n;
            if nrm.dot(hull[next] - a) > nrm.dot(hull[far] - a) {
                far = next;
            } else {
                break;
            }
        }
        for _ in 0..n {
            let next = (hi + 1) % n;
            if e.dot(hull[next]) > e.dot(hull[hi]) {
                hi = next;
            } else {
                break;
            }
        }
        for _ in 0..n {
            let next = (lo + 1) % n;
            if e.dot(hull[next]) < e.dot(hull[lo]) {
                lo = next;
            } else {
                break;
            }
        }

        let (min_e, max_e) = (e.dot(hull[lo]), e.dot(hull[hi]));
        let base = nrm.dot(a);
        let height = (nrm.dot(hull[far]) - base).max(0.0);
        let width = max_e - min_e;
        let center = e * ((min_e + max_e) / 2.0) + nrm * (base + height / 2.0);
        let candidate =
            RotatedBox::new(center.x, center.y, width, height, e.y.atan2(e.x)).with_small_angle();
        let area = width * height;

        let better = match &best {
            None => true,
            Some((best_area, best_box)) => {
                let scale = best_area.abs().max(area.abs());
                if area < best_area - 1e-12 * scale {
                    true
                } else if (area - best_area).abs() <= 1e-12 * scale {
                    candidate.angle.abs() < best_box.angle.abs()
                } else {
                    false
                }
            }
        };
        if better {
            best = Some((area, candidate));
        }
    }
    Ok(best.expect("hull has at least two vertices").1)
}
