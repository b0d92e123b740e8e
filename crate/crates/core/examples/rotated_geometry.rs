//! Rotated-box overlap, expansion and the minimum-area enclosing rectangle.

use std::f64::consts::FRAC_PI_4;

use strkit::geometry::{expand, iou, min_area_rect};
use strkit::{Point, RotatedBox};

pub struct GeometryReport {
    pub iou_square_vs_diamond: f64,
    pub expanded: RotatedBox,
    pub enclosing: RotatedBox,
}

pub fn run_example() -> strkit::Result<GeometryReport> {
    let square = RotatedBox::axis_aligned(0.0, 0.0, 2.0, 2.0);
    let diamond = RotatedBox::new(0.0, 0.0, 2.0, 2.0, FRAC_PI_4);

    let word = RotatedBox::new(100.0, 50.0, 80.0, 20.0, 0.3);
    let expanded = expand(&word, 0.5, 1.0);

    let points: Vec<Point> = [(0.0, 0.0), (4.0, 1.0), (5.0, 4.0), (1.0, 3.0), (2.5, 2.0)]
        .iter()
        .map(|&(x, y)| Point::new(x, y))
        .collect();
    let enclosing = min_area_rect(&points)?;

    Ok(GeometryReport {
        iou_square_vs_diamond: iou(&square, &diamond),
        expanded,
        enclosing,
    })
}

fn main() -> strkit::Result<()> {
    let r = run_example()?;
    println!("IoU(square, diamond) = {:.6}", r.iou_square_vs_diamond);
    println!(
        "expanded word box: {:.1} x {:.1} at {:.3} rad",
        r.expanded.w, r.expanded.h, r.expanded.angle
    );
    println!(
        "minimum-area rectangle: center ({:.3}, {:.3}), {:.3} x {:.3}, area {:.3}",
        r.enclosing.cx,
        r.enclosing.cy,
        r.enclosing.w,
        r.enclosing.h,
        r.enclosing.area()
    );
    Ok(())
}
