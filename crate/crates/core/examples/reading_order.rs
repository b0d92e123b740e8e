//! Groups a handful of detected words into paragraphs and prints them in
//! reading order.

use strkit::{reconstruct, GroupingParams, RotatedBox, Word};

pub fn run_example() -> strkit::Result<Vec<String>> {
    let words = vec![
        Word::new("tienda", RotatedBox::axis_aligned(1380.0, 1564.0, 160.0, 40.0)),
        Word::new("HAZ", RotatedBox::axis_aligned(1120.0, 1500.0, 120.0, 40.0)),
        Word::new("intermon", RotatedBox::axis_aligned(1282.0, 1959.0, 200.0, 40.0)),
        Word::new("VOLUNTARIADO", RotatedBox::axis_aligned(1330.0, 1500.0, 260.0, 40.0)),
        Word::new("en", RotatedBox::axis_aligned(1100.0, 1564.0, 80.0, 40.0)),
        Word::new("OKFAM", RotatedBox::axis_aligned(1307.0, 1919.0, 150.0, 40.0)),
        Word::new("esta", RotatedBox::axis_aligned(1220.0, 1564.0, 120.0, 40.0)),
        Word::new("R", RotatedBox::axis_aligned(1197.0, 1919.0, 30.0, 40.0)),
    ];
    let paragraphs = reconstruct(&words, &GroupingParams::default())?;
    Ok(paragraphs
        .iter()
        .map(|p| {
            format!(
                "{}  (top {:.0}, left {:.0}, height {:.0}, width {:.0})",
                p.text(),
                p.rect.top,
                p.rect.left,
                p.rect.height,
                p.rect.width
            )
        })
        .collect())
}

fn main() -> strkit::Result<()> {
    for line in run_example()? {
        println!("{line}");
    }
    Ok(())
}
