//! Word recall of a center crop, and the words a pointing finger selects.

use strkit::roi::{center_crop, pointed_targets, roi_recall, PointingGesture, DEFAULT_MIN_AREA_FRAC};
use strkit::{Point, RotatedBox, Word};

pub fn run_example() -> strkit::Result<(f64, Vec<String>)> {
    let image = (3000.0, 4000.0);
    let words = vec![
        Word::new("SALE", RotatedBox::axis_aligned(1500.0, 1900.0, 300.0, 90.0)),
        Word::new("50%", RotatedBox::axis_aligned(1500.0, 2050.0, 200.0, 90.0)),
        Word::new("off", RotatedBox::axis_aligned(1750.0, 2050.0, 150.0, 90.0)),
        Word::new("exit", RotatedBox::axis_aligned(200.0, 300.0, 150.0, 60.0)),
    ];
    let crop = center_crop(image, (1500.0, 2000.0));
    let recall = roi_recall(&words, &crop, DEFAULT_MIN_AREA_FRAC)?;

    let gesture = PointingGesture::new(Point::new(1500.0, 2600.0), Point::new(1500.0, 2400.0))?;
    let targets = pointed_targets(&gesture, &words, &[], 30.0, 2, 1);
    let pointed = targets.words.iter().map(|&(i, _)| words[i].text.clone()).collect();
    Ok((recall, pointed))
}

fn main() -> strkit::Result<()> {
    let (recall, pointed) = run_example()?;
    println!("center-crop recall: {:.2}", recall);
    println!("pointed at: {}", pointed.join(", "));
    Ok(())
}
