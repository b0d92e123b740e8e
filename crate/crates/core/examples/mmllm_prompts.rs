//! Builds the three prompt variants for a storefront sign.

use strkit::prompt::{build_prompt, PromptVariant};
use strkit::{reconstruct, GroupingParams, RotatedBox, Word};

pub fn run_example() -> strkit::Result<Vec<String>> {
    let words: Vec<Word> = [
        ("HAZ", 1120.0, 1500.0, 120.0),
        ("VOLUNTARIADO", 1330.0, 1500.0, 260.0),
        ("en", 1100.0, 1564.0, 80.0),
        ("esta", 1220.0, 1564.0, 120.0),
        ("tienda", 1380.0, 1564.0, 160.0),
        ("R", 1197.0, 1919.0, 30.0),
        ("OKFAM", 1307.0, 1919.0, 150.0),
        ("intermon", 1282.0, 1959.0, 200.0),
    ]
    .iter()
    .map(|&(t, cx, cy, w)| Word::new(t, RotatedBox::axis_aligned(cx, cy, w, 40.0)))
    .collect();
    let paragraphs = reconstruct(&words, &GroupingParams::default())?;
    let query = "what does this sign say";
    [PromptVariant::plain(), PromptVariant::with_str(), PromptVariant::with_positions(3024, 4032)]
        .iter()
        .map(|v| build_prompt(v, &paragraphs, query, None).map(|p| p.text))
        .collect()
}

fn main() -> strkit::Result<()> {
    for (name, text) in ["plain", "with STR", "with STR and positions"].iter().zip(run_example()?) {
        println!("[{name}]\n{text}\n");
    }
    Ok(())
}
