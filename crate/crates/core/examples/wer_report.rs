//! Word error rate on a two-image corpus and an ablation table.

use strkit::evaluation::{
    ablation_report, evaluate_corpus, render_ablation_table, ErrorCounts, ImagePair, MatchMode, NormalizationPolicy,
    WerBreakdown, DEFAULT_MATCH_IOU,
};
use strkit::{RotatedBox, Word};

fn word(text: &str, cx: f64, cy: f64) -> Word {
    Word::new(text, RotatedBox::axis_aligned(cx, cy, 60.0, 20.0))
}

pub fn run_example() -> strkit::Result<(WerBreakdown, String)> {
    let images = vec![
        ImagePair {
            id: "storefront".into(),
            gt: vec![word("OPEN", 100.0, 100.0), word("24h", 200.0, 100.0)],
            pred: vec![word("OPEN", 102.0, 101.0), word("2Ah", 199.0, 100.0)],
        },
        ImagePair {
            id: "label".into(),
            gt: vec![word("Organic", 50.0, 50.0), word("milk.", 150.0, 50.0)],
            pred: vec![word("milk", 150.0, 52.0), word("x", 400.0, 400.0)],
        },
    ];
    let report = evaluate_corpus(&images, &NormalizationPolicy::default(), DEFAULT_MATCH_IOU, MatchMode::Greedy)?;

    let run = |wer: f64| {
        let n = 1000;
        let errors = (wer * n as f64).round() as u64;
        WerBreakdown::from_counts(ErrorCounts {
            n_gt: n,
            n_pred: n,
            correct: n - errors,
            deletions: 0,
            insertions: 0,
            substitutions: errors,
        })
    };
    let runs = vec![
        ("Baseline".to_string(), run(0.53)?),
        ("+ROI detection".to_string(), run(0.42)?),
        ("+Text detection".to_string(), run(0.26)?),
        ("+Text recognition".to_string(), run(0.13)?),
        ("+On-device export".to_string(), run(0.146)?),
    ];
    let table = render_ablation_table(&ablation_report(&runs)?);
    Ok((report.total, table))
}

fn main() -> strkit::Result<()> {
    let (total, table) = run_example()?;
    println!(
        "corpus WER {:.1}% (del {:.1}%, ins {:.1}%, sub {:.1}%)",
        total.wer * 100.0,
        total.del_rate * 100.0,
        total.ins_rate * 100.0,
        total.sub_rate * 100.0
    );
    println!();
    print!("{table}");
    Ok(())
}
