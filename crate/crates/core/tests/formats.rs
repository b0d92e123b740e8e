mod common;

use common::*;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use strkit::geometry::{AxisRect, Point};
use strkit::io::{
    self, format_float, parse_crops, parse_gesture, parse_paragraphs, parse_scenario, parse_words, presets,
    serialize_crops, serialize_gesture, serialize_paragraphs, serialize_scenario, serialize_words, CropsFile,
    ImageInfo, ParagraphsFile, WordsFile,
};
use strkit::reading_order::{reconstruct, Word};
use strkit::roi::PointingGesture;
use strkit::sim::{ByMode, LatencyModel, SimMode};
use strkit::FormatErrorKind;

const TOL: f64 = 1e-6;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL * a.abs().max(1.0)
}

fn same_word(a: &Word, b: &Word) -> bool {
    let (p, q) = (&a.rbox, &b.rbox);
    let turn = ((p.angle - q.angle) / std::f64::consts::PI).round() * std::f64::consts::PI;
    a.text == b.text
        && close(p.cx, q.cx)
        && close(p.cy, q.cy)
        && close(p.w, q.w)
        && close(p.h, q.h)
        && (p.angle - q.angle - turn).abs() < 1e-7
        && close(a.confidence, b.confidence)
}

fn image(rng: &mut StdRng) -> ImageInfo {
    ImageInfo {
        id: format!("im-{}", rng.gen_range(0..1000)),
        width: rng.gen_range(1..5000),
        height: rng.gen_range(1..5000),
    }
}

fn text(rng: &mut StdRng) -> String {
    let pool: Vec<char> = "aZ9 ,\"\\/é€\u{1F600}\n\tü".chars().collect();
    let raw: String = (0..rng.gen_range(1..8)).map(|_| pool[rng.gen_range(0..pool.len())]).collect();
    format!("w{}x", raw)
}

fn words_file(seed: u64, n: usize) -> WordsFile {
    let mut rng = StdRng::seed_from_u64(seed);
    let words: Vec<Word> = random_layout(&mut rng, n)
        .into_iter()
        .map(|w| Word::new(text(&mut rng), w.rbox).with_confidence(rng.gen_range(0.0..=1.0)))
        .collect();
    let mut file = WordsFile::new(image(&mut rng), words);
    if rng.gen_bool(0.5) {
        file.of_interest = (0..n).map(|_| [None, Some(true), Some(false)][rng.gen_range(0..3)]).collect();
    }
    file
}

#[test]
fn float_writer_is_canonical() {
    assert_eq!(format_float(0.0), "0.000000");
    assert_eq!(format_float(-0.0), "0.000000");
    assert_eq!(format_float(-1e-9), "0.000000");
    assert_eq!(format_float(-2.5), "-2.500000");
    assert_eq!(format_float(1.0 / 3.0), "0.333333");
    assert_eq!(format_float(1234567.0), "1234567.000000");
}

#[test]
fn unknown_fields_and_versions_are_rejected() {
    let base = serialize_words(&words_file(1, 3));
    let extra = base.replacen("\"schema_version\": 1,", "\"schema_version\": 1, \"extra\": true,", 1);
    let e = parse_words(extra.as_bytes()).unwrap_err();
    assert_eq!((e.kind, e.path.as_str()), (FormatErrorKind::Schema, "extra"));
    let v2 = base.replacen("\"schema_version\": 1", "\"schema_version\": 2", 1);
    assert!(parse_words(v2.as_bytes()).is_err());
    let e = parse_words(b"{\"schema_version\": 1,").unwrap_err();
    assert_eq!(e.kind, FormatErrorKind::Malformed);
}

#[test]
fn presets_round_trip() {
    for (name, json) in [("cpu", presets::CPU_JSON), ("ha", presets::HA_JSON)] {
        let s = parse_scenario(json.as_bytes()).unwrap();
        let out = serialize_scenario(&s);
        assert_eq!(parse_scenario(out.as_bytes()).unwrap(), s, "{name}");
        assert_eq!(serialize_scenario(&parse_scenario(out.as_bytes()).unwrap()), out);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn words_round_trip(seed in any::<u64>(), n in 0usize..30) {
        let file = words_file(seed, n);
        let out = serialize_words(&file);
        let back = parse_words(out.as_bytes()).unwrap();
        prop_assert_eq!(&back.image, &file.image);
        prop_assert_eq!(&back.of_interest, &file.of_interest);
        prop_assert_eq!(back.words.len(), file.words.len());
        for (a, b) in back.words.iter().zip(&file.words) {
            prop_assert!(same_word(a, b), "{:?} vs {:?}", a, b);
        }
        prop_assert_eq!(serialize_words(&back), out);
    }

    #[test]
    fn paragraphs_round_trip(seed in any::<u64>(), n in 0usize..30) {
        let mut rng = StdRng::seed_from_u64(seed);
        let words = random_layout(&mut rng, n);
        let file = ParagraphsFile {
            image: image(&mut rng),
            paragraphs: reconstruct(&words, &random_params(&mut rng)).unwrap(),
        };
        let out = serialize_paragraphs(&file);
        let back = parse_paragraphs(out.as_bytes()).unwrap();
        prop_assert_eq!(back.paragraphs.len(), file.paragraphs.len());
        for (a, b) in back.paragraphs.iter().zip(&file.paragraphs) {
            prop_assert_eq!(a.text(), b.text());
            prop_assert!(close(a.rect.top, b.rect.top) && close(a.rect.width, b.rect.width));
            prop_assert!(close(a.rbox.area(), b.rbox.area()));
        }
        prop_assert_eq!(serialize_paragraphs(&back), out);
    }

    #[test]
    fn gesture_round_trip(x in -1e4..1e4f64, y in -1e4..1e4f64, dx in 1.0..500.0f64, dy in -500.0..500.0f64) {
        let g = PointingGesture::new(Point::new(x, y), Point::new(x + dx, y + dy)).unwrap();
        let out = serialize_gesture(&g);
        let back = parse_gesture(out.as_bytes()).unwrap();
        prop_assert!(close(back.tip.x, g.tip.x) && close(back.tip.y, g.tip.y));
        prop_assert!(close(back.last_joint.x, g.last_joint.x) && close(back.last_joint.y, g.last_joint.y));
        prop_assert_eq!(serialize_gesture(&back), out);
    }

    #[test]
    fn crops_round_trip(rects in prop::collection::vec((0.0..4000.0f64, 0.0..4000.0f64, 0.0..2000.0f64, 0.0..2000.0f64), 0..10)) {
        let file = CropsFile {
            crops: rects.iter().enumerate().map(|(i, &(t, l, h, w))| (format!("img{i}"), AxisRect::new(t, l, h, w))).collect(),
        };
        let out = serialize_crops(&file);
        let back = parse_crops(out.as_bytes()).unwrap();
        for ((ia, a), (ib, b)) in back.crops.iter().zip(&file.crops) {
            prop_assert_eq!(ia, ib);
            prop_assert!(close(a.top, b.top) && close(a.left, b.left) && close(a.height, b.height) && close(a.width, b.width));
        }
        prop_assert_eq!(serialize_crops(&back), out);
    }

    #[test]
    fn scenario_round_trip(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut s = presets::cpu();
        s.word_count = rng.gen_range(1..1000);
        s.mode = if rng.gen_bool(0.5) { SimMode::Cpu } else { SimMode::HardwareAccelerated };
        for st in &mut s.stages {
            if rng.gen_bool(0.5) {
                st.latency = ByMode::PerMode {
                    cpu: LatencyModel::Fixed(rng.gen_range(0.0..5000.0)),
                    accelerated: LatencyModel::PerWord(rng.gen_range(0.0..10.0)),
                };
            }
            if rng.gen_bool(0.3) {
                st.energy_mwh = ByMode::Same(rng.gen_range(0.0..3.0));
            }
        }
        let out = serialize_scenario(&s);
        let back = parse_scenario(out.as_bytes()).unwrap();
        prop_assert_eq!(serialize_scenario(&back), out.clone());
        let (a, b) = (strkit::sim::simulate(&s).unwrap(), strkit::sim::simulate(&back).unwrap());
        // Per-word costs are stored to 6 decimals and scaled by the word count.
        prop_assert!((a.e2e_ms - b.e2e_ms).abs() < 1e-2);
        prop_assert_eq!(a.critical_path.len() > 0, b.critical_path.len() > 0);
        let _ = io::trace_to_json(&back, &b).render();
    }
}
