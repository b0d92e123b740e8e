mod common;

use std::collections::BTreeMap;

use common::*;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use strkit::geometry::{Point, RotatedBox};
use strkit::io::serialize_posterior_json;
use strkit::recognition::{
    build_alphabet, collapse, crop_transform, ctc_beam_decode, ctc_greedy_decode, encode_posterior_binary,
    parse_posterior, Alphabet, CropSpec, Posterior, MAX_SYMBOLS,
};

fn alphabet(s: &str) -> Alphabet {
    Alphabet::new(s.chars().collect()).unwrap()
}

#[test]
fn alphabet_matches_histogram_oracle() {
    let mut rng = StdRng::seed_from_u64(31);
    let pool: Vec<char> = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789.,!?-éß€".chars().collect();
    let corpus: Vec<String> = (0..10_000)
        .map(|_| {
            let len = rng.gen_range(1..12);
            (0..len)
                .map(|_| {
                    // Skewed so counts differ and some tie.
                    let i = (rng.gen::<f64>().powi(3) * pool.len() as f64) as usize;
                    pool[i.min(pool.len() - 1)]
                })
                .collect::<String>()
                + if rng.gen_bool(0.1) { " \t" } else { "" }
        })
        .collect();

    let mut hist: BTreeMap<char, u64> = BTreeMap::new();
    for w in &corpus {
        for c in w.chars().filter(|c| !c.is_whitespace()) {
            *hist.entry(c).or_default() += 1;
        }
    }
    let mut ranked: Vec<(char, u64)> = hist.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

    for k in [1, 5, 20, 40, 150] {
        let want: Vec<char> = ranked.iter().take(k).map(|p| p.0).collect();
        assert_eq!(build_alphabet(&corpus, k).unwrap().symbols(), want.as_slice(), "k = {k}");
    }
}

#[test]
fn alphabet_size_limit() {
    let chars: Vec<char> = (0..MAX_SYMBOLS as u32).map(|i| char::from_u32(0x400 + i).unwrap()).collect();
    assert_eq!(Alphabet::new(chars.clone()).unwrap().blank_index(), MAX_SYMBOLS);
    let mut more = chars;
    more.push('x');
    assert!(Alphabet::new(more).is_err());
}

#[test]
fn crop_transform_maps_corners_and_inverts() {
    let mut rng = StdRng::seed_from_u64(32);
    let spec = CropSpec::default();
    let (w, h) = (spec.width as f64, spec.height as f64);
    for _ in 0..500 {
        let b = RotatedBox::new(
            rng.gen_range(-500.0..500.0),
            rng.gen_range(-500.0..500.0),
            rng.gen_range(1.0..300.0),
            rng.gen_range(1.0..80.0),
            rng.gen_range(-3.0..3.0),
        );
        let m = crop_transform(&b, &spec).unwrap();
        let want = [(0.0, 0.0), (w, 0.0), (w, h), (0.0, h)];
        for (c, (x, y)) in b.corners().into_iter().zip(want) {
            let p = m.apply(c);
            assert!((p.x - x).abs() < 1e-9 && (p.y - y).abs() < 1e-9, "{p:?} vs ({x}, {y})");
        }
        let inv = m.inverse().unwrap();
        for _ in 0..4 {
            let q = Point::new(rng.gen_range(-1e3..1e3), rng.gen_range(-1e3..1e3));
            let back = inv.apply(m.apply(q));
            assert!((back.x - q.x).abs() < 1e-9 && (back.y - q.y).abs() < 1e-9);
        }
    }
    assert!(crop_transform(&RotatedBox::axis_aligned(0.0, 0.0, 0.0, 5.0), &spec).is_err());
}

#[test]
fn greedy_fixtures() {
    let a = alphabet("ab");
    let p = Posterior::new(vec![
        vec![0.6, 0.3, 0.1],
        vec![0.6, 0.3, 0.1],
        vec![0.1, 0.1, 0.8],
        vec![0.7, 0.2, 0.1],
    ])
    .unwrap();
    let d = ctc_greedy_decode(&p, &a).unwrap();
    assert_eq!(d.text, "aa");
    assert!((d.score - 0.6 * 0.6 * 0.8 * 0.7).abs() < 1e-12);

    let tie = Posterior::new(vec![vec![0.4, 0.4, 0.2]]).unwrap();
    assert_eq!(ctc_greedy_decode(&tie, &a).unwrap().text, "a");
    let blank = Posterior::new(vec![vec![0.0, 0.0, 1.0]; 3]).unwrap();
    assert_eq!(ctc_greedy_decode(&blank, &a).unwrap().text, "");
    assert_eq!(collapse(&[0, 0, 2, 0, 1, 1, 2], 2), vec![0, 0, 1]);
}

#[test]
fn decoders_reject_mismatched_alphabet() {
    let p = Posterior::new(vec![vec![0.5, 0.5]]).unwrap();
    assert!(ctc_greedy_decode(&p, &alphabet("ab")).is_err());
    assert!(ctc_beam_decode(&p, &alphabet("ab"), 4).is_err());
    assert!(ctc_beam_decode(&p, &alphabet("a"), 0).is_err());
}

#[test]
fn posterior_shape_limits() {
    assert!(Posterior::new(vec![]).is_err());
    assert!(Posterior::new(vec![vec![1.0]; 40]).is_ok());
    assert!(Posterior::new(vec![vec![1.0]; 41]).is_err());
    assert!(Posterior::new(vec![vec![0.5, 0.6]]).is_err());
    assert!(Posterior::new(vec![vec![1.5, -0.5]]).is_err());
    assert!(Posterior::new(vec![vec![0.5, 0.5], vec![1.0]]).is_err());
}

#[test]
fn exhaustive_beam_gives_exact_labeling_probabilities() {
    let mut rng = StdRng::seed_from_u64(33);
    let a = alphabet("xyz");
    for _ in 0..100 {
        let t = rng.gen_range(1..6);
        let frames = random_posterior(&mut rng, t, 4);
        let exact = ctc_labelings(&frames, 3);
        let p = Posterior::new(frames).unwrap();
        let d = ctc_beam_decode(&p, &a, 10_000).unwrap();
        let (best, best_p) = exact
            .iter()
            .max_by(|x, y| x.1.total_cmp(y.1).then_with(|| y.0.cmp(x.0)))
            .unwrap();
        assert!((d.score - best_p).abs() < 1e-12);
        assert!((exact[&d.labels] - best_p).abs() < 1e-12, "{:?} vs {best:?}", d.labels);
    }
}

/// A pruned search can only lose alignments, so its score never exceeds the
/// exact probability of the labeling it returns.
#[test]
fn pruned_beam_score_is_a_lower_bound() {
    let mut rng = StdRng::seed_from_u64(34);
    let a = alphabet("xyz");
    for _ in 0..200 {
        let t = rng.gen_range(1..7);
        let frames = random_posterior(&mut rng, t, 4);
        let exact = ctc_labelings(&frames, 3);
        let p = Posterior::new(frames).unwrap();
        for beam in [1, 2, 3, 5] {
            let d = ctc_beam_decode(&p, &a, beam).unwrap();
            assert!(d.score <= exact[&d.labels] + 1e-12);
        }
    }
}

/// Widening the beam usually raises the best score, but pruning makes this
/// a heuristic rather than a guarantee, so violations are counted and logged.
#[test]
fn beam_width_monotonicity_survey() {
    let mut rng = StdRng::seed_from_u64(35);
    let a = alphabet("abcd");
    let (mut checked, mut violations) = (0, 0);
    for _ in 0..300 {
        let t = rng.gen_range(2..10);
        let p = Posterior::new(random_posterior(&mut rng, t, 5)).unwrap();
        let mut prev = 0.0;
        for beam in 1..=8 {
            let s = ctc_beam_decode(&p, &a, beam).unwrap().score;
            checked += 1;
            if s + 1e-12 < prev {
                violations += 1;
                eprintln!("beam {beam}: score {s} < {prev} at narrower width");
            }
            prev = s;
        }
    }
    eprintln!("beam monotonicity: {violations} violations in {checked} widenings");
    assert!(checked > 0);
}

#[test]
fn greedy_matches_oracle_and_decoded_length_is_bounded() {
    let mut rng = StdRng::seed_from_u64(36);
    let a = alphabet("abcdefg");
    for _ in 0..300 {
        let t = rng.gen_range(1..=40);
        let frames = random_posterior(&mut rng, t, 8);
        let want = greedy_oracle(&frames, 7);
        let d = ctc_greedy_decode(&Posterior::new(frames).unwrap(), &a).unwrap();
        assert_eq!(d.labels, want);
        assert!(d.labels.len() <= 40);
        assert_eq!(d.text.chars().count(), d.labels.len());
    }
}

fn posterior_frames() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (any::<u64>(), 1usize..=40, 1usize..12).prop_map(|(seed, t, k)| {
        let mut rng = StdRng::seed_from_u64(seed);
        random_posterior(&mut rng, t, k)
    })
}

proptest! {
    #[test]
    fn greedy_is_invariant_under_monotone_rescaling(frames in posterior_frames(), power in 0.2..5.0f64) {
        let k = frames[0].len();
        let a = Alphabet::new((0..k - 1).map(|i| char::from_u32(0x61 + i as u32).unwrap()).collect()).unwrap();
        let rescaled: Vec<Vec<f64>> = frames
            .iter()
            .map(|f| {
                let raw: Vec<f64> = f.iter().map(|v| v.powf(power)).collect();
                let s: f64 = raw.iter().sum();
                raw.iter().map(|v| v / s).collect()
            })
            .collect();
        let before = ctc_greedy_decode(&Posterior::new(frames).unwrap(), &a).unwrap();
        let after = ctc_greedy_decode(&Posterior::new(rescaled).unwrap(), &a).unwrap();
        prop_assert_eq!(before.labels, after.labels);
    }

    #[test]
    fn binary_round_trip(frames in posterior_frames()) {
        let quantized: Vec<Vec<f64>> = frames.iter().map(|f| f.iter().map(|&v| v as f32 as f64).collect()).collect();
        let p = Posterior::new(quantized).unwrap();
        let bytes = encode_posterior_binary(&p);
        prop_assert_eq!(&bytes[..4], b"CTCP");
        let back = parse_posterior(&bytes).unwrap();
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(encode_posterior_binary(&back), bytes);
    }

    #[test]
    fn json_round_trip(frames in posterior_frames()) {
        let p = Posterior::new(frames).unwrap();
        let back = parse_posterior(serialize_posterior_json(&p).as_bytes()).unwrap();
        prop_assert_eq!(back, p);
    }
}

#[test]
fn truncated_binary_is_rejected() {
    let p = Posterior::new(vec![vec![0.25, 0.75]; 3]).unwrap();
    let bytes = encode_posterior_binary(&p);
    assert!(parse_posterior(&bytes[..6]).is_err());
    assert!(parse_posterior(&bytes[..bytes.len() - 1]).is_err());
}
