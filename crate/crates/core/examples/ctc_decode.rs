//! Greedy and beam-search decoding of a small CTC posterior.

use strkit::recognition::{ctc_beam_decode, ctc_greedy_decode, Alphabet, Decoded, Posterior};

pub fn run_example() -> strkit::Result<(Decoded, Decoded)> {
    let alphabet = Alphabet::new(vec!['a', 'b'])?;
    // Columns: a, b, blank.
    let posterior = Posterior::new(vec![
        vec![0.4, 0.0, 0.6],
        vec![0.4, 0.0, 0.6],
        vec![0.1, 0.5, 0.4],
    ])?;
    let greedy = ctc_greedy_decode(&posterior, &alphabet)?;
    let beam = ctc_beam_decode(&posterior, &alphabet, 8)?;
    Ok((greedy, beam))
}

fn main() -> strkit::Result<()> {
    let (greedy, beam) = run_example()?;
    println!("greedy: {:?} (path probability {:.4})", greedy.text, greedy.score);
    println!("beam:   {:?} (labeling probability {:.4})", beam.text, beam.score);
    Ok(())
}
