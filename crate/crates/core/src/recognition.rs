//! Deterministic pieces around the word recognizer: alphabet construction,
//! crop geometry, posterior containers and CTC decoding.

use std::collections::HashMap;

use crate::error::{Error, FormatError, Result};
use crate::geometry::{Point, RotatedBox};

/// Upper bound on alphabet size (excluding the CTC blank).
pub const MAX_SYMBOLS: usize = 150;

/// Tolerance on posterior row sums.
pub const ROW_SUM_TOLERANCE: f64 = 1e-5;

/// Ordered symbol inventory. The CTC blank is not a symbol; it occupies the
/// column right after the last symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<char>,
    lookup: HashMap<char, usize>,
}

impl Alphabet {
    pub fn new(symbols: Vec<char>) -> Result<Self> {
        if symbols.len() > MAX_SYMBOLS {
            return Err(Error::invalid(format!(
                "alphabet has {} symbols, at most {MAX_SYMBOLS} allowed",
                symbols.len()
            )));
        }
        let mut lookup = HashMap::with_capacity(symbols.len());
        for (i, &c) in symbols.iter().enumerate() {
            if lookup.insert(c, i).is_some() {
                return Err(Error::invalid(format!("duplicate alphabet symbol {c:?}")));
            }
        }
        Ok(Alphabet { symbols, lookup })
    }

    /// Parses one symbol per line (UTF-8). A trailing newline is allowed.
    pub fn parse(text: &str) -> std::result::Result<Self, FormatError> {
        let mut symbols = Vec::new();
        let body = text.strip_suffix('\n').unwrap_or(text);
        if body.is_empty() {
            return Err(FormatError::invariant("", "alphabet file is empty"));
        }
        for (n, line) in body.split('\n').enumerate() {
            let line = line.strip_suffix('\r').unwrap_or(line);
            let mut chars = line.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => symbols.push(c),
                _ => {
                    return Err(FormatError::schema(
                        format!("line {}", n + 1),
                        format!("expected exactly one character, got {line:?}"),
                    ))
                }
            }
        }
        Alphabet::new(symbols).map_err(|e| FormatError::invariant("", e.to_string()))
    }

    pub fn to_file_string(&self) -> String {
        self.symbols.iter().map(|c| format!("{c}\n")).collect()
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn blank_index(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn symbol(&self, index: usize) -> Option<char> {
        self.symbols.get(index).copied()
    }

    pub fn index_of(&self, c: char) -> Option<usize> {
        self.lookup.get(&c).copied()
    }

    /// Text for a sequence of symbol indices.
    pub fn render(&self, labels: &[usize]) -> String {
        labels.iter().filter_map(|&i| self.symbol(i)).collect()
    }
}

/// The `k` most frequent non-whitespace characters of a corpus, ordered by
/// count descending, then codepoint ascending.
pub fn build_alphabet<S: AsRef<str>>(corpus: &[S], k: usize) -> Result<Alphabet> {
    if k == 0 {
        return Err(Error::invalid("alphabet size must be at least 1"));
    }
    let mut counts: HashMap<char, u64> = HashMap::new();
    for s in corpus {
        for c in s.as_ref().chars().filter(|c| !c.is_whitespace()) {
            *counts.entry(c).or_default() += 1;
        }
    }
    if counts.is_empty() {
        return Err(Error::Undefined("empty corpus"));
    }
    let mut ranked: Vec<(char, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(k);
    Alphabet::new(ranked.into_iter().map(|(c, _)| c).collect())
}

/// Geometry of the normalized recognizer input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropSpec {
    pub height: u32,
    pub width: u32,
    pub char_width: u32,
}

impl Default for CropSpec {
    fn default() -> Self {
        CropSpec {
            height: 48,
            width: 320,
            char_width: 8,
        }
    }
}

impl CropSpec {
    /// Number of output frames, one per character slot.
    pub fn max_chars(&self) -> usize {
        (self.width / self.char_width) as usize
    }
}

/// 2×3 affine map `(x, y) ↦ (a·x + b·y + c, d·x + e·y + f)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl Affine {
    pub fn apply(&self, p: Point) -> Point {
        Point::new(
            self.a * p.x + self.b * p.y + self.c,
            self.d * p.x + self.e * p.y + self.f,
        )
    }

    pub fn determinant(&self) -> f64 {
        self.a * self.e - self.b * self.d
    }

    pub fn inverse(&self) -> Result<Affine> {
        let det = self.determinant();
        if det == 0.0 || !det.is_finite() {
            return Err(Error::invalid("affine map is singular"));
        }
        let (a, b, d, e) = (self.e / det, -self.b / det, -self.d / det, self.a / det);
        Ok(Affine {
            a,
            b,
            c: -(a * self.c + b * self.f),
            d,
            e,
            f: -(d * self.c + e * self.f),
        })
    }

    pub fn coefficients(&self) -> [[f64; 3]; 2] {
        [[self.a, self.b, self.c], [self.d, self.e, self.f]]
    }
}

/// Affine map from the image frame onto the `width × height` crop frame.
///
/// The box's local corner `(-w/2, -h/2)` lands on `(0, 0)` and `(w/2, h/2)`
/// on `(width, height)`; rotation is removed and each axis is scaled
/// independently.
pub fn crop_transform(rbox: &RotatedBox, spec: &CropSpec) -> Result<Affine> {
    if rbox.is_degenerate() {
        return Err(Error::DegenerateBox { w: rbox.w, h: rbox.h });
    }
    let (u, v) = rbox.axes();
    let sx = spec.width as f64 / rbox.w;
    let sy = spec.height as f64 / rbox.h;
    let c = rbox.center();
    Ok(Affine {
        a: sx * u.x,
        b: sx * u.y,
        c: spec.width as f64 / 2.0 - sx * u.dot(c),
        d: sy * v.x,
        e: sy * v.y,
        f: spec.height as f64 / 2.0 - sy * v.dot(c),
    })
}

/// Per-frame probability distributions over the alphabet plus blank.
///
/// Rows are frames (at most one per character slot of the crop); the last
/// column is the blank.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Posterior {
    pub fn new(frames: Vec<Vec<f64>>) -> Result<Self> {
        let rows = frames.len();
        let cols = frames.first().map_or(0, Vec::len);
        if frames.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("posterior rows have different lengths"));
        }
        Self::from_flat(rows, cols, frames.into_iter().flatten().collect())
    }

    pub fn from_flat(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        let max_rows = CropSpec::default().max_chars();
        if rows == 0 || rows > max_rows {
            return Err(Error::invalid(format!(
                "posterior must have between 1 and {max_rows} frames, got {rows}"
            )));
        }
        if cols < 1 {
            return Err(Error::invalid("posterior needs at least the blank column"));
        }
        if data.len() != rows * cols {
            return Err(Error::invalid("posterior data length does not match its shape"));
        }
        for (r, row) in data.chunks(cols).enumerate() {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::invalid(format!("frame {r} has a value outside [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::invalid(format!("frame {r} sums to {sum}, expected 1")));
            }
        }
        Ok(Posterior { rows, cols, data })
    }

    pub fn frames(&self) -> usize {
        self.rows
    }

    pub fn columns(&self) -> usize {
        self.cols
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.cols..(t + 1) * self.cols]
    }

    pub fn get(&self, t: usize, k: usize) -> f64 {
        self.data[t * self.cols + k]
    }

    fn check_alphabet(&self, alphabet: &Alphabet) -> Result<()> {
        if self.cols != alphabet.len() + 1 {
            return Err(Error::invalid(format!(
                "posterior has {} columns but the alphabet needs {} (symbols + blank)",
                self.cols,
                alphabet.len() + 1
            )));
        }
        Ok(())
    }
}

/// A decoded label sequence and its score.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub text: String,
    pub labels: Vec<usize>,
    /// Greedy: probability of the single argmax path. Beam: summed probability
    /// of all alignments of `labels` retained by the search.
    pub score: f64,
}

/// Removes repeats, then blanks.
pub fn collapse(path: &[usize], blank: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut prev = None;
    for &k in path {
        if Some(k) != prev && k != blank {
            out.push(k);
        }
        prev = Some(k);
    }
    out
}

/// Best-path decoding: per-frame argmax (lowest index on ties), collapsed.
pub fn ctc_greedy_decode(p: &Posterior, alphabet: &Alphabet) -> Result<Decoded> {
    p.check_alphabet(alphabet)?;
    let mut path = Vec::with_capacity(p.frames());
    let mut score = 1.0;
    for t in 0..p.frames() {
        let row = p.row(t);
        let mut best = 0;
        for (k, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = k;
            }
        }
        score *= row[best];
        path.push(best);
    }
    let labels = collapse(&path, alphabet.blank_index());
    Ok(Decoded {
        text: alphabet.render(&labels),
        labels,
        score,
    })
}

#[derive(Debug, Clone, Copy, Default)]
struct PrefixProb {
    blank: f64,
    non_blank: f64,
}

impl PrefixProb {
    fn total(&self) -> f64 {
        self.blank + self.non_blank
    }
}

/// CTC prefix beam search.
///
/// Keeps the `beam` most probable prefixes per frame (ties by label sequence).
/// With a beam no smaller than the number of distinct prefixes the search is
/// exhaustive and the score is the exact labeling probability.
pub fn ctc_beam_decode(p: &Posterior, alphabet: &Alphabet, beam: usize) -> Result<Decoded> {
    p.check_alphabet(alphabet)?;
    if beam == 0 {
        return Err(Error::invalid("beam width must be at least 1"));
    }
    let blank = alphabet.blank_index();
    let mut beams: Vec<(Vec<usize>, PrefixProb)> = vec![(
        Vec::new(),
        PrefixProb {
            blank: 1.0,
            non_blank: 0.0,
        },
    )];

    for t in 0..p.frames() {
        let row = p.row(t);
        let mut next: HashMap<Vec<usize>, PrefixProb> = HashMap::new();
        for (prefix, prob) in &beams {
            for (k, &pk) in row.iter().enumerate() {
                if pk == 0.0 {
                    continue;
                }
                if k == blank {
                    next.entry(prefix.clone()).or_default().blank += prob.total() * pk;
                    continue;
                }
                let mut extended = prefix.clone();
                extended.push(k);
                if prefix.last() == Some(&k) {
                    // Repeat without a separating blank stays on the prefix.
                    next.entry(prefix.clone()).or_default().non_blank += prob.non_blank * pk;
                    next.entry(extended).or_default().non_blank += prob.blank * pk;
                } else {
                    next.entry(extended).or_default().non_blank += prob.total() * pk;
                }
            }
        }
        let mut ranked: Vec<(Vec<usize>, PrefixProb)> = next.into_iter().collect();
        ranked.sort_by(|a, b| b.1.total().total_cmp(&a.1.total()).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(beam);
        beams = ranked;
    }

    let (labels, prob) = beams
        .into_iter()
        .next()
        .unwrap_or((Vec::new(), PrefixProb::default()));
    Ok(Decoded {
        text: alphabet.render(&labels),
        score: prob.total(),
        labels,
    })
}

const BINARY_MAGIC: &[u8; 4] = b"CTCP";

/// Serializes a posterior as `CTCP`, `u16` rows, `u16` cols, then row-major
/// little-endian `f32` probabilities.
pub fn encode_posterior_binary(p: &Posterior) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 4 * p.data.len());
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&(p.rows as u16).to_le_bytes());
    out.extend_from_slice(&(p.cols as u16).to_le_bytes());
    for &v in &p.data {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

fn decode_posterior_binary(bytes: &[u8]) -> std::result::Result<Posterior, FormatError> {
    if bytes.len() < 8 {
        return Err(FormatError::malformed("header", "truncated posterior header"));
    }
    let rows = u16::from_le_bytes([bytes[4], bytes[5]]) as usize;
    let cols = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    let body = &bytes[8..];
    if body.len() != rows * cols * 4 {
        return Err(FormatError::malformed(
            "body",
            format!("expected {} bytes of f32 data, found {}", rows * cols * 4, body.len()),
        ));
    }
    let data = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Posterior::from_flat(rows, cols, data).map_err(|e| FormatError::invariant("", e.to_string()))
}

fn decode_posterior_json(bytes: &[u8]) -> std::result::Result<Posterior, FormatError> {
    let value: serde_json::Value = serde_json::from_slice(bytes)
        .map_err(|e| FormatError::malformed("", format!("invalid JSON: {e}")))?;
    let rows = value
        .as_array()
        .ok_or_else(|| FormatError::schema("", "expected an array of frames"))?;
    let mut frames = Vec::with_capacity(rows.len());
    for (t, row) in rows.iter().enumerate() {
        let cells = row
            .as_array()
            .ok_or_else(|| FormatError::schema(format!("[{t}]"), "expected an array of numbers"))?;
        let mut frame = Vec::with_capacity(cells.len());
        for (k, cell) in cells.iter().enumerate() {
            frame.push(
                cell.as_f64()
                    .ok_or_else(|| FormatError::schema(format!("[{t}][{k}]"), "expected a number"))?,
            );
        }
        if frame.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(FormatError::invariant(format!("[{t}]"), "probabilities must lie in [0, 1]"));
        }
        let sum: f64 = frame.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(FormatError::invariant(format!("[{t}]"), format!("frame sums to {sum}, expected 1")));
        }
        frames.push(frame);
    }
    Posterior::new(frames).map_err(|e| FormatError::invariant("", e.to_string()))
}

/// Reads either posterior encoding, detected by the binary magic.
pub fn parse_posterior(bytes: &[u8]) -> std::result::Result<Posterior, FormatError> {
    if bytes.starts_with(BINARY_MAGIC) {
        decode_posterior_binary(bytes)
    } else {
        decode_posterior_json(bytes)
    }
}
