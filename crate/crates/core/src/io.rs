//! File formats.
//!
//! Readers validate structure by hand. Rejections carry the JSON path of the
//! offending value (`words[0].text`) and unknown fields are refused.
//! Writers are deterministic: keys in a fixed order, two-space indentation,
//! floats with exactly six decimals. Angles are degrees on disk and radians
//! in memory.

use serde_json::{Map, Value};

use crate::error::FormatError;
use crate::geometry::{aabb, AxisRect, Point, RotatedBox};
use crate::reading_order::{Paragraph, Word};
use crate::roi::PointingGesture;
use crate::sim::{ByMode, Distribution, LatencyModel, Payload, SimMode, SimResult, SimScenario, StageCost, DEFAULT_JOIN};

pub type FormatResult<T> = std::result::Result<T, FormatError>;

pub const SCHEMA_VERSION: u64 = 1;

/// Slack allowed when re-checking paragraph geometry read back from six
/// decimal places.
pub const FILE_GEOMETRY_TOLERANCE: f64 = 1e-3;

// ---------------------------------------------------------------------------
// Writing

/// Minimal JSON document model with deterministic rendering.
#[derive(Debug, Clone, PartialEq)]
pub enum Json {
    Null,
    Bool(bool),
    Int(i64),
    Num(f64),
    Str(String),
    Arr(Vec<Json>),
    Obj(Vec<(String, Json)>),
}

impl Json {
    pub fn obj<K: Into<String>>(fields: impl IntoIterator<Item = (K, Json)>) -> Json {
        Json::Obj(fields.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn str(s: impl Into<String>) -> Json {
        Json::Str(s.into())
    }

    /// Pretty rendering with a trailing newline.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.write(&mut out, 0);
        out.push('\n');
        out
    }

    /// Single-line rendering.
    pub fn render_compact(&self) -> String {
        let mut out = String::new();
        self.write_compact(&mut out);
        out
    }

    fn write_scalar(&self, out: &mut String) -> bool {
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Int(i) => out.push_str(&i.to_string()),
            Json::Num(x) => out.push_str(&format_float(*x)),
            Json::Str(s) => out.push_str(&serde_json::to_string(s).expect("strings serialize")),
            _ => return false,
        }
        true
    }

    fn write(&self, out: &mut String, indent: usize) {
        if self.write_scalar(out) {
            return;
        }
        let pad = "  ".repeat(indent + 1);
        let close = "  ".repeat(indent);
        match self {
            Json::Arr(items) if items.is_empty() => out.push_str("[]"),
            Json::Obj(fields) if fields.is_empty() => out.push_str("{}"),
            Json::Arr(items) => {
                // Arrays of scalars stay on one line.
                if items.iter().all(|v| !matches!(v, Json::Arr(_) | Json::Obj(_))) {
                    self.write_compact(out);
                    return;
                }
                out.push_str("[\n");
                for (i, v) in items.iter().enumerate() {
                    out.push_str(&pad);
                    v.write(out, indent + 1);
                    out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
                }
                out.push_str(&close);
                out.push(']');
            }
            Json::Obj(fields) => {
                out.push_str("{\n");
                for (i, (k, v)) in fields.iter().enumerate() {
                    out.push_str(&pad);
                    out.push_str(&serde_json::to_string(k).expect("strings serialize"));
                    out.push_str(": ");
                    v.write(out, indent + 1);
                    out.push_str(if i + 1 < fields.len() { ",\n" } else { "\n" });
                }
                out.push_str(&close);
                out.push('}');
            }
            _ => unreachable!(),
        }
    }

    fn write_compact(&self, out: &mut String) {
        if self.write_scalar(out) {
            return;
        }
        match self {
            Json::Arr(items) => {
                out.push('[');
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    v.write_compact(out);
                }
                out.push(']');
            }
            Json::Obj(fields) => {
                out.push('{');
                for (i, (k, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(&serde_json::to_string(k).expect("strings serialize"));
                    out.push_str(": ");
                    v.write_compact(out);
                }
                out.push('}');
            }
            _ => unreachable!(),
        }
    }
}

/// Six fixed decimals; negative zero prints as zero.
pub fn format_float(x: f64) -> String {
    let s = format!("{x:.6}");
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

// ---------------------------------------------------------------------------
// Reading

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn index(path: &str, i: usize) -> String {
    format!("{path}[{i}]")
}

/// Parses bytes as JSON, mapping syntax errors to `Malformed`.
pub fn parse_json(bytes: &[u8]) -> FormatResult<Value> {
    let text = std::str::from_utf8(bytes).map_err(|e| FormatError::malformed("", format!("not UTF-8: {e}")))?;
    serde_json::from_str(text).map_err(|e| FormatError::malformed("", format!("invalid JSON: {e}")))
}

/// Field-by-field reader over one JSON object.
struct Fields<'a> {
    map: &'a Map<String, Value>,
    path: String,
    known: Vec<&'static str>,
}

impl<'a> Fields<'a> {
    fn new(v: &'a Value, path: &str) -> FormatResult<Self> {
        let map = v
            .as_object()
            .ok_or_else(|| FormatError::schema(path, format!("expected an object, found {}", kind_of(v))))?;
        Ok(Fields {
            map,
            path: path.to_string(),
            known: Vec::new(),
        })
    }

    fn opt(&mut self, key: &'static str) -> Option<(&'a Value, String)> {
        self.known.push(key);
        self.map.get(key).map(|v| (v, join(&self.path, key)))
    }

    fn req(&mut self, key: &'static str) -> FormatResult<(&'a Value, String)> {
        let path = join(&self.path, key);
        self.opt(key)
            .ok_or_else(|| FormatError::schema(path, "missing required field"))
    }

    fn f64(&mut self, key: &'static str) -> FormatResult<f64> {
        let (v, p) = self.req(key)?;
        as_f64(v, &p)
    }

    fn opt_f64(&mut self, key: &'static str) -> FormatResult<Option<f64>> {
        self.opt(key).map(|(v, p)| as_f64(v, &p)).transpose()
    }

    fn string(&mut self, key: &'static str) -> FormatResult<String> {
        let (v, p) = self.req(key)?;
        as_str(v, &p).map(str::to_string)
    }

    fn opt_string(&mut self, key: &'static str) -> FormatResult<Option<String>> {
        self.opt(key).map(|(v, p)| as_str(v, &p).map(str::to_string)).transpose()
    }

    fn u64(&mut self, key: &'static str) -> FormatResult<u64> {
        let (v, p) = self.req(key)?;
        as_u64(v, &p)
    }

    fn array(&mut self, key: &'static str) -> FormatResult<(&'a Vec<Value>, String)> {
        let (v, p) = self.req(key)?;
        let arr = v
            .as_array()
            .ok_or_else(|| FormatError::schema(&p, format!("expected an array, found {}", kind_of(v))))?;
        Ok((arr, p))
    }

    fn finish(self) -> FormatResult<()> {
        let mut extra: Vec<&String> = self.map.keys().filter(|k| !self.known.contains(&k.as_str())).collect();
        extra.sort();
        match extra.first() {
            Some(k) => Err(FormatError::schema(join(&self.path, k), "unknown field")),
            None => Ok(()),
        }
    }
}

fn kind_of(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

fn as_f64(v: &Value, path: &str) -> FormatResult<f64> {
    let x = v
        .as_f64()
        .ok_or_else(|| FormatError::schema(path, format!("expected a number, found {}", kind_of(v))))?;
    if !x.is_finite() {
        return Err(FormatError::invariant(path, "value must be finite"));
    }
    Ok(x)
}

fn as_u64(v: &Value, path: &str) -> FormatResult<u64> {
    v.as_u64()
        .ok_or_else(|| FormatError::schema(path, format!("expected a non-negative integer, found {}", kind_of(v))))
}

fn as_str<'a>(v: &'a Value, path: &str) -> FormatResult<&'a str> {
    v.as_str()
        .ok_or_else(|| FormatError::schema(path, format!("expected a string, found {}", kind_of(v))))
}

fn as_bool(v: &Value, path: &str) -> FormatResult<bool> {
    v.as_bool()
        .ok_or_else(|| FormatError::schema(path, format!("expected a boolean, found {}", kind_of(v))))
}

fn schema_version(f: &mut Fields) -> FormatResult<u64> {
    let (v, p) = f.req("schema_version")?;
    let version = as_u64(v, &p)?;
    if version != SCHEMA_VERSION {
        return Err(FormatError::invariant(p, format!("unsupported schema version {version}, expected {SCHEMA_VERSION}")));
    }
    Ok(version)
}

fn read_point(v: &Value, path: &str) -> FormatResult<Point> {
    let mut f = Fields::new(v, path)?;
    let p = Point::new(f.f64("x")?, f.f64("y")?);
    f.finish()?;
    Ok(p)
}

fn write_point(p: Point) -> Json {
    Json::obj([("x", Json::Num(p.x)), ("y", Json::Num(p.y))])
}

/// Reads `{cx, cy, w, h, angle_deg}`. Word boxes must have positive size.
fn read_box(v: &Value, path: &str, positive: bool) -> FormatResult<RotatedBox> {
    let mut f = Fields::new(v, path)?;
    let cx = f.f64("cx")?;
    let cy = f.f64("cy")?;
    let w = f.f64("w")?;
    let h = f.f64("h")?;
    let angle = f.f64("angle_deg")?;
    f.finish()?;
    for (key, val) in [("w", w), ("h", h)] {
        if (positive && val <= 0.0) || val < 0.0 {
            let need = if positive { "> 0" } else { ">= 0" };
            return Err(FormatError::invariant(join(path, key), format!("must be {need}, got {val}")));
        }
    }
    Ok(RotatedBox::new(cx, cy, w, h, angle.to_radians()))
}

fn write_box(b: &RotatedBox) -> Json {
    Json::obj([
        ("cx", Json::Num(b.cx)),
        ("cy", Json::Num(b.cy)),
        ("w", Json::Num(b.w)),
        ("h", Json::Num(b.h)),
        ("angle_deg", Json::Num(b.angle.to_degrees())),
    ])
}

fn read_rect(v: &Value, path: &str) -> FormatResult<AxisRect> {
    let mut f = Fields::new(v, path)?;
    let r = AxisRect::new(f.f64("top")?, f.f64("left")?, f.f64("height")?, f.f64("width")?);
    f.finish()?;
    if r.height < 0.0 || r.width < 0.0 {
        return Err(FormatError::invariant(path, "height and width must be >= 0"));
    }
    Ok(r)
}

fn write_rect(r: &AxisRect) -> Json {
    Json::obj([
        ("top", Json::Num(r.top)),
        ("left", Json::Num(r.left)),
        ("height", Json::Num(r.height)),
        ("width", Json::Num(r.width)),
    ])
}

/// Reads one word entry; returns it with its optional of-interest flag.
fn read_word(v: &Value, path: &str) -> FormatResult<(Word, Option<bool>)> {
    let mut f = Fields::new(v, path)?;
    let (tv, tp) = f.req("text")?;
    let text = as_str(tv, &tp)?;
    let (bv, bp) = f.req("box")?;
    let rbox = read_box(bv, &bp, true)?;
    let confidence = f.opt_f64("confidence")?.unwrap_or(1.0);
    let interest = f.opt("of_interest").map(|(v, p)| as_bool(v, &p)).transpose()?;
    f.finish()?;
    if text.trim().is_empty() {
        return Err(FormatError::invariant(tp, "text must not be empty"));
    }
    if text.trim() != text {
        return Err(FormatError::invariant(tp, "text has leading or trailing whitespace"));
    }
    if !(0.0..=1.0).contains(&confidence) {
        return Err(FormatError::invariant(join(path, "confidence"), "must lie in [0, 1]"));
    }
    Ok((Word::new(text, rbox).with_confidence(confidence), interest))
}

fn write_word(w: &Word, interest: Option<bool>) -> Json {
    let mut fields = vec![
        ("text".to_string(), Json::str(&w.text)),
        ("box".to_string(), write_box(&w.rbox)),
        ("confidence".to_string(), Json::Num(w.confidence)),
    ];
    if let Some(flag) = interest {
        fields.push(("of_interest".to_string(), Json::Bool(flag)));
    }
    Json::Obj(fields)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageInfo {
    pub id: String,
    pub width: u32,
    pub height: u32,
}

impl ImageInfo {
    pub fn size(&self) -> (f64, f64) {
        (self.width as f64, self.height as f64)
    }
}

fn read_image(v: &Value, path: &str) -> FormatResult<ImageInfo> {
    let mut f = Fields::new(v, path)?;
    let id = f.string("id")?;
    let mut dim = |key: &'static str| -> FormatResult<u32> {
        let (v, p) = f.req(key)?;
        let x = as_u64(v, &p)?;
        if x == 0 || x > u32::MAX as u64 {
            return Err(FormatError::invariant(p, "must be a positive pixel count"));
        }
        Ok(x as u32)
    };
    let width = dim("width")?;
    let height = dim("height")?;
    f.finish()?;
    Ok(ImageInfo { id, width, height })
}

fn write_image(im: &ImageInfo) -> Json {
    Json::obj([
        ("id", Json::str(&im.id)),
        ("width", Json::Int(im.width as i64)),
        ("height", Json::Int(im.height as i64)),
    ])
}

/// Detected and recognized words of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct WordsFile {
    pub image: ImageInfo,
    pub words: Vec<Word>,
    /// Per-word "word of interest" flag, when annotated.
    pub of_interest: Vec<Option<bool>>,
}

impl WordsFile {
    pub fn new(image: ImageInfo, words: Vec<Word>) -> Self {
        let of_interest = vec![None; words.len()];
        WordsFile {
            image,
            words,
            of_interest,
        }
    }

    /// Words flagged of interest; every word when none is flagged.
    pub fn words_of_interest(&self) -> Vec<Word> {
        if self.of_interest.iter().all(Option::is_none) {
            return self.words.clone();
        }
        self.words
            .iter()
            .zip(&self.of_interest)
            .filter(|(_, f)| f.unwrap_or(true))
            .map(|(w, _)| w.clone())
            .collect()
    }
}

fn read_words_value(v: &Value, path: &str) -> FormatResult<WordsFile> {
    let mut f = Fields::new(v, path)?;
    schema_version(&mut f)?;
    let (iv, ip) = f.req("image")?;
    let image = read_image(iv, &ip)?;
    let (arr, ap) = f.array("words")?;
    let mut words = Vec::with_capacity(arr.len());
    let mut of_interest = Vec::with_capacity(arr.len());
    for (i, w) in arr.iter().enumerate() {
        let (word, flag) = read_word(w, &index(&ap, i))?;
        words.push(word);
        of_interest.push(flag);
    }
    f.finish()?;
    Ok(WordsFile {
        image,
        words,
        of_interest,
    })
}

pub fn parse_words(bytes: &[u8]) -> FormatResult<WordsFile> {
    read_words_value(&parse_json(bytes)?, "")
}

pub fn words_to_json(file: &WordsFile) -> Json {
    Json::obj([
        ("schema_version", Json::Int(SCHEMA_VERSION as i64)),
        ("image", write_image(&file.image)),
        (
            "words",
            Json::Arr(file.words.iter().zip(&file.of_interest).map(|(w, f)| write_word(w, *f)).collect()),
        ),
    ])
}

pub fn serialize_words(file: &WordsFile) -> String {
    words_to_json(file).render()
}

/// A words file or a JSON array of them (one per image).
pub fn parse_words_corpus(bytes: &[u8]) -> FormatResult<Vec<WordsFile>> {
    let v = parse_json(bytes)?;
    match &v {
        Value::Array(items) => items.iter().enumerate().map(|(i, x)| read_words_value(x, &index("", i))).collect(),
        _ => Ok(vec![read_words_value(&v, "")?]),
    }
}

/// Paragraphs of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct ParagraphsFile {
    pub image: ImageInfo,
    pub paragraphs: Vec<Paragraph>,
}

fn read_paragraph(v: &Value, path: &str) -> FormatResult<Paragraph> {
    let mut f = Fields::new(v, path)?;
    let (arr, ap) = f.array("words")?;
    let words = arr
        .iter()
        .enumerate()
        .map(|(i, w)| read_word(w, &index(&ap, i)).map(|(w, _)| w))
        .collect::<FormatResult<Vec<Word>>>()?;
    let (rv, rp) = f.req("rect")?;
    let rect = read_rect(rv, &rp)?;
    let (bv, bp) = f.req("rbox")?;
    let rbox = read_box(bv, &bp, false)?;
    f.finish()?;

    if words.is_empty() {
        return Err(FormatError::invariant(ap, "a paragraph needs at least one word"));
    }
    let hull = aabb(&rbox);
    let diffs = [
        hull.top - rect.top,
        hull.left - rect.left,
        hull.height - rect.height,
        hull.width - rect.width,
    ];
    if diffs.iter().any(|d| d.abs() > FILE_GEOMETRY_TOLERANCE) {
        return Err(FormatError::invariant(rp, "rect is not the axis-aligned hull of rbox"));
    }
    for (i, w) in words.iter().enumerate() {
        if !w.rbox.corners().iter().all(|&c| rbox.contains(c, FILE_GEOMETRY_TOLERANCE)) {
            return Err(FormatError::invariant(index(&ap, i), "word box is not enclosed by the paragraph rbox"));
        }
    }
    Ok(Paragraph { words, rect, rbox })
}

pub fn parse_paragraphs(bytes: &[u8]) -> FormatResult<ParagraphsFile> {
    let v = parse_json(bytes)?;
    let mut f = Fields::new(&v, "")?;
    schema_version(&mut f)?;
    let (iv, ip) = f.req("image")?;
    let image = read_image(iv, &ip)?;
    let (arr, ap) = f.array("paragraphs")?;
    let paragraphs = arr
        .iter()
        .enumerate()
        .map(|(i, p)| read_paragraph(p, &index(&ap, i)))
        .collect::<FormatResult<Vec<_>>>()?;
    f.finish()?;
    Ok(ParagraphsFile { image, paragraphs })
}

pub fn paragraphs_to_json(file: &ParagraphsFile) -> Json {
    let paragraphs = file
        .paragraphs
        .iter()
        .map(|p| {
            Json::obj([
                ("words", Json::Arr(p.words.iter().map(|w| write_word(w, None)).collect())),
                ("rect", write_rect(&p.rect)),
                ("rbox", write_box(&p.rbox)),
            ])
        })
        .collect();
    Json::obj([
        ("schema_version", Json::Int(SCHEMA_VERSION as i64)),
        ("image", write_image(&file.image)),
        ("paragraphs", Json::Arr(paragraphs)),
    ])
}

pub fn serialize_paragraphs(file: &ParagraphsFile) -> String {
    paragraphs_to_json(file).render()
}

pub fn parse_gesture(bytes: &[u8]) -> FormatResult<PointingGesture> {
    let v = parse_json(bytes)?;
    let mut f = Fields::new(&v, "")?;
    let (jv, jp) = f.req("last_joint")?;
    let joint = read_point(jv, &jp)?;
    let (tv, tp) = f.req("tip")?;
    let tip = read_point(tv, &tp)?;
    f.finish()?;
    PointingGesture::new(joint, tip).map_err(|e| FormatError::invariant("tip", e.to_string()))
}

pub fn serialize_gesture(g: &PointingGesture) -> String {
    Json::obj([("last_joint", write_point(g.last_joint)), ("tip", write_point(g.tip))]).render()
}

/// Crop rectangles keyed by image id.
#[derive(Debug, Clone, PartialEq)]
pub struct CropsFile {
    pub crops: Vec<(String, AxisRect)>,
}

impl CropsFile {
    pub fn get(&self, image_id: &str) -> Option<&AxisRect> {
        self.crops.iter().find(|(id, _)| id == image_id).map(|(_, r)| r)
    }
}

pub fn parse_crops(bytes: &[u8]) -> FormatResult<CropsFile> {
    let v = parse_json(bytes)?;
    let mut f = Fields::new(&v, "")?;
    schema_version(&mut f)?;
    let (arr, ap) = f.array("crops")?;
    let mut crops = Vec::with_capacity(arr.len());
    for (i, c) in arr.iter().enumerate() {
        let path = index(&ap, i);
        let mut cf = Fields::new(c, &path)?;
        let (idv, idp) = cf.req("image_id")?;
        let id = as_str(idv, &idp)?.to_string();
        let (rv, rp) = cf.req("rect")?;
        let rect = read_rect(rv, &rp)?;
        cf.finish()?;
        if crops.iter().any(|(other, _)| *other == id) {
            return Err(FormatError::invariant(idp, format!("duplicate crop for image {id:?}")));
        }
        crops.push((id, rect));
    }
    f.finish()?;
    Ok(CropsFile { crops })
}

pub fn serialize_crops(file: &CropsFile) -> String {
    let crops = file
        .crops
        .iter()
        .map(|(id, r)| Json::obj([("image_id", Json::str(id)), ("rect", write_rect(r))]))
        .collect();
    Json::obj([("schema_version", Json::Int(SCHEMA_VERSION as i64)), ("crops", Json::Arr(crops))]).render()
}

/// JSON posterior: an array of frames, probabilities at full precision.
pub fn serialize_posterior_json(p: &crate::recognition::Posterior) -> String {
    let rows: Vec<String> = (0..p.frames())
        .map(|t| {
            let cells: Vec<String> = p.row(t).iter().map(|v| serde_json::to_string(v).expect("finite")).collect();
            format!("  [{}]", cells.join(", "))
        })
        .collect();
    format!("[\n{}\n]\n", rows.join(",\n"))
}

// ---------------------------------------------------------------------------
// Scenarios

fn read_mode(v: &Value, path: &str) -> FormatResult<SimMode> {
    match as_str(v, path)? {
        "cpu" => Ok(SimMode::Cpu),
        "hardware_accelerated" | "ha" => Ok(SimMode::HardwareAccelerated),
        other => Err(FormatError::invariant(path, format!("unknown mode {other:?}"))),
    }
}

fn read_by_mode<T>(v: &Value, path: &str, read: impl Fn(&Value, &str) -> FormatResult<T>) -> FormatResult<ByMode<T>> {
    let per_mode = v
        .as_object()
        .is_some_and(|m| m.contains_key("cpu") || m.contains_key("hardware_accelerated"));
    if !per_mode {
        return read(v, path).map(ByMode::Same);
    }
    let mut f = Fields::new(v, path)?;
    let (cv, cp) = f.req("cpu")?;
    let cpu = read(cv, &cp)?;
    let (av, ap) = f.req("hardware_accelerated")?;
    let accelerated = read(av, &ap)?;
    f.finish()?;
    Ok(ByMode::PerMode { cpu, accelerated })
}

fn write_by_mode<T>(v: &ByMode<T>, write: impl Fn(&T) -> Json) -> Json {
    match v {
        ByMode::Same(x) => write(x),
        ByMode::PerMode { cpu, accelerated } => {
            Json::obj([("cpu", write(cpu)), ("hardware_accelerated", write(accelerated))])
        }
    }
}

fn non_negative(v: &Value, path: &str) -> FormatResult<f64> {
    let x = as_f64(v, path)?;
    if x < 0.0 {
        return Err(FormatError::invariant(path, "must be >= 0"));
    }
    Ok(x)
}

fn read_latency(v: &Value, path: &str) -> FormatResult<LatencyModel> {
    let map = v
        .as_object()
        .ok_or_else(|| FormatError::schema(path, format!("expected a latency model object, found {}", kind_of(v))))?;
    if map.len() != 1 {
        return Err(FormatError::schema(
            path,
            "latency model needs exactly one of fixed, per_word, per_batch, transfer, quantile",
        ));
    }
    let (key, inner) = map.iter().next().unwrap();
    let p = join(path, key);
    Ok(match key.as_str() {
        "fixed" => LatencyModel::Fixed(non_negative(inner, &p)?),
        "per_word" => LatencyModel::PerWord(non_negative(inner, &p)?),
        "per_batch" => {
            let mut f = Fields::new(inner, &p)?;
            let (mv, mp) = f.req("ms")?;
            let batch_ms = non_negative(mv, &mp)?;
            let (wv, wp) = f.req("words")?;
            let batch_words = as_f64(wv, &wp)?;
            f.finish()?;
            if batch_words <= 0.0 {
                return Err(FormatError::invariant(wp, "must be > 0"));
            }
            LatencyModel::PerBatch { batch_ms, batch_words }
        }
        "transfer" => {
            let mut f = Fields::new(inner, &p)?;
            let (pv, pp) = f.req("payload")?;
            let payload = match pv {
                Value::String(s) if s == "full" => Payload::Full,
                Value::String(s) if s == "thumb" => Payload::Thumbnail,
                Value::Number(_) => Payload::Bytes(non_negative(pv, &pp)?),
                _ => return Err(FormatError::schema(pp, "expected \"full\", \"thumb\" or a byte count")),
            };
            let (bv, bp) = f.req("bytes_per_ms")?;
            let bytes_per_ms = as_f64(bv, &bp)?;
            let (rv, rp) = f.req("rtt_ms")?;
            let rtt_ms = non_negative(rv, &rp)?;
            f.finish()?;
            if bytes_per_ms <= 0.0 {
                return Err(FormatError::invariant(bp, "must be > 0"));
            }
            LatencyModel::Transfer {
                payload,
                bytes_per_ms,
                rtt_ms,
            }
        }
        "quantile" => {
            let mut f = Fields::new(inner, &p)?;
            let dist = f.string("dist")?;
            let distribution = match dist.as_str() {
                "uniform" => Distribution::Uniform {
                    low: f.f64("low")?,
                    high: f.f64("high")?,
                },
                "normal" => Distribution::Normal {
                    mean: f.f64("mean")?,
                    std_dev: f.f64("std_dev")?,
                },
                "lognormal" => Distribution::LogNormal {
                    mu: f.f64("mu")?,
                    sigma: f.f64("sigma")?,
                },
                other => return Err(FormatError::invariant(join(&p, "dist"), format!("unknown distribution {other:?}"))),
            };
            let q = f.f64("q")?;
            f.finish()?;
            if !(0.0..=1.0).contains(&q) {
                return Err(FormatError::invariant(join(&p, "q"), "must lie in [0, 1]"));
            }
            LatencyModel::Quantile { distribution, q }
        }
        _ => return Err(FormatError::schema(p, "unknown latency model")),
    })
}

fn write_latency(m: &LatencyModel) -> Json {
    match m {
        LatencyModel::Fixed(v) => Json::obj([("fixed", Json::Num(*v))]),
        LatencyModel::PerWord(v) => Json::obj([("per_word", Json::Num(*v))]),
        LatencyModel::PerBatch { batch_ms, batch_words } => Json::obj([(
            "per_batch",
            Json::obj([("ms", Json::Num(*batch_ms)), ("words", Json::Num(*batch_words))]),
        )]),
        LatencyModel::Transfer {
            payload,
            bytes_per_ms,
            rtt_ms,
        } => {
            let payload = match payload {
                Payload::Full => Json::str("full"),
                Payload::Thumbnail => Json::str("thumb"),
                Payload::Bytes(b) => Json::Num(*b),
            };
            Json::obj([(
                "transfer",
                Json::obj([
                    ("payload", payload),
                    ("bytes_per_ms", Json::Num(*bytes_per_ms)),
                    ("rtt_ms", Json::Num(*rtt_ms)),
                ]),
            )])
        }
        LatencyModel::Quantile { distribution, q } => {
            let mut fields: Vec<(String, Json)> = match distribution {
                Distribution::Uniform { low, high } => vec![
                    ("dist".into(), Json::str("uniform")),
                    ("low".into(), Json::Num(*low)),
                    ("high".into(), Json::Num(*high)),
                ],
                Distribution::Normal { mean, std_dev } => vec![
                    ("dist".into(), Json::str("normal")),
                    ("mean".into(), Json::Num(*mean)),
                    ("std_dev".into(), Json::Num(*std_dev)),
                ],
                Distribution::LogNormal { mu, sigma } => vec![
                    ("dist".into(), Json::str("lognormal")),
                    ("mu".into(), Json::Num(*mu)),
                    ("sigma".into(), Json::Num(*sigma)),
                ],
            };
            fields.push(("q".into(), Json::Num(*q)));
            Json::obj([("quantile", Json::Obj(fields))])
        }
    }
}

fn read_stage(v: &Value, path: &str) -> FormatResult<StageCost> {
    let mut f = Fields::new(v, path)?;
    let name = f.string("name")?;
    let branch = f.opt_string("branch")?;
    let depends_on = match f.opt("depends_on") {
        None => Vec::new(),
        Some((dv, dp)) => {
            let arr = dv.as_array().ok_or_else(|| FormatError::schema(&dp, "expected an array of stage names"))?;
            arr.iter()
                .enumerate()
                .map(|(i, d)| as_str(d, &index(&dp, i)).map(str::to_string))
                .collect::<FormatResult<Vec<_>>>()?
        }
    };
    let (lv, lp) = f.req("latency")?;
    let latency = read_by_mode(lv, &lp, read_latency)?;
    let energy_mwh = match f.opt("energy_mwh") {
        None => ByMode::Same(0.0),
        Some((ev, ep)) => read_by_mode(ev, &ep, non_negative)?,
    };
    // Free-form annotation; not carried in memory.
    f.opt_string("note")?;
    f.finish()?;
    if name.is_empty() {
        return Err(FormatError::invariant(join(path, "name"), "must not be empty"));
    }
    Ok(StageCost {
        name,
        latency,
        energy_mwh,
        depends_on,
        branch,
    })
}

pub fn parse_scenario(bytes: &[u8]) -> FormatResult<SimScenario> {
    let v = parse_json(bytes)?;
    let mut f = Fields::new(&v, "")?;
    schema_version(&mut f)?;
    let name = f.opt_string("name")?.unwrap_or_default();
    let (mv, mp) = f.req("mode")?;
    let mode = read_mode(mv, &mp)?;
    let word_count = f.u64("word_count")?;
    let (fv, fp) = f.req("image_bytes_full")?;
    let image_bytes_full = non_negative(fv, &fp)?;
    let (tv, tp) = f.req("image_bytes_thumb")?;
    let image_bytes_thumb = non_negative(tv, &tp)?;
    let join_stage = f.opt_string("join")?.unwrap_or_else(|| DEFAULT_JOIN.to_string());
    if let Some((nv, np)) = f.opt("notes") {
        let arr = nv.as_array().ok_or_else(|| FormatError::schema(&np, "expected an array of strings"))?;
        for (i, n) in arr.iter().enumerate() {
            as_str(n, &index(&np, i))?;
        }
    }
    let (arr, ap) = f.array("stages")?;
    let stages = arr
        .iter()
        .enumerate()
        .map(|(i, s)| read_stage(s, &index(&ap, i)))
        .collect::<FormatResult<Vec<_>>>()?;
    f.finish()?;
    let scenario = SimScenario {
        name,
        stages,
        word_count,
        image_bytes_full,
        image_bytes_thumb,
        mode,
        join: join_stage,
    };
    scenario
        .validate()
        .map_err(|e| FormatError::invariant("stages", e.to_string()))?;
    Ok(scenario)
}

pub fn scenario_to_json(s: &SimScenario) -> Json {
    let stages = s
        .stages
        .iter()
        .map(|st| {
            let mut fields = vec![("name".to_string(), Json::str(&st.name))];
            if let Some(b) = &st.branch {
                fields.push(("branch".into(), Json::str(b)));
            }
            fields.push((
                "depends_on".into(),
                Json::Arr(st.depends_on.iter().map(Json::str).collect()),
            ));
            fields.push(("latency".into(), write_by_mode(&st.latency, write_latency)));
            fields.push(("energy_mwh".into(), write_by_mode(&st.energy_mwh, |e| Json::Num(*e))));
            Json::Obj(fields)
        })
        .collect();
    Json::obj([
        ("schema_version", Json::Int(SCHEMA_VERSION as i64)),
        ("name", Json::str(&s.name)),
        ("mode", Json::str(s.mode.as_str())),
        ("word_count", Json::Int(s.word_count as i64)),
        ("image_bytes_full", Json::Num(s.image_bytes_full)),
        ("image_bytes_thumb", Json::Num(s.image_bytes_thumb)),
        ("join", Json::str(&s.join)),
        ("stages", Json::Arr(stages)),
    ])
}

pub fn serialize_scenario(s: &SimScenario) -> String {
    scenario_to_json(s).render()
}

pub fn trace_to_json(s: &SimScenario, r: &SimResult) -> Json {
    Json::obj([
        ("scenario", Json::str(&s.name)),
        ("mode", Json::str(s.mode.as_str())),
        ("word_count", Json::Int(s.word_count as i64)),
        ("e2e_ms", Json::Num(r.e2e_ms)),
        ("energy_mwh", Json::Num(r.energy_mwh)),
        ("critical_path", Json::Arr(r.critical_path.iter().map(Json::str).collect())),
        (
            "events",
            Json::Arr(
                r.trace
                    .iter()
                    .map(|e| {
                        Json::obj([
                            ("stage", Json::str(&e.stage)),
                            ("start_ms", Json::Num(e.start_ms)),
                            ("end_ms", Json::Num(e.end_ms)),
                        ])
                    })
                    .collect(),
            ),
        ),
    ])
}

/// Shipped simulator presets.
pub mod presets {
    use super::*;

    pub const CPU_JSON: &str = include_str!("../presets/table6_cpu.json");
    pub const HA_JSON: &str = include_str!("../presets/table6_ha.json");

    pub fn cpu() -> SimScenario {
        parse_scenario(CPU_JSON.as_bytes()).expect("shipped CPU preset is valid")
    }

    pub fn ha() -> SimScenario {
        parse_scenario(HA_JSON.as_bytes()).expect("shipped accelerator preset is valid")
    }
}
