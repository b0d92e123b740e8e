//! The `strkit` command line.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on usage errors and
//! rejected input files.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{debug, info};

use crate::error::{Error, Result};
use crate::evaluation::{evaluate_corpus, ImagePair, MatchMode, NormalizationPolicy, WerBreakdown};
use crate::geometry::AxisRect;
use crate::io::{self, Json, ParagraphsFile, WordsFile};
use crate::reading_order::{reconstruct, GroupingParams, IouMode};
use crate::recognition::{ctc_beam_decode, ctc_greedy_decode, parse_posterior, Alphabet};
use crate::roi::{center_crop, pointed_targets, roi_recall, RoiCrop, DEFAULT_CONE_DEG, DEFAULT_K_PARAGRAPHS, DEFAULT_K_WORDS};
use crate::sim::{branch_latency, simulate, str_latency_hidden, SimMode, STR_BRANCH};
use crate::prompt::{build_prompt, GestureMention, PromptVariant};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "strkit", version, about = "Scene-text pipeline toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Group words into paragraphs in reading order.
    Group(GroupArgs),
    /// Decode CTC posteriors into text.
    Decode(DecodeArgs),
    /// Word error rate of predictions against ground truth.
    EvalWer(EvalWerArgs),
    /// Recall of ground-truth words inside region-of-interest crops.
    EvalRoi(EvalRoiArgs),
    /// Schedule a device/cloud scenario and report latency and energy.
    Simulate(SimulateArgs),
    /// Build the text prompt sent to the multimodal model.
    Prompt(PromptArgs),
}

#[derive(Debug, Args)]
struct GroupArgs {
    /// Words JSON file (`-` for stdin).
    words: PathBuf,
    /// Output paragraphs file; standard output when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    rv: f64,
    #[arg(long, default_value_t = 1.0)]
    rh: f64,
    #[arg(long, default_value_t = 0.01)]
    iou_threshold: f64,
    #[arg(long, value_enum, default_value_t = IouModeArg::Rotated)]
    iou_mode: IouModeArg,
    #[arg(long, default_value_t = 0.5)]
    line_tolerance: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum IouModeArg {
    Rotated,
    Axis,
}

#[derive(Debug, Args)]
struct DecodeArgs {
    /// Posterior files, JSON or binary.
    #[arg(required = true)]
    posteriors: Vec<PathBuf>,
    /// Alphabet file, one symbol per line.
    #[arg(long)]
    alphabet: PathBuf,
    /// Beam width; 0 selects greedy decoding.
    #[arg(long, default_value_t = 0)]
    beam: usize,
}

#[derive(Debug, Args)]
struct EvalWerArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    /// Minimum IoU for a ground-truth/prediction pair to match.
    #[arg(long, default_value_t = crate::evaluation::DEFAULT_MATCH_IOU)]
    iou: f64,
    /// Ground-truth and predicted words shorter than this are ignored.
    #[arg(long, default_value_t = crate::evaluation::DEFAULT_MIN_HEIGHT_PX)]
    min_height: f64,
    #[arg(long)]
    strip_punct: bool,
    #[arg(long)]
    ignore_case: bool,
    #[arg(long)]
    per_image: bool,
    #[arg(long, value_enum, default_value_t = MatchArg::Greedy)]
    matching: MatchArg,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MatchArg {
    Greedy,
    Optimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct EvalRoiArgs {
    /// Ground-truth words files (each a single image or an array of images).
    #[arg(long, required = true, num_args = 1..)]
    gt: Vec<PathBuf>,
    /// Crops JSON with one rectangle per image.
    #[arg(long)]
    crops: Option<PathBuf>,
    #[arg(long, default_value_t = crate::roi::DEFAULT_MIN_AREA_FRAC)]
    min_area_frac: f64,
    /// Baseline crop, e.g. `center:1500x2000`.
    #[arg(long)]
    baseline: Option<String>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Scenario JSON, or the name of a shipped preset (`table6_cpu`, `table6_ha`).
    #[arg(long)]
    scenario: String,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Override the number of detected words.
    #[arg(long)]
    words: Option<u64>,
    /// Write the per-stage trace to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Cpu,
    Ha,
}

#[derive(Debug, Args)]
struct PromptArgs {
    #[arg(long, value_enum)]
    variant: VariantArg,
    /// Paragraphs JSON; required by the `str` and `str-pos` variants.
    #[arg(long)]
    paragraphs: Option<PathBuf>,
    #[arg(long)]
    query: String,
    /// Image size as `WxH`; defaults to the size recorded in the paragraphs file.
    #[arg(long)]
    image_size: Option<String>,
    /// Pointing gesture JSON.
    #[arg(long)]
    gesture: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Plain,
    Str,
    StrPos,
}

/// Runs the command line and returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("STRKIT_LOG", "warn")).try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let mut stdout = std::io::stdout().lock();
    match run(cli, &mut stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("strkit: {e}");
            exit_code(&e)
        }
    }
}

/// Exit code for a failed command.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Format(_) | Error::InvalidArgument(_) => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    }
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Group(a) => group(a, out),
        Command::Decode(a) => decode(a, out),
        Command::EvalWer(a) => eval_wer(a, out),
        Command::EvalRoi(a) => eval_roi(a, out),
        Command::Simulate(a) => run_simulation(a, out),
        Command::Prompt(a) => prompt(a, out),
    }
}

fn read_input(path: &Path) -> Result<Vec<u8>> {
    let io_err = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    if path == Path::new("-") {
        let mut buf = Vec::new();
        std::io::stdin().read_to_end(&mut buf).map_err(io_err)?;
        return Ok(buf);
    }
    debug!("reading {}", path.display());
    std::fs::read(path).map_err(io_err)
}

fn write_output(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    let (res, name) = match path {
        Some(p) => (std::fs::write(p, text), p.display().to_string()),
        None => (out.write_all(text.as_bytes()), "<stdout>".to_string()),
    };
    res.map_err(|source| Error::Io { path: name, source })
}

fn group(a: GroupArgs, out: &mut dyn Write) -> Result<()> {
    let file = io::parse_words(&read_input(&a.words)?)?;
    let params = GroupingParams {
        r_v: a.rv,
        r_h: a.rh,
        iou_threshold: a.iou_threshold,
        iou_mode: match a.iou_mode {
            IouModeArg::Rotated => IouMode::Rotated,
            IouModeArg::Axis => IouMode::AxisAligned,
        },
        line_tolerance: a.line_tolerance,
    };
    let paragraphs = reconstruct(&file.words, &params)?;
    info!("{} words grouped into {} paragraphs", file.words.len(), paragraphs.len());
    let doc = ParagraphsFile {
        image: file.image,
        paragraphs,
    };
    write_output(a.output.as_deref(), &io::serialize_paragraphs(&doc), out)
}

fn decode(a: DecodeArgs, out: &mut dyn Write) -> Result<()> {
    let text = String::from_utf8(read_input(&a.alphabet)?)
        .map_err(|_| crate::error::FormatError::malformed("", "alphabet is not UTF-8"))?;
    let alphabet = Alphabet::parse(&text)?;
    let mut results = Vec::new();
    for path in &a.posteriors {
        let p = parse_posterior(&read_input(path)?)?;
        if p.columns() != alphabet.len() + 1 {
            return Err(crate::error::FormatError::invariant(
                "",
                format!(
                    "{}: posterior has {} columns, alphabet needs {}",
                    path.display(),
                    p.columns(),
                    alphabet.len() + 1
                ),
            )
            .into());
        }
        let d = if a.beam == 0 {
            ctc_greedy_decode(&p, &alphabet)?
        } else {
            ctc_beam_decode(&p, &alphabet, a.beam)?
        };
        results.push(Json::obj([
            ("file", Json::str(path.display().to_string())),
            ("text", Json::str(d.text)),
            ("score", Json::Num(d.score)),
        ]));
    }
    let doc = if results.len() == 1 {
        results.pop().unwrap()
    } else {
        Json::Arr(results)
    };
    write_output(None, &doc.render(), out)
}

fn breakdown_json(b: &WerBreakdown) -> Vec<(String, Json)> {
    let c = b.counts;
    vec![
        ("n_gt".into(), Json::Int(c.n_gt as i64)),
        ("n_pred".into(), Json::Int(c.n_pred as i64)),
        ("correct".into(), Json::Int(c.correct as i64)),
        ("deletions".into(), Json::Int(c.deletions as i64)),
        ("insertions".into(), Json::Int(c.insertions as i64)),
        ("substitutions".into(), Json::Int(c.substitutions as i64)),
        ("wer".into(), Json::Num(b.wer)),
        ("del_rate".into(), Json::Num(b.del_rate)),
        ("ins_rate".into(), Json::Num(b.ins_rate)),
        ("sub_rate".into(), Json::Num(b.sub_rate)),
    ]
}

fn pair_images(gt: Vec<WordsFile>, pred: Vec<WordsFile>) -> Result<Vec<ImagePair>> {
    for p in &pred {
        if !gt.iter().any(|g| g.image.id == p.image.id) {
            return Err(Error::invalid(format!("prediction for unknown image {:?}", p.image.id)));
        }
    }
    Ok(gt
        .into_iter()
        .map(|g| {
            let pred = pred
                .iter()
                .find(|p| p.image.id == g.image.id)
                .map(|p| p.words.clone())
                .unwrap_or_default();
            ImagePair {
                id: g.image.id,
                gt: g.words,
                pred,
            }
        })
        .collect())
}

fn eval_wer(a: EvalWerArgs, out: &mut dyn Write) -> Result<()> {
    let gt = io::parse_words_corpus(&read_input(&a.gt)?)?;
    let pred = io::parse_words_corpus(&read_input(&a.pred)?)?;
    let images = pair_images(gt, pred)?;
    let policy = NormalizationPolicy {
        strip_punctuation: a.strip_punct,
        min_height_px: a.min_height,
        case_insensitive: a.ignore_case,
    };
    let mode = match a.matching {
        MatchArg::Greedy => MatchMode::Greedy,
        MatchArg::Optimal => MatchMode::Optimal,
    };
    let report = evaluate_corpus(&images, &policy, a.iou, mode)?;
    // Images without ground truth have no rate of their own.
    let per_image: Vec<(String, Option<WerBreakdown>)> = report
        .per_image
        .iter()
        .map(|(id, c)| (id.clone(), WerBreakdown::from_counts(*c).ok()))
        .collect();

    let mut text = String::new();
    match a.format {
        Format::Json => {
            let mut fields = vec![("total".to_string(), Json::Obj(breakdown_json(&report.total)))];
            if a.per_image {
                let rows = report
                    .per_image
                    .iter()
                    .zip(&per_image)
                    .map(|((id, c), (_, b))| {
                        let mut f = vec![("image_id".to_string(), Json::str(id))];
                        match b {
                            Some(b) => f.extend(breakdown_json(b)),
                            None => f.extend([
                                ("n_gt".to_string(), Json::Int(0)),
                                ("n_pred".to_string(), Json::Int(c.n_pred as i64)),
                                ("wer".to_string(), Json::Null),
                            ]),
                        }
                        Json::Obj(f)
                    })
                    .collect();
                fields.push(("per_image".into(), Json::Arr(rows)));
            }
            text = Json::Obj(fields).render();
        }
        Format::Csv => {
            text.push_str("image_id,n_gt,n_pred,correct,deletions,insertions,substitutions,wer,del_rate,ins_rate,sub_rate\n");
            let mut row = |id: &str, c: &crate::evaluation::ErrorCounts, b: Option<&WerBreakdown>| {
                let rates = b
                    .map(|b| [b.wer, b.del_rate, b.ins_rate, b.sub_rate].map(io::format_float).join(","))
                    .unwrap_or_else(|| ",,,".to_string());
                let _ = writeln!(
                    text,
                    "{},{},{},{},{},{},{},{}",
                    csv_field(id),
                    c.n_gt,
                    c.n_pred,
                    c.correct,
                    c.deletions,
                    c.insertions,
                    c.substitutions,
                    rates
                );
            };
            if a.per_image {
                for ((id, c), (_, b)) in report.per_image.iter().zip(&per_image) {
                    row(id, c, b.as_ref());
                }
            }
            row("TOTAL", &report.total.counts, Some(&report.total));
        }
        Format::Table => {
            let _ = writeln!(
                text,
                "{:<24} {:>6} {:>6} {:>8} {:>8} {:>8} {:>8}",
                "image", "n_gt", "n_pred", "WER", "Del", "Ins", "Sub"
            );
            let mut row = |id: &str, c: &crate::evaluation::ErrorCounts, b: Option<&WerBreakdown>| {
                let p = |v: f64| format!("{:.1}%", v * 100.0);
                let (w, d, i, s) = match b {
                    Some(b) => (p(b.wer), p(b.del_rate), p(b.ins_rate), p(b.sub_rate)),
                    None => ("-".into(), "-".into(), "-".into(), "-".into()),
                };
                let _ = writeln!(
                    text,
                    "{:<24} {:>6} {:>6} {:>8} {:>8} {:>8} {:>8}",
                    id, c.n_gt, c.n_pred, w, d, i, s
                );
            };
            if a.per_image {
                for ((id, c), (_, b)) in report.per_image.iter().zip(&per_image) {
                    row(id, c, b.as_ref());
                }
            }
            row("TOTAL", &report.total.counts, Some(&report.total));
        }
    }
    write_output(None, &text, out)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Parses `center:WxH`.
fn parse_baseline(spec: &str) -> Result<(f64, f64)> {
    let size = spec
        .strip_prefix("center:")
        .ok_or_else(|| Error::invalid(format!("baseline {spec:?} must look like center:WxH")))?;
    let (w, h) = parse_size(size)?;
    Ok((w as f64, h as f64))
}

fn parse_size(s: &str) -> Result<(u32, u32)> {
    let bad = || Error::invalid(format!("size {s:?} must look like WxH with positive integers"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let w: u32 = w.trim().parse().map_err(|_| bad())?;
    let h: u32 = h.trim().parse().map_err(|_| bad())?;
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok((w, h))
}

struct RoiSummary {
    rows: Vec<Json>,
    hits: f64,
    words: f64,
    recall_sum: f64,
    area_sum: f64,
}

fn roi_pass(images: &[WordsFile], crop_for: impl Fn(&WordsFile) -> Result<RoiCrop>, min_area_frac: f64) -> Result<RoiSummary> {
    let mut s = RoiSummary {
        rows: Vec::new(),
        hits: 0.0,
        words: 0.0,
        recall_sum: 0.0,
        area_sum: 0.0,
    };
    for im in images {
        let crop = crop_for(im)?;
        let words = im.words_of_interest();
        let recall = roi_recall(&words, &crop, min_area_frac)?;
        s.hits += recall * words.len() as f64;
        s.words += words.len() as f64;
        s.recall_sum += recall;
        s.area_sum += crop.area_fraction();
        s.rows.push(Json::obj([
            ("image_id", Json::str(&im.image.id)),
            ("recall", Json::Num(recall)),
            ("area_fraction", Json::Num(crop.area_fraction())),
        ]));
    }
    Ok(s)
}

fn roi_report(s: RoiSummary, n: usize) -> Json {
    let n = n as f64;
    Json::obj([
        ("per_image", Json::Arr(s.rows)),
        ("mean_recall", Json::Num(s.recall_sum / n)),
        ("word_recall", Json::Num(s.hits / s.words)),
        ("mean_area_fraction", Json::Num(s.area_sum / n)),
        ("area_reduction", Json::Num(1.0 - s.area_sum / n)),
    ])
}

fn eval_roi(a: EvalRoiArgs, out: &mut dyn Write) -> Result<()> {
    let mut images = Vec::new();
    for path in &a.gt {
        images.extend(io::parse_words_corpus(&read_input(path)?)?);
    }
    if images.is_empty() {
        return Err(Error::invalid("no ground-truth images"));
    }
    if a.crops.is_none() && a.baseline.is_none() {
        return Err(Error::invalid("give --crops, --baseline or both"));
    }
    let mut fields = vec![("min_area_frac".to_string(), Json::Num(a.min_area_frac))];
    if let Some(path) = &a.crops {
        let crops = io::parse_crops(&read_input(path)?)?;
        let s = roi_pass(
            &images,
            |im| {
                let rect: &AxisRect = crops
                    .get(&im.image.id)
                    .ok_or_else(|| Error::invalid(format!("no crop for image {:?}", im.image.id)))?;
                Ok(RoiCrop::new(*rect, im.image.size()))
            },
            a.min_area_frac,
        )?;
        fields.push(("crops".into(), roi_report(s, images.len())));
    }
    if let Some(spec) = &a.baseline {
        let size = parse_baseline(spec)?;
        let s = roi_pass(&images, |im| Ok(center_crop(im.image.size(), size)), a.min_area_frac)?;
        fields.push(("baseline".into(), roi_report(s, images.len())));
    }
    write_output(None, &Json::Obj(fields).render(), out)
}

fn run_simulation(a: SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let mut scenario = match a.scenario.as_str() {
        "table6_cpu" => io::presets::cpu(),
        "table6_ha" => io::presets::ha(),
        path => io::parse_scenario(&read_input(Path::new(path))?)?,
    };
    if let Some(m) = a.mode {
        scenario.mode = match m {
            ModeArg::Cpu => SimMode::Cpu,
            ModeArg::Ha => SimMode::HardwareAccelerated,
        };
    }
    if let Some(w) = a.words {
        scenario.word_count = w;
    }
    let result = simulate(&scenario)?;
    let mut fields = vec![
        ("scenario".to_string(), Json::str(&scenario.name)),
        ("mode".to_string(), Json::str(scenario.mode.as_str())),
        ("word_count".to_string(), Json::Int(scenario.word_count as i64)),
        ("e2e_ms".to_string(), Json::Num(result.e2e_ms)),
        ("energy_mwh".to_string(), Json::Num(result.energy_mwh)),
        (
            "critical_path".to_string(),
            Json::Arr(result.critical_path.iter().map(Json::str).collect()),
        ),
    ];
    if scenario.stages.iter().any(|s| s.branch.as_deref() == Some(STR_BRANCH)) {
        fields.push(("str_latency_ms".into(), Json::Num(branch_latency(&scenario, STR_BRANCH)?)));
        if let Ok(h) = str_latency_hidden(&scenario) {
            fields.push(("str_hidden".into(), Json::Bool(h.hidden)));
            fields.push(("str_slack_ms".into(), Json::Num(h.slack_ms)));
        }
    }
    if let Some(path) = &a.trace {
        write_output(Some(path), &io::trace_to_json(&scenario, &result).render(), out)?;
    }
    write_output(None, &Json::Obj(fields).render(), out)
}

fn prompt(a: PromptArgs, out: &mut dyn Write) -> Result<()> {
    let file = a
        .paragraphs
        .as_deref()
        .map(|p| read_input(p).and_then(|b| Ok(io::parse_paragraphs(&b)?)))
        .transpose()?;
    let paragraphs = file.as_ref().map(|f| f.paragraphs.as_slice()).unwrap_or_default();
    let variant = match a.variant {
        VariantArg::Plain => PromptVariant::plain(),
        VariantArg::Str | VariantArg::StrPos if file.is_none() => {
            return Err(Error::invalid("this variant needs --paragraphs"));
        }
        VariantArg::Str => PromptVariant::with_str(),
        VariantArg::StrPos => {
            let (w, h) = match (&a.image_size, &file) {
                (Some(s), _) => parse_size(s)?,
                (None, Some(f)) => (f.image.width, f.image.height),
                (None, None) => unreachable!(),
            };
            PromptVariant::with_positions(w, h)
        }
    };
    let mention = match &a.gesture {
        None => None,
        Some(path) => {
            let g = io::parse_gesture(&read_input(path)?)?;
            let words: Vec<_> = paragraphs.iter().flat_map(|p| p.words.iter().cloned()).collect();
            let targets = pointed_targets(&g, &words, paragraphs, DEFAULT_CONE_DEG, DEFAULT_K_WORDS, DEFAULT_K_PARAGRAPHS);
            Some(GestureMention::resolve(&targets, &words, paragraphs))
        }
    };
    let payload = build_prompt(&variant, paragraphs, &a.query, mention.as_ref())?;
    write_output(None, &format!("{}\n", payload.text), out)
}
