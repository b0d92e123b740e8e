//! Word error rate with box matching, benchmark normalization and breakdown
//! reports.
//!
//! A prediction is paired with a ground-truth word when their boxes overlap
//! with IoU at or above a threshold. Unpaired ground truth counts as a
//! deletion, an unpaired prediction as an insertion, and a pair with different
//! text as a substitution. WER is `(D + I + S) / N` and can exceed 1.

use std::fmt::Write as _;
use std::sync::OnceLock;

use regex::Regex;

use crate::error::{Error, Result};
use crate::geometry::iou;
use crate::reading_order::Word;

pub const DEFAULT_MATCH_IOU: f64 = 0.5;
pub const DEFAULT_MIN_HEIGHT_PX: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationPolicy {
    /// Remove every character in the Unicode punctuation categories (P*).
    pub strip_punctuation: bool,
    /// Words whose box height is below this are dropped.
    pub min_height_px: f64,
    pub case_insensitive: bool,
}

impl Default for NormalizationPolicy {
    fn default() -> Self {
        NormalizationPolicy {
            strip_punctuation: true,
            min_height_px: DEFAULT_MIN_HEIGHT_PX,
            case_insensitive: false,
        }
    }
}

impl NormalizationPolicy {
    /// Keeps everything as is.
    pub fn none() -> Self {
        NormalizationPolicy {
            strip_punctuation: false,
            min_height_px: 0.0,
            case_insensitive: false,
        }
    }
}

fn punctuation() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\p{P}+").expect("valid regex"))
}

/// Applies the benchmark normalization rules, preserving word order.
pub fn normalize(words: &[Word], policy: &NormalizationPolicy) -> Vec<Word> {
    words
        .iter()
        .filter(|w| w.rbox.h >= policy.min_height_px)
        .filter_map(|w| {
            let mut text = if policy.strip_punctuation {
                punctuation().replace_all(&w.text, "").trim().to_string()
            } else {
                w.text.clone()
            };
            if policy.case_insensitive {
                text = text.to_lowercase();
            }
            (!text.is_empty()).then(|| Word { text, ..w.clone() })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatchKind {
    Correct,
    Substitution,
    Deletion,
    Insertion,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub gt_index: Option<usize>,
    pub pred_index: Option<usize>,
    pub iou: f64,
    pub kind: MatchKind,
}

/// How ground truth and predictions are paired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatchMode {
    /// Highest-IoU pairs first (ties: lower gt index, then lower pred index).
    #[default]
    Greedy,
    /// Maximum number of pairs, then maximum total IoU.
    Optimal,
}

fn eligible_pairs(gt: &[Word], pred: &[Word], threshold: f64) -> Vec<Vec<Option<f64>>> {
    gt.iter()
        .map(|g| {
            pred.iter()
                .map(|p| {
                    let v = iou(&g.rbox, &p.rbox);
                    (v >= threshold).then_some(v)
                })
                .collect()
        })
        .collect()
}

fn greedy_pairs(scores: &[Vec<Option<f64>>]) -> Vec<(usize, usize, f64)> {
    let mut candidates: Vec<(usize, usize, f64)> = scores
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().filter_map(move |(j, s)| s.map(|v| (i, j, v))))
        .collect();
    candidates.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let n_pred = scores.first().map_or(0, Vec::len);
    let mut gt_used = vec![false; scores.len()];
    let mut pred_used = vec![false; n_pred];
    let mut pairs = Vec::new();
    for (i, j, v) in candidates {
        if !gt_used[i] && !pred_used[j] {
            gt_used[i] = true;
            pred_used[j] = true;
            pairs.push((i, j, v));
        }
    }
    pairs
}

/// Minimum-cost assignment of every row to a distinct column (`rows ≤ cols`).
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let m = cost.first().map_or(0, Vec::len);
    debug_assert!(n <= m);
    // 1-based potentials; column 0 is a sentinel.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=m {
        if owner[j] != 0 {
            assignment[owner[j] - 1] = j - 1;
        }
    }
    assignment
}

fn optimal_pairs(scores: &[Vec<Option<f64>>]) -> Vec<(usize, usize, f64)> {
    let n = scores.len();
    let m = scores.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        return Vec::new();
    }
    // Pair count dominates: any extra pair outweighs all IoU sums.
    let bonus = n.min(m) as f64 + 1.0;
    let weight = |i: usize, j: usize| scores[i][j].map_or(0.0, |v| bonus + v);
    let transpose = n > m;
    let cost: Vec<Vec<f64>> = if transpose {
        (0..m).map(|j| (0..n).map(|i| -weight(i, j)).collect()).collect()
    } else {
        (0..n).map(|i| (0..m).map(|j| -weight(i, j)).collect()).collect()
    };
    let mut pairs: Vec<(usize, usize, f64)> = hungarian(&cost)
        .into_iter()
        .enumerate()
        .map(|(r, c)| if transpose { (c, r) } else { (r, c) })
        .filter_map(|(i, j)| scores[i][j].map(|v| (i, j, v)))
        .collect();
    pairs.sort_by_key(|p| p.0);
    pairs
}

fn assemble(gt: &[Word], pred: &[Word], pairs: Vec<(usize, usize, f64)>) -> Vec<Match> {
    let mut by_gt: Vec<Option<(usize, f64)>> = vec![None; gt.len()];
    let mut pred_used = vec![false; pred.len()];
    for (i, j, v) in pairs {
        by_gt[i] = Some((j, v));
        pred_used[j] = true;
    }
    let mut out = Vec::with_capacity(gt.len() + pred.len());
    for (i, slot) in by_gt.into_iter().enumerate() {
        out.push(match slot {
            Some((j, v)) => Match {
                gt_index: Some(i),
                pred_index: Some(j),
                iou: v,
                kind: if gt[i].text == pred[j].text {
                    MatchKind::Correct
                } else {
                    MatchKind::Substitution
                },
            },
            None => Match {
                gt_index: Some(i),
                pred_index: None,
                iou: 0.0,
                kind: MatchKind::Deletion,
            },
        });
    }
    for (j, used) in pred_used.into_iter().enumerate() {
        if !used {
            out.push(Match {
                gt_index: None,
                pred_index: Some(j),
                iou: 0.0,
                kind: MatchKind::Insertion,
            });
        }
    }
    out
}

/// One-to-one matching by greedy descending IoU.
pub fn match_words(gt: &[Word], pred: &[Word], iou_threshold: f64) -> Vec<Match> {
    match_words_with(gt, pred, iou_threshold, MatchMode::Greedy)
}

/// Matching in ground-truth order, followed by the insertions in prediction
/// order.
pub fn match_words_with(gt: &[Word], pred: &[Word], iou_threshold: f64, mode: MatchMode) -> Vec<Match> {
    let scores = eligible_pairs(gt, pred, iou_threshold);
    let pairs = match mode {
        MatchMode::Greedy => greedy_pairs(&scores),
        MatchMode::Optimal => optimal_pairs(&scores),
    };
    assemble(gt, pred, pairs)
}

/// Raw outcome counts; sums across images are the micro-average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ErrorCounts {
    pub n_gt: u64,
    pub n_pred: u64,
    pub correct: u64,
    pub deletions: u64,
    pub insertions: u64,
    pub substitutions: u64,
}

impl ErrorCounts {
    pub fn from_matches(matches: &[Match]) -> Self {
        let mut c = ErrorCounts::default();
        for m in matches {
            match m.kind {
                MatchKind::Correct => c.correct += 1,
                MatchKind::Substitution => c.substitutions += 1,
                MatchKind::Deletion => c.deletions += 1,
                MatchKind::Insertion => c.insertions += 1,
            }
        }
        c.n_gt = c.correct + c.substitutions + c.deletions;
        c.n_pred = c.correct + c.substitutions + c.insertions;
        c
    }

    pub fn errors(&self) -> u64 {
        self.deletions + self.insertions + self.substitutions
    }
}

impl std::ops::Add for ErrorCounts {
    type Output = ErrorCounts;
    fn add(self, o: ErrorCounts) -> ErrorCounts {
        ErrorCounts {
            n_gt: self.n_gt + o.n_gt,
            n_pred: self.n_pred + o.n_pred,
            correct: self.correct + o.correct,
            deletions: self.deletions + o.deletions,
            insertions: self.insertions + o.insertions,
            substitutions: self.substitutions + o.substitutions,
        }
    }
}

impl std::iter::Sum for ErrorCounts {
    fn sum<I: Iterator<Item = ErrorCounts>>(iter: I) -> Self {
        iter.fold(ErrorCounts::default(), |a, b| a + b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WerBreakdown {
    pub counts: ErrorCounts,
    pub wer: f64,
    pub del_rate: f64,
    pub ins_rate: f64,
    pub sub_rate: f64,
}

impl WerBreakdown {
    pub fn from_counts(counts: ErrorCounts) -> Result<Self> {
        if counts.n_gt == 0 {
            return Err(Error::Undefined("undefined WER: no ground-truth words"));
        }
        let n = counts.n_gt as f64;
        Ok(WerBreakdown {
            counts,
            wer: counts.errors() as f64 / n,
            del_rate: counts.deletions as f64 / n,
            ins_rate: counts.insertions as f64 / n,
            sub_rate: counts.substitutions as f64 / n,
        })
    }

    pub fn n_gt(&self) -> u64 {
        self.counts.n_gt
    }
}

/// Counts for one image after normalizing both sides.
pub fn image_counts(
    gt: &[Word],
    pred: &[Word],
    policy: &NormalizationPolicy,
    iou_threshold: f64,
    mode: MatchMode,
) -> ErrorCounts {
    let gt = normalize(gt, policy);
    let pred = normalize(pred, policy);
    ErrorCounts::from_matches(&match_words_with(&gt, &pred, iou_threshold, mode))
}

/// Normalizes both sides, matches greedily and counts.
pub fn wer(gt: &[Word], pred: &[Word], policy: &NormalizationPolicy, iou_threshold: f64) -> Result<WerBreakdown> {
    WerBreakdown::from_counts(image_counts(gt, pred, policy, iou_threshold, MatchMode::Greedy))
}

/// Ground truth and predictions for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePair {
    pub id: String,
    pub gt: Vec<Word>,
    pub pred: Vec<Word>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusReport {
    pub per_image: Vec<(String, ErrorCounts)>,
    pub total: WerBreakdown,
}

/// Micro-averaged WER over a corpus: counts are summed before dividing.
pub fn evaluate_corpus(
    images: &[ImagePair],
    policy: &NormalizationPolicy,
    iou_threshold: f64,
    mode: MatchMode,
) -> Result<CorpusReport> {
    let per_image: Vec<(String, ErrorCounts)> = images
        .iter()
        .map(|im| (im.id.clone(), image_counts(&im.gt, &im.pred, policy, iou_threshold, mode)))
        .collect();
    let total = WerBreakdown::from_counts(per_image.iter().map(|(_, c)| *c).sum())?;
    Ok(CorpusReport { per_image, total })
}

/// One line of an ablation table.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub component: String,
    pub breakdown: WerBreakdown,
    /// WER change relative to the preceding row; `None` for the baseline.
    pub delta: Option<f64>,
    /// WER change relative to the first row; `None` for the baseline.
    pub delta_from_baseline: Option<f64>,
}

/// Builds a component-by-component ablation table. Each row's `delta` is its
/// WER minus the previous row's, so the deltas telescope to the cumulative
/// change.
pub fn ablation_report(runs: &[(String, WerBreakdown)]) -> Result<Vec<AblationRow>> {
    let (_, baseline) = runs
        .first()
        .ok_or_else(|| Error::invalid("ablation report needs at least one run"))?;
    Ok(runs
        .iter()
        .enumerate()
        .map(|(i, (name, b))| AblationRow {
            component: name.clone(),
            breakdown: *b,
            delta: (i > 0).then(|| b.wer - runs[i - 1].1.wer),
            delta_from_baseline: (i > 0).then(|| b.wer - baseline.wer),
        })
        .collect())
}

fn pct(v: f64) -> String {
    format!("{:.1}%", v * 100.0)
}

fn signed_pct(v: f64) -> String {
    let s = format!("{:+.1}%", v * 100.0);
    if s == "-0.0%" {
        "+0.0%".to_string()
    } else {
        s
    }
}

/// Plain-text rendering with columns `Component | WER | Comp. to baseline`.
pub fn render_ablation_table(rows: &[AblationRow]) -> String {
    let width = rows
        .iter()
        .map(|r| r.component.chars().count())
        .max()
        .unwrap_or(0)
        .max("Component".len());
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>7}  {}", "Component", "WER", "Comp. to baseline");
    for r in rows {
        let delta = r.delta.map(signed_pct).unwrap_or_default();
        let _ = writeln!(out, "{:<width$}  {:>7}  {}", r.component, pct(r.breakdown.wer), delta);
    }
    out
}

/// Consistency check of a published `WER = Del + Ins + Sub` row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedAudit {
    /// Sum of the three component rates, in the row's units.
    pub component_sum: f64,
    pub consistent: bool,
}

/// Audits a published breakdown given with `decimals` digits of precision.
///
/// The arithmetic is carried out on integers in units of `10^-decimals` so
/// that, for example, `46.0 + 1.1 + 5.9` equals `53.0` exactly.
pub fn audit_published_rates(wer: f64, del: f64, ins: f64, sub: f64, decimals: u32) -> PublishedAudit {
    let scale = 10f64.powi(decimals as i32);
    let units = |v: f64| (v * scale).round() as i64;
    let sum = units(del) + units(ins) + units(sub);
    PublishedAudit {
        component_sum: sum as f64 / scale,
        consistent: sum == units(wer),
    }
}
