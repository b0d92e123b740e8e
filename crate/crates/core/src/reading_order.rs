//! Grouping of recognized words into paragraphs, in reading order.
//!
//! The pipeline is: expand every word box, connect pairs whose expanded boxes
//! overlap by at least the IoU threshold, take connected components as
//! paragraphs, raster-scan the words of each paragraph, and enclose each
//! paragraph in its minimum-area rectangle.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::geometry::{aabb, expand, iou, min_area_rect, AxisRect, Point, RotatedBox};

/// A recognized word and its oriented box.
#[derive(Debug, Clone, PartialEq)]
pub struct Word {
    pub text: String,
    pub rbox: RotatedBox,
    pub confidence: f64,
}

impl Word {
    /// Builds a word with full confidence; surrounding whitespace is trimmed.
    pub fn new(text: impl AsRef<str>, rbox: RotatedBox) -> Self {
        Word {
            text: text.as_ref().trim().to_string(),
            rbox,
            confidence: 1.0,
        }
    }

    pub fn with_confidence(mut self, confidence: f64) -> Self {
        self.confidence = confidence;
        self
    }
}

/// How the overlap of two expanded word boxes is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IouMode {
    /// Exact IoU of the oriented boxes.
    #[default]
    Rotated,
    /// IoU of the boxes' axis-aligned hulls.
    AxisAligned,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupingParams {
    /// Vertical expansion ratio (each side grows by `r_v × h`).
    pub r_v: f64,
    /// Horizontal expansion ratio (each side grows by `r_h × w`).
    pub r_h: f64,
    /// Minimum IoU of two expanded boxes for them to be connected.
    pub iou_threshold: f64,
    pub iou_mode: IouMode,
    /// Raster-scan line tolerance as a fraction of the median box height.
    pub line_tolerance: f64,
}

impl Default for GroupingParams {
    fn default() -> Self {
        GroupingParams {
            r_v: 0.5,
            r_h: 1.0,
            iou_threshold: 0.01,
            iou_mode: IouMode::Rotated,
            line_tolerance: 0.5,
        }
    }
}

impl GroupingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_v >= 0.0 && self.r_v.is_finite()) || !(self.r_h >= 0.0 && self.r_h.is_finite())
        {
            return Err(Error::invalid("expansion ratios must be finite and >= 0"));
        }
        if !(0.0..=1.0).contains(&self.iou_threshold) {
            return Err(Error::invalid("IoU threshold must lie in [0, 1]"));
        }
        if !(self.line_tolerance >= 0.0 && self.line_tolerance.is_finite()) {
            return Err(Error::invalid("line tolerance must be finite and >= 0"));
        }
        Ok(())
    }

    fn overlap(&self, a: &RotatedBox, b: &RotatedBox) -> f64 {
        match self.iou_mode {
            IouMode::Rotated => iou(a, b),
            IouMode::AxisAligned => aabb(a).iou(&aabb(b)),
        }
    }
}

/// A group of words in reading order with its enclosing rectangles.
#[derive(Debug, Clone, PartialEq)]
pub struct Paragraph {
    pub words: Vec<Word>,
    /// Axis-aligned hull of `rbox`.
    pub rect: AxisRect,
    /// Minimum-area rectangle around all word-box corners.
    pub rbox: RotatedBox,
}

impl Paragraph {
    /// Builds a paragraph from words already in reading order.
    pub fn from_words(words: Vec<Word>) -> Result<Self> {
        let corners: Vec<Point> = words.iter().flat_map(|w| w.rbox.corners()).collect();
        let rbox = min_area_rect(&corners)?;
        Ok(Paragraph {
            rect: aabb(&rbox),
            rbox,
            words,
        })
    }

    /// Words joined by single spaces.
    pub fn text(&self) -> String {
        let parts: Vec<&str> = self.words.iter().map(|w| w.text.as_str()).collect();
        parts.join(" ")
    }
}

/// Disjoint-set forest with path compression and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small] = big;
        self.size[big] += self.size[small];
    }

    /// Sets sorted by their smallest member, members ascending.
    pub fn into_sets(mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut slot = vec![usize::MAX; n];
        let mut sets: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            let r = self.find(i);
            if slot[r] == usize::MAX {
                slot[r] = sets.len();
                sets.push(Vec::new());
            }
            sets[slot[r]].push(i);
        }
        sets
    }
}

fn expanded_boxes(words: &[Word], params: &GroupingParams) -> Vec<RotatedBox> {
    words
        .iter()
        .map(|w| expand(&w.rbox, params.r_v, params.r_h))
        .collect()
}

/// Dense adjacency matrix of the expanded-box overlap graph.
///
/// Entry `(i, j)` is set iff the expanded boxes of words `i` and `j` have
/// IoU ≥ threshold; the diagonal is always set.
pub fn adjacency(words: &[Word], params: &GroupingParams) -> Vec<Vec<bool>> {
    let boxes = expanded_boxes(words, params);
    let n = boxes.len();
    let mut adj = vec![vec![false; n]; n];
    for i in 0..n {
        adj[i][i] = true;
        for j in (i + 1)..n {
            let linked = params.overlap(&boxes[i], &boxes[j]) >= params.iou_threshold;
            adj[i][j] = linked;
            adj[j][i] = linked;
        }
    }
    adj
}

/// Connected components of a symmetric boolean adjacency matrix.
pub fn connected_components(adj: &[Vec<bool>]) -> Result<Vec<Vec<usize>>> {
    let n = adj.len();
    if let Some(row) = adj.iter().position(|r| r.len() != n) {
        return Err(Error::invalid(format!(
            "adjacency matrix is not square (row {row} has {} entries, expected {n})",
            adj[row].len()
        )));
    }
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if adj[i][j] != adj[j][i] {
                return Err(Error::invalid(format!(
                    "adjacency matrix is not symmetric at ({i}, {j})"
                )));
            }
            if adj[i][j] {
                uf.union(i, j);
            }
        }
    }
    Ok(uf.into_sets())
}

/// Components of the overlap graph without materializing the matrix.
///
/// Candidate pairs come from a sweep over the expanded boxes' axis-aligned
/// hulls sorted by top edge; only pairs whose hulls touch get an exact IoU.
/// Pairs with disjoint hulls have IoU 0, so the result equals
/// `connected_components(&adjacency(..))` whenever the threshold is positive.
pub fn components(words: &[Word], params: &GroupingParams) -> Vec<Vec<usize>> {
    let n = words.len();
    let mut uf = UnionFind::new(n);
    if params.iou_threshold <= 0.0 {
        // Every pair satisfies IoU >= 0.
        for i in 1..n {
            uf.union(0, i);
        }
        return uf.into_sets();
    }

    let boxes = expanded_boxes(words, params);
    let hulls: Vec<AxisRect> = boxes.iter().map(aabb).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| hulls[a].top.total_cmp(&hulls[b].top).then(a.cmp(&b)));

    for (pos, &i) in order.iter().enumerate() {
        let bottom = hulls[i].bottom();
        for &j in &order[pos + 1..] {
            if hulls[j].top > bottom {
                break;
            }
            if hulls[i].left > hulls[j].right() || hulls[j].left > hulls[i].right() {
                continue;
            }
            if params.overlap(&boxes[i], &boxes[j]) >= params.iou_threshold {
                uf.union(i, j);
            }
        }
    }
    uf.into_sets()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Raster-scan order of the given word indices.
///
/// Words are chained into lines while consecutive center-y values (in
/// ascending order) differ by at most `line_tolerance × median height`;
/// the result is sorted by `(line, center x, index)`. With a tolerance of 0
/// this is a plain sort by center y, then center x.
pub fn raster_order(words: &[Word], indices: &[usize], line_tolerance: f64) -> Vec<usize> {
    if indices.len() <= 1 {
        return indices.to_vec();
    }
    let mut heights: Vec<f64> = indices.iter().map(|&i| words[i].rbox.h).collect();
    let gap = line_tolerance * median(&mut heights);

    let mut by_y = indices.to_vec();
    by_y.sort_by(|&a, &b| {
        words[a]
            .rbox
            .cy
            .total_cmp(&words[b].rbox.cy)
            .then(a.cmp(&b))
    });
    let mut keyed: Vec<(usize, f64, usize)> = Vec::with_capacity(by_y.len());
    let mut line = 0;
    let mut prev_y = words[by_y[0]].rbox.cy;
    for &i in &by_y {
        let y = words[i].rbox.cy;
        if y - prev_y > gap {
            line += 1;
        }
        prev_y = y;
        keyed.push((line, words[i].rbox.cx, i));
    }
    keyed.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then_with(|| a.1.total_cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    keyed.into_iter().map(|(_, _, i)| i).collect()
}

fn paragraph_order(a: &(AxisRect, usize), b: &(AxisRect, usize)) -> Ordering {
    a.0.top
        .total_cmp(&b.0.top)
        .then_with(|| a.0.left.total_cmp(&b.0.left))
        .then(a.1.cmp(&b.1))
}

/// Paragraphs as ordered lists of word indices, sorted by `(top, left)` of
/// their enclosing rectangle (ties: smallest member index).
pub fn group_indices(words: &[Word], params: &GroupingParams) -> Result<Vec<Vec<usize>>> {
    params.validate()?;
    let mut keyed = Vec::new();
    for comp in components(words, params) {
        let corners: Vec<Point> = comp.iter().flat_map(|&i| words[i].rbox.corners()).collect();
        let rect = aabb(&min_area_rect(&corners)?);
        let smallest = comp[0];
        keyed.push(((rect, smallest), raster_order(words, &comp, params.line_tolerance)));
    }
    keyed.sort_by(|a, b| paragraph_order(&a.0, &b.0));
    Ok(keyed.into_iter().map(|(_, order)| order).collect())
}

/// Full reading-order reconstruction.
pub fn reconstruct(words: &[Word], params: &GroupingParams) -> Result<Vec<Paragraph>> {
    group_indices(words, params)?
        .into_iter()
        .map(|idx| Paragraph::from_words(idx.into_iter().map(|i| words[i].clone()).collect()))
        .collect()
}
