//! Test-side oracles. Each one recomputes a quantity by a different, slower
//! method than the library and shares no code with it.

#![allow(dead_code)]

use std::collections::{BTreeMap, VecDeque};

use rand::rngs::StdRng;
use rand::Rng;
use strkit::geometry::RotatedBox;
use strkit::reading_order::{GroupingParams, IouMode, Word};

pub type P = (f64, f64);

pub fn corners(b: &RotatedBox) -> [P; 4] {
    let (s, c) = b.angle.sin_cos();
    let (hw, hh) = (b.w / 2.0, b.h / 2.0);
    [(-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)].map(|(u, v)| (b.cx + u * c - v * s, b.cy + u * s + v * c))
}

pub fn expanded_corners(b: &RotatedBox, r_v: f64, r_h: f64) -> [P; 4] {
    corners(&RotatedBox {
        w: b.w * (1.0 + 2.0 * r_h),
        h: b.h * (1.0 + 2.0 * r_v),
        ..*b
    })
}

fn shoelace(poly: &[P]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum::<f64>()
        / 2.0
}

fn inside_convex(p: P, poly: &[P]) -> bool {
    let n = poly.len();
    let orient = shoelace(poly).signum();
    (0..n).all(|i| {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        orient * ((b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)) >= -1e-12
    })
}

fn segment_hit(a: P, b: P, c: P, d: P) -> Option<P> {
    let r = (b.0 - a.0, b.1 - a.1);
    let s = (d.0 - c.0, d.1 - c.1);
    let den = r.0 * s.1 - r.1 * s.0;
    if den == 0.0 {
        return None;
    }
    let t = ((c.0 - a.0) * s.1 - (c.1 - a.1) * s.0) / den;
    let u = ((c.0 - a.0) * r.1 - (c.1 - a.1) * r.0) / den;
    ((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)).then(|| (a.0 + t * r.0, a.1 + t * r.1))
}

/// Intersection area of two convex quadrilaterals by vertex collection:
/// contained vertices plus edge crossings, sorted by angle about their mean.
pub fn quad_intersection_area(a: &[P; 4], b: &[P; 4]) -> f64 {
    let mut pts: Vec<P> = Vec::new();
    pts.extend(a.iter().filter(|&&p| inside_convex(p, b)));
    pts.extend(b.iter().filter(|&&p| inside_convex(p, a)));
    for i in 0..4 {
        for j in 0..4 {
            if let Some(p) = segment_hit(a[i], a[(i + 1) % 4], b[j], b[(j + 1) % 4]) {
                pts.push(p);
            }
        }
    }
    if pts.len() < 3 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let m = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    pts.sort_by(|p, q| (p.1 - m.1).atan2(p.0 - m.0).total_cmp(&(q.1 - m.1).atan2(q.0 - m.0)));
    shoelace(&pts).abs()
}

pub fn quad_iou(a: &[P; 4], b: &[P; 4]) -> f64 {
    let inter = quad_intersection_area(a, b);
    let union = shoelace(a).abs() + shoelace(b).abs() - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// x-interval where a horizontal line crosses a convex polygon.
fn row_span(poly: &[P], y: f64) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a.1 <= y && y <= b.1) || (b.1 <= y && y <= a.1) {
            let x = if a.1 == b.1 {
                lo = lo.min(a.0.min(b.0));
                a.0.max(b.0)
            } else {
                a.0 + (y - a.1) / (b.1 - a.1) * (b.0 - a.0)
            };
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    (lo <= hi).then_some((lo, hi))
}

/// IoU by scanline rasterization with rows every `step` units.
pub fn raster_iou(a: &RotatedBox, b: &RotatedBox, step: f64) -> f64 {
    let (pa, pb) = (corners(a), corners(b));
    let ys = pa.iter().chain(pb.iter()).map(|p| p.1);
    let y0 = ys.clone().fold(f64::INFINITY, f64::min);
    let y1 = ys.fold(f64::NEG_INFINITY, f64::max);
    let (mut inter, mut area_a, mut area_b) = (0.0, 0.0, 0.0);
    let mut y = y0 + step / 2.0;
    while y < y1 {
        let sa = row_span(&pa, y);
        let sb = row_span(&pb, y);
        if let Some((l, r)) = sa {
            area_a += r - l;
        }
        if let Some((l, r)) = sb {
            area_b += r - l;
        }
        if let (Some(sa), Some(sb)) = (sa, sb) {
            inter += (sa.1.min(sb.1) - sa.0.max(sb.0)).max(0.0);
        }
        y += step;
    }
    let union = area_a + area_b - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// Convex hull by gift wrapping, counter-clockwise without collinear points.
pub fn jarvis_hull(points: &[P]) -> Vec<P> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: P, a: P, b: P| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let d2 = |a: P, b: P| (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2);
    let start = pts[0];
    let mut hull = vec![start];
    let mut cur = start;
    loop {
        let mut next = if pts[0] == cur { pts[1] } else { pts[0] };
        for &p in &pts {
            if p == cur {
                continue;
            }
            let c = cross(cur, next, p);
            if c < 0.0 || (c == 0.0 && d2(cur, p) > d2(cur, next)) {
                next = p;
            }
        }
        if next == start {
            break;
        }
        hull.push(next);
        cur = next;
        if hull.len() > pts.len() {
            break;
        }
    }
    hull
}

/// Smallest bounding-box area over rotations, by dense sweep then local
/// ternary refinement of the best samples.
pub fn sweep_min_area(points: &[P], samples: usize) -> f64 {
    let area_at = |t: f64| {
        let (s, c) = t.sin_cos();
        let (mut ux0, mut ux1, mut vy0, mut vy1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in points {
            let u = x * c + y * s;
            let v = -x * s + y * c;
            ux0 = ux0.min(u);
            ux1 = ux1.max(u);
            vy0 = vy0.min(v);
            vy1 = vy1.max(v);
        }
        (ux1 - ux0) * (vy1 - vy0)
    };
    let dt = std::f64::consts::FRAC_PI_2 / samples as f64;
    let mut grid: Vec<(f64, usize)> = (0..samples).map(|i| (area_at(i as f64 * dt), i)).collect();
    let mut best = grid.iter().map(|g| g.0).fold(f64::INFINITY, f64::min);
    grid.sort_by(|a, b| a.0.total_cmp(&b.0));
    for &(_, i) in grid.iter().take(8) {
        let (mut lo, mut hi) = ((i as f64 - 1.0) * dt, (i as f64 + 1.0) * dt);
        for _ in 0..100 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if area_at(m1) < area_at(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        best = best.min(area_at((lo + hi) / 2.0));
    }
    best
}

/// Minimum-area rectangle by trying every hull edge direction.
/// Returns `(area, top, left)` where top/left are the axis-aligned hull's.
pub fn brute_min_rect(points: &[P]) -> (f64, f64, f64) {
    let hull = jarvis_hull(points);
    let bounds = |pts: &[P]| {
        let x0 = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let x1 = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        let y0 = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let y1 = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        (x0, x1, y0, y1)
    };
    if hull.len() < 3 {
        let (x0, x1, y0, y1) = bounds(&hull);
        return ((x1 - x0) * (y1 - y0), y0, x0);
    }
    let mut best: Option<(f64, f64, [P; 4])> = None;
    for i in 0..hull.len() {
        let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
        let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
        let (c, s) = ((b.0 - a.0) / len, (b.1 - a.1) / len);
        let rotated: Vec<P> = hull.iter().map(|&(x, y)| (x * c + y * s, -x * s + y * c)).collect();
        let (u0, u1, v0, v1) = bounds(&rotated);
        let area = (u1 - u0) * (v1 - v0);
        // Angle of the box's long-or-short axis folded into (-45°, 45°].
        let mut angle = s.atan2(c);
        while angle > std::f64::consts::FRAC_PI_4 {
            angle -= std::f64::consts::FRAC_PI_2;
        }
        while angle <= -std::f64::consts::FRAC_PI_4 {
            angle += std::f64::consts::FRAC_PI_2;
        }
        let back = |u: f64, v: f64| (u * c - v * s, u * s + v * c);
        let rect = [back(u0, v0), back(u1, v0), back(u1, v1), back(u0, v1)];
        let better = match &best {
            None => true,
            Some((ba, bang, _)) => {
                if (area - ba).abs() <= 1e-12 * ba.max(area) {
                    angle.abs() < bang.abs()
                } else {
                    area < *ba
                }
            }
        };
        if better {
            best = Some((area, angle, rect));
        }
    }
    let (area, _, rect) = best.unwrap();
    let (x0, _, y0, _) = bounds(&rect);
    (area, y0, x0)
}

/// Step-by-step grouping: expand, dense overlap matrix, BFS components,
/// raster scan, enclosing rectangle, sort. Returns word-index paragraphs and
/// their rectangle areas.
pub fn naive_reconstruct(words: &[Word], params: &GroupingParams) -> Vec<(Vec<usize>, f64)> {
    let n = words.len();
    let quads: Vec<[P; 4]> = words.iter().map(|w| expanded_corners(&w.rbox, params.r_v, params.r_h)).collect();
    let overlap = |i: usize, j: usize| match params.iou_mode {
        IouMode::Rotated => quad_iou(&quads[i], &quads[j]),
        IouMode::AxisAligned => {
            let bb = |q: &[P; 4]| {
                let xs = q.iter().map(|p| p.0);
                let ys = q.iter().map(|p| p.1);
                [
                    xs.clone().fold(f64::INFINITY, f64::min),
                    ys.clone().fold(f64::INFINITY, f64::min),
                    xs.fold(f64::NEG_INFINITY, f64::max),
                    ys.fold(f64::NEG_INFINITY, f64::max),
                ]
            };
            let (a, b) = (bb(&quads[i]), bb(&quads[j]));
            let iw = (a[2].min(b[2]) - a[0].max(b[0])).max(0.0);
            let ih = (a[3].min(b[3]) - a[1].max(b[1])).max(0.0);
            let inter = iw * ih;
            let union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter;
            if union > 0.0 {
                inter / union
            } else {
                0.0
            }
        }
    };
    let mut adj = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            adj[i][j] = i == j || overlap(i.min(j), i.max(j)) >= params.iou_threshold;
        }
    }
    let comps = bfs_components(&adj);

    let mut out: Vec<(f64, f64, usize, Vec<usize>, f64)> = Vec::new();
    for comp in comps {
        let mut hs: Vec<f64> = comp.iter().map(|&i| words[i].rbox.h).collect();
        hs.sort_by(f64::total_cmp);
        let med = if hs.len() % 2 == 1 {
            hs[hs.len() / 2]
        } else {
            (hs[hs.len() / 2 - 1] + hs[hs.len() / 2]) / 2.0
        };
        let mut by_y = comp.clone();
        by_y.sort_by(|&a, &b| words[a].rbox.cy.total_cmp(&words[b].rbox.cy).then(a.cmp(&b)));
        let mut lines: Vec<Vec<usize>> = vec![vec![by_y[0]]];
        for w in by_y.windows(2) {
            if words[w[1]].rbox.cy - words[w[0]].rbox.cy > params.line_tolerance * med {
                lines.push(Vec::new());
            }
            lines.last_mut().unwrap().push(w[1]);
        }
        let mut order = Vec::new();
        for mut line in lines {
            line.sort_by(|&a, &b| words[a].rbox.cx.total_cmp(&words[b].rbox.cx).then(a.cmp(&b)));
            order.extend(line);
        }
        let pts: Vec<P> = comp.iter().flat_map(|&i| corners(&words[i].rbox)).collect();
        let (area, top, left) = brute_min_rect(&pts);
        let smallest = *comp.iter().min().unwrap();
        out.push((top, left, smallest, order, area));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    out.into_iter().map(|(_, _, _, order, area)| (order, area)).collect()
}

/// Components by breadth-first search, each sorted, listed by smallest member.
pub fn bfs_components(adj: &[Vec<bool>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut seen = vec![false; n];
    let mut comps = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if adj[u][v] && !seen[v] {
                    seen[v] = true;
                    comp.push(v);
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps
}

/// Probability of every labeling by enumerating all alignments.
pub fn ctc_labelings(frames: &[Vec<f64>], blank: usize) -> BTreeMap<Vec<usize>, f64> {
    let k = frames[0].len();
    let t = frames.len();
    let mut out = BTreeMap::new();
    let total = k.pow(t as u32);
    for code in 0..total {
        let mut c = code;
        let mut path = Vec::with_capacity(t);
        let mut prob = 1.0;
        for frame in frames {
            let s = c % k;
            c /= k;
            prob *= frame[s];
            path.push(s);
        }
        let mut label = Vec::new();
        let mut prev = None;
        for &s in &path {
            if Some(s) != prev && s != blank {
                label.push(s);
            }
            prev = Some(s);
        }
        *out.entry(label).or_insert(0.0) += prob;
    }
    out
}

/// Collapse of the per-frame argmax (lowest index on ties).
pub fn greedy_oracle(frames: &[Vec<f64>], blank: usize) -> Vec<usize> {
    let path: Vec<usize> = frames
        .iter()
        .map(|f| {
            let m = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            f.iter().position(|&v| v == m).unwrap()
        })
        .collect();
    let mut out = Vec::new();
    for (i, &s) in path.iter().enumerate() {
        if s != blank && (i == 0 || path[i - 1] != s) {
            out.push(s);
        }
    }
    out
}

pub fn random_posterior(rng: &mut StdRng, t: usize, k: usize) -> Vec<Vec<f64>> {
    (0..t)
        .map(|_| {
            let raw: Vec<f64> = (0..k).map(|_| rng.gen::<f64>().powi(2) + 1e-3).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|v| v / s).collect()
        })
        .collect()
}

/// A random page of words: several text blocks of lines, some rotated.
pub fn random_layout(rng: &mut StdRng, n: usize) -> Vec<Word> {
    let mut words = Vec::with_capacity(n);
    while words.len() < n {
        let bx = rng.gen_range(0.0..1500.0);
        let by = rng.gen_range(0.0..2000.0);
        let h = rng.gen_range(12.0..48.0);
        let angle = if rng.gen_bool(0.7) { 0.0 } else { rng.gen_range(-0.4..0.4) };
        let (s, c) = f64::sin_cos(angle);
        let lines = rng.gen_range(1..4);
        let per_line = rng.gen_range(1..5);
        for l in 0..lines {
            let mut x = 0.0;
            for _ in 0..per_line {
                if words.len() == n {
                    break;
                }
                let w = rng.gen_range(1.0..5.0) * h;
                let u = x + w / 2.0 + rng.gen_range(-2.0..2.0);
                let v = l as f64 * h * rng.gen_range(1.2..1.8) + rng.gen_range(-2.0..2.0);
                let rbox = RotatedBox::new(bx + u * c - v * s, by + u * s + v * c, w, h * rng.gen_range(0.8..1.2), angle);
                words.push(Word::new(format!("w{}", words.len()), rbox));
                x += w + h * rng.gen_range(0.2..1.5);
            }
        }
    }
    words
}

pub fn random_params(rng: &mut StdRng) -> GroupingParams {
    GroupingParams {
        r_v: rng.gen_range(0.0..1.0),
        r_h: rng.gen_range(0.0..1.5),
        iou_threshold: if rng.gen_bool(0.05) { 0.0 } else { rng.gen_range(0.001..0.3) },
        iou_mode: if rng.gen_bool(0.5) { IouMode::Rotated } else { IouMode::AxisAligned },
        line_tolerance: rng.gen_range(0.0..1.0),
    }
}

pub fn random_box(rng: &mut StdRng) -> RotatedBox {
    RotatedBox::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(0.2..2.5),
        rng.gen_range(0.2..2.5),
        rng.gen_range(-3.2..3.2),
    )
}

pub fn random_points(rng: &mut StdRng, n: usize) -> Vec<P> {
    (0..n).map(|_| (rng.gen_range(-5.0..5.0), rng.gen_range(-3.0..3.0))).collect()
}
