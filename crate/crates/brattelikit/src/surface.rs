//! The flat surface of a weighted ordered diagram: rectangles with their top
//! and right edges identified through the positive and negative interval
//! exchanges, Teichmüller deformation and the renormalization map.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bundle::WeightedDiagram;
use crate::diagram::BiInfiniteDiagram;
use crate::error::{Error, Result};
use crate::orders::{EdgeKey, EdgeOrders, OrderedSide};
use crate::renorm::shift_weighted;
use crate::scalar::Scalar;
use crate::source::Side;
use crate::stacks::{build_stacks, iet_at_depth, IetApprox, IetCell};
use crate::weights::{perron, WeightFunction};

#[derive(Clone, Debug, PartialEq)]
pub struct Rect<S> {
    pub x0: S,
    pub x1: S,
    pub y0: S,
    pub y1: S,
}

impl<S: Scalar> Rect<S> {
    pub fn width(&self) -> S {
        self.x1.clone() - self.x0.clone()
    }

    pub fn height(&self) -> S {
        self.y1.clone() - self.y0.clone()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeSide {
    Top,
    Bottom,
    Left,
    Right,
}

/// A boundary point where one of the identifications is discontinuous.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularPoint<S> {
    pub rect: usize,
    pub edge: EdgeSide,
    /// `x` on top and bottom edges, `y` on left and right edges.
    pub at: S,
}

/// Rectangles `R_i = [X_{i-1}, X_i] × [Y_{i-1}, Y_i]`. A point on the top edge
/// at `x` is glued to the bottom edge at `top(x)`; a point on the right edge at
/// `y` is glued to the left edge at `right(y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatSurfaceModel<S> {
    pub rectangles: Vec<Rect<S>>,
    pub top: IetApprox<S>,
    pub right: IetApprox<S>,
    pub singular: Vec<SingularPoint<S>>,
    pub area: S,
}

fn cumulative<S: Scalar>(xs: &[S]) -> Vec<S> {
    let mut out = vec![S::zero()];
    for x in xs {
        let last = out.last().expect("nonempty").clone();
        out.push(last + x.clone());
    }
    out
}

fn containing<S: Scalar>(bounds: &[(S, S)], x: &S) -> Option<usize> {
    bounds.iter().position(|(a, b)| a <= x && x < b)
}

impl<S: Scalar> FlatSurfaceModel<S> {
    pub fn from_parts(rectangles: Vec<Rect<S>>, top: IetApprox<S>, right: IetApprox<S>) -> Self {
        let area = rectangles.iter().fold(S::zero(), |a, r| a + r.width() * r.height());
        let mut s = FlatSurfaceModel { rectangles, top, right, singular: vec![], area };
        s.singular = s.singular_points();
        s
    }

    fn x_ranges(&self) -> Vec<(S, S)> {
        self.rectangles.iter().map(|r| (r.x0.clone(), r.x1.clone())).collect()
    }

    fn y_ranges(&self) -> Vec<(S, S)> {
        self.rectangles.iter().map(|r| (r.y0.clone(), r.y1.clone())).collect()
    }

    /// Interior breakpoints of either map and of its image, placed on the
    /// edges they belong to. Relative to the working depth.
    fn singular_points(&self) -> Vec<SingularPoint<S>> {
        let mut out = vec![];
        for (t, ranges, from, to) in
            [(&self.top, self.x_ranges(), EdgeSide::Top, EdgeSide::Bottom), (&self.right, self.y_ranges(), EdgeSide::Right, EdgeSide::Left)]
        {
            let c = t.canonical(0.0);
            let interior = |x: &S, rect: usize| ranges[rect].0 < *x && *x < ranges[rect].1;
            for (i, cell) in c.cells.iter().enumerate() {
                if i > 0 && interior(&cell.start, cell.symbol) {
                    out.push(SingularPoint { rect: cell.symbol, edge: from, at: cell.start.clone() });
                }
                if let Some(s) = &cell.shift {
                    for y in [cell.start.clone() + s.clone(), cell.end.clone() + s.clone()] {
                        let mid = (cell.start.clone() + cell.end.clone()) / S::from_u64(2) + s.clone();
                        if let Some(r) = containing(&ranges, &mid) {
                            if interior(&y, r) {
                                out.push(SingularPoint { rect: r, edge: to, at: y });
                            }
                        }
                    }
                }
            }
        }
        out.sort_by(|a, b| (a.edge, a.rect).cmp(&(b.edge, b.rect)).then(a.at.partial_cmp(&b.at).expect("comparable")));
        out.dedup();
        out
    }

    pub fn to_f64(&self) -> FlatSurfaceModel<f64> {
        FlatSurfaceModel::from_parts(
            self.rectangles
                .iter()
                .map(|r| Rect { x0: r.x0.to_f64(), x1: r.x1.to_f64(), y0: r.y0.to_f64(), y1: r.y1.to_f64() })
                .collect(),
            self.top.to_f64(),
            self.right.to_f64(),
        )
    }

    /// Canonical forms of both maps, for comparisons.
    pub fn canonical(&self, tol: f64) -> Self {
        FlatSurfaceModel { top: self.top.canonical(tol), right: self.right.canonical(tol), ..self.clone() }
    }

    /// Largest difference in rectangle and identification data; infinite if
    /// the combinatorics differ. Both maps are compared in canonical form.
    pub fn deviation(&self, other: &Self, merge_tol: f64) -> f64 {
        if self.rectangles.len() != other.rectangles.len() {
            return f64::INFINITY;
        }
        let d = |a: &S, b: &S| (a.clone() - b.clone()).abs().to_f64();
        let mut worst = 0.0f64;
        for (a, b) in self.rectangles.iter().zip(&other.rectangles) {
            worst = worst.max(d(&a.x0, &b.x0)).max(d(&a.x1, &b.x1)).max(d(&a.y0, &b.y0)).max(d(&a.y1, &b.y1));
        }
        let top = self.top.canonical(merge_tol).deviation(&other.top.canonical(merge_tol));
        let right = self.right.canonical(merge_tol).deviation(&other.right.canonical(merge_tol));
        worst.max(top).max(right)
    }

    pub fn to_json(&self) -> Value {
        let rects: Vec<Value> = self
            .rectangles
            .iter()
            .map(|r| json!({"x0": r.x0.to_json(), "x1": r.x1.to_json(), "y0": r.y0.to_json(), "y1": r.y1.to_json()}))
            .collect();
        let singular: Vec<Value> =
            self.singular.iter().map(|p| json!({"rect": p.rect, "edge": p.edge, "at": p.at.to_json()})).collect();
        let pairs: Vec<Value> = self
            .identification_pairs()
            .into_iter()
            .map(|p| {
                json!({
                    "label": p.label,
                    "from": {"rect": p.from_rect, "edge": p.from_edge, "range": [p.from.0.to_json(), p.from.1.to_json()]},
                    "to": {"rect": p.to_rect, "edge": p.to_edge, "range": [p.to.0.to_json(), p.to.1.to_json()]},
                })
            })
            .collect();
        json!({
            "numericMode": S::MODE,
            "area": self.area.to_json(),
            "rectangles": rects,
            "breakpoints": {
                "top": self.top.breakpoints().iter().map(S::to_json).collect::<Vec<_>>(),
                "right": self.right.breakpoints().iter().map(S::to_json).collect::<Vec<_>>(),
            },
            "top": self.top.to_json(),
            "right": self.right.to_json(),
            "identifications": pairs,
            "singular": singular,
        })
    }

    /// Reads the rectangles and both maps; everything else is recomputed.
    pub fn from_json(v: &Value) -> Result<Self> {
        let num = |v: Option<&Value>| -> Result<S> { S::from_json(v.ok_or_else(|| Error::Json("missing coordinate".into()))?).map_err(Error::Json) };
        let rectangles = v
            .get("rectangles")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Json("surface without rectangles".into()))?
            .iter()
            .map(|r| Ok(Rect { x0: num(r.get("x0"))?, x1: num(r.get("x1"))?, y0: num(r.get("y0"))?, y1: num(r.get("y1"))? }))
            .collect::<Result<Vec<_>>>()?;
        let top = IetApprox::from_json(v.get("top").ok_or_else(|| Error::Json("surface without top map".into()))?)?;
        let right = IetApprox::from_json(v.get("right").ok_or_else(|| Error::Json("surface without right map".into()))?)?;
        Ok(FlatSurfaceModel::from_parts(rectangles, top, right))
    }

    /// Glued edge segments, labelled `A_i` (top to bottom) and `B_i` (right to left).
    pub fn identification_pairs(&self) -> Vec<IdentificationPair<S>> {
        let mut out = vec![];
        for (t, ranges, prefix, from_edge, to_edge) in [
            (&self.top, self.x_ranges(), "A", EdgeSide::Top, EdgeSide::Bottom),
            (&self.right, self.y_ranges(), "B", EdgeSide::Right, EdgeSide::Left),
        ] {
            for cell in t.canonical(0.0).cells {
                let Some(s) = cell.shift else { continue };
                let mid = (cell.start.clone() + cell.end.clone()) / S::from_u64(2) + s.clone();
                let to_rect = containing(&ranges, &mid).unwrap_or(cell.symbol);
                let n = out.iter().filter(|p: &&IdentificationPair<S>| p.from_edge == from_edge).count();
                out.push(IdentificationPair {
                    label: format!("{prefix}{}", n + 1),
                    from_rect: cell.symbol,
                    from_edge,
                    from: (cell.start.clone(), cell.end.clone()),
                    to_rect,
                    to_edge,
                    to: (cell.start + s.clone(), cell.end + s),
                });
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentificationPair<S> {
    pub label: String,
    pub from_rect: usize,
    pub from_edge: EdgeSide,
    pub from: (S, S),
    pub to_rect: usize,
    pub to_edge: EdgeSide,
    pub to: (S, S),
}

fn rectangles_from<S: Scalar>(widths: &[S], heights: &[S]) -> Vec<Rect<S>> {
    let xs = cumulative(widths);
    let ys = cumulative(heights);
    (0..widths.len())
        .map(|i| Rect { x0: xs[i].clone(), x1: xs[i + 1].clone(), y0: ys[i].clone(), y1: ys[i + 1].clone() })
        .collect()
}

/// The surface with `T⁺` built to `plus_depth` and `T⁻` to `minus_depth`.
pub fn build_surface_with<S: Scalar>(b: &WeightedDiagram<S>, plus_depth: usize, minus_depth: usize) -> Result<FlatSurfaceModel<S>> {
    let pos = OrderedSide::new(&b.diagram, &b.orders, Side::Positive, plus_depth)?;
    let neg = OrderedSide::new(&b.diagram, &b.orders, Side::Negative, minus_depth)?;
    let top = iet_at_depth(&pos, &b.plus, plus_depth)?;
    let right = iet_at_depth(&neg, &b.minus, minus_depth)?;
    Ok(FlatSurfaceModel::from_parts(rectangles_from(&b.plus.levels[0], &b.minus.levels[0]), top, right))
}

pub fn build_surface<S: Scalar>(b: &WeightedDiagram<S>, depth: usize) -> Result<FlatSurfaceModel<S>> {
    build_surface_with(b, depth, depth)
}

/// `x ↦ c x`, `y ↦ y / c`.
pub fn deform_by_factor<S: Scalar>(s: &FlatSurfaceModel<S>, c: &S) -> FlatSurfaceModel<S> {
    let inv = S::one() / c.clone();
    FlatSurfaceModel::from_parts(
        s.rectangles
            .iter()
            .map(|r| Rect {
                x0: r.x0.clone() * c.clone(),
                x1: r.x1.clone() * c.clone(),
                y0: r.y0.clone() * inv.clone(),
                y1: r.y1.clone() * inv.clone(),
            })
            .collect(),
        s.top.scaled(c),
        s.right.scaled(&inv),
    )
}

/// `g_t`: horizontals stretched by `e^t`, verticals contracted by `e^{-t}`.
pub fn teichmuller_deform(s: &FlatSurfaceModel<f64>, t: f64) -> FlatSurfaceModel<f64> {
    if t == 0.0 {
        return s.clone();
    }
    deform_by_factor(s, &t.exp())
}

/// One renormalization step from level `j` to `j + 1`: deform, cut every
/// rectangle along the outgoing order of its vertex and restack the pieces
/// along the incoming order of their ranges.
fn renorm_step<S: Scalar>(s: &FlatSurfaceModel<S>, b: &WeightedDiagram<S>, j: usize) -> Result<FlatSurfaceModel<S>> {
    if j + 1 > b.depth_plus() {
        return Err(Error::WeightDepth { needed: j + 1, available: b.depth_plus() });
    }
    let order = b.orders.level(&b.diagram, j as i64 + 1)?;
    let (w_old, w_new) = (&b.plus.levels[j], &b.plus.levels[j + 1]);
    if s.rectangles.len() != w_old.len() {
        return Err(Error::DimensionMismatch { level: j as i64, expected: w_old.len(), found: s.rectangles.len() });
    }
    let s = deform_by_factor(s, &(S::sum_of(w_old) / S::sum_of(w_new)));

    let mut piece: HashMap<EdgeKey, (S, S)> = HashMap::new();
    for (u, r) in s.rectangles.iter().enumerate() {
        if !(w_old[u] > S::zero()) {
            return Err(Error::NeedsPositiveWeights { level: j, vertex: u });
        }
        let mut x = r.x0.clone();
        for e in &order.outgoing[u] {
            let wd = r.width() * w_new[e.range].clone() / w_old[u].clone();
            piece.insert(*e, (x.clone(), x.clone() + wd.clone()));
            x = x + wd;
        }
    }
    let mut y_offset: HashMap<EdgeKey, S> = HashMap::new();
    let mut widths = vec![];
    let mut heights = vec![];
    for inc in &order.incoming {
        let first = &piece[&inc[0]];
        widths.push(first.1.clone() - first.0.clone());
        let mut h = S::zero();
        for e in inc {
            y_offset.insert(*e, h.clone());
            h = h + s.rectangles[e.source].height();
        }
        heights.push(h);
    }
    let rects = rectangles_from(&widths, &heights);
    let two = S::from_u64(2);

    let x_ranges = s.x_ranges();
    let mut top = vec![];
    for (v, inc) in order.incoming.iter().enumerate() {
        let last = inc.last().expect("every vertex has an incoming edge");
        let (p0, p1) = piece[last].clone();
        let to_new = |x: S| rects[v].x0.clone() + (x - p0.clone());
        for c in s.top.cells.iter().filter(|c| c.symbol == last.source) {
            let lo = S::max_of(c.start.clone(), p0.clone());
            let hi = S::min_of(c.end.clone(), p1.clone());
            // float cells may overhang a piece boundary by rounding
            let sliver = if S::EXACT { S::zero() } else { (p1.clone() - p0.clone()) / S::from_u64(1_000_000_000) };
            if !(hi.clone() - lo.clone() > sliver) {
                continue;
            }
            let shift = match &c.shift {
                None => None,
                Some(sh) => {
                    let mid = (lo.clone() + hi.clone()) / two.clone() + sh.clone();
                    let u2 = containing(&x_ranges, &mid).ok_or_else(|| Error::Invalid("top map leaves the surface".into()))?;
                    let e2 = order.outgoing[u2]
                        .iter()
                        .find(|e| piece[e].0 <= mid && mid < piece[e].1)
                        .ok_or_else(|| Error::Invalid("image falls between pieces".into()))?;
                    if order.incoming[e2.range][0] != *e2 {
                        return Err(Error::Invalid("top of a stack glued inside another stack".into()));
                    }
                    let image = rects[e2.range].x0.clone() + (lo.clone() + sh.clone() - piece[e2].0.clone());
                    Some(image - to_new(lo.clone()))
                }
            };
            top.push(IetCell { start: to_new(lo), end: to_new(hi), shift, symbol: v });
        }
    }

    let y_ranges = s.y_ranges();
    let mut right = vec![];
    for (v, inc) in order.incoming.iter().enumerate() {
        for e in inc {
            let u = e.source;
            let base = rects[v].y0.clone() + y_offset[e].clone();
            let out = &order.outgoing[u];
            let rank = order.outgoing_rank(e);
            if rank + 1 < out.len() {
                let next = out[rank + 1];
                let target = rects[next.range].y0.clone() + y_offset[&next].clone();
                let end = base.clone() + s.rectangles[u].height();
                right.push(IetCell { start: base.clone(), end, shift: Some(target - base), symbol: v });
                continue;
            }
            let y0 = s.rectangles[u].y0.clone();
            for c in s.right.cells.iter().filter(|c| c.symbol == u) {
                let start = base.clone() + (c.start.clone() - y0.clone());
                let end = base.clone() + (c.end.clone() - y0.clone());
                let shift = match &c.shift {
                    None => None,
                    Some(sh) => {
                        let mid = (c.start.clone() + c.end.clone()) / two.clone() + sh.clone();
                        let u2 = containing(&y_ranges, &mid).ok_or_else(|| Error::Invalid("right map leaves the surface".into()))?;
                        let first = order.outgoing[u2][0];
                        let image = rects[first.range].y0.clone()
                            + y_offset[&first].clone()
                            + (c.start.clone() + sh.clone() - y_ranges[u2].0.clone());
                        Some(image - start.clone())
                    }
                };
                right.push(IetCell { start, end, shift, symbol: v });
            }
        }
    }
    let top = IetApprox::from_cells(s.top.depth.saturating_sub(1), rects.last().map_or(S::zero(), |r| r.x1.clone()), top);
    let right = IetApprox::from_cells(s.right.depth + 1, rects.last().map_or(S::zero(), |r| r.y1.clone()), right);
    Ok(FlatSurfaceModel::from_parts(rects, top, right))
}

/// `𝓡_k`: `k` deform-cut-stack steps, using only the surface geometry and the
/// edge data of levels `1..=k`. Needs `Σ w⁺_0 = 1` for the times to be `t_k`.
pub fn renorm_map<S: Scalar>(s: &FlatSurfaceModel<S>, b: &WeightedDiagram<S>, k: usize) -> Result<FlatSurfaceModel<S>> {
    let mut cur = s.clone();
    for j in 0..k {
        cur = renorm_step(&cur, b, j)?;
    }
    Ok(cur)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FunctorialityReport {
    pub k: usize,
    pub deviation: f64,
    pub area_before: f64,
    pub area_after: f64,
}

/// Compare `𝓡_k(S(b))` with `S(σ^k b)`. `T⁺` is built to `plus_depth` (at
/// least `k`) and `T⁻` to `minus_depth`; the shifted surface uses
/// `plus_depth - k` and `minus_depth + k`.
pub fn functoriality_check<S: Scalar>(
    b: &WeightedDiagram<S>,
    k: usize,
    plus_depth: usize,
    minus_depth: usize,
    tol: f64,
) -> Result<FunctorialityReport> {
    if plus_depth < k {
        return Err(Error::WeightDepth { needed: k, available: plus_depth });
    }
    let s = build_surface_with(b, plus_depth, minus_depth)?;
    let renormed = renorm_map(&s, b, k)?;
    let shifted = build_surface_with(&shift_weighted(b, k)?, plus_depth - k, minus_depth + k)?;
    let deviation = renormed.deviation(&shifted, tol / 10.0);
    let report = FunctorialityReport { k, deviation, area_before: s.area.to_f64(), area_after: renormed.area.to_f64() };
    if !(deviation <= tol) {
        return Err(Error::Tolerance { what: format!("renormalization at k = {k}"), deviation, tol });
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cylinder {
    pub width: f64,
    pub height: f64,
    /// Number of level-0 cells the cylinder passes through.
    pub cells: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Approximant<S> {
    pub diagram: BiInfiniteDiagram,
    pub surface: FlatSurfaceModel<S>,
    pub vertical_cylinders: Vec<Cylinder>,
}

/// Close a depth-`k` map by sending the top of every stack to its bottom,
/// the behaviour forced by an identity tail.
fn closed<S: Scalar>(t: &IetApprox<S>, stacks: &crate::stacks::StackFamily<S>) -> IetApprox<S> {
    let mut cells = t.cells.clone();
    for st in &stacks.stacks {
        let (bottom, top) = (&st[0], st.last().expect("nonempty"));
        let i = t.locate(&top.start).expect("top cell present");
        cells[i].shift = Some(bottom.start.clone() - top.start.clone());
    }
    IetApprox { cells, ..t.clone() }
}

/// The identity-tail truncation at `i`: weights kept on `|k| ≤ i`, both maps
/// closed up, and the vertical cylinders read off the closed top map.
pub fn finite_approximant<S: Scalar>(b: &WeightedDiagram<S>, i: usize) -> Result<Approximant<S>> {
    if i > b.depth_plus() || i > b.depth_minus() {
        return Err(Error::WeightDepth { needed: i, available: b.depth_plus().min(b.depth_minus()) });
    }
    let diagram = b.diagram.truncate(i)?;
    let orders = EdgeOrders {
        policy: b.orders.policy,
        explicit: b.orders.explicit.iter().filter(|(k, _)| k.unsigned_abs() as usize <= i).map(|(k, o)| (*k, o.clone())).collect(),
    };
    let plus = WeightFunction::new(Side::Positive, b.plus.levels[..=i].to_vec());
    let minus = WeightFunction::new(Side::Negative, b.minus.levels[..=i].to_vec());
    let pos = OrderedSide::new(&diagram, &orders, Side::Positive, i)?;
    let neg = OrderedSide::new(&diagram, &orders, Side::Negative, i)?;
    let (sp, sn) = (build_stacks(&pos, &plus, i)?, build_stacks(&neg, &minus, i)?);
    let top = closed(&IetApprox::from_stacks(&sp, S::sum_of(&plus.levels[0])), &sp);
    let right = closed(&IetApprox::from_stacks(&sn, S::sum_of(&minus.levels[0])), &sn);
    let surface = FlatSurfaceModel::from_parts(rectangles_from(&plus.levels[0], &minus.levels[0]), top, right);

    let mut seen = vec![false; surface.top.cells.len()];
    let mut vertical_cylinders = vec![];
    for start in 0..seen.len() {
        if seen[start] {
            continue;
        }
        let (mut at, mut height, mut cells) = (start, 0.0, 0);
        while !seen[at] {
            seen[at] = true;
            let c = &surface.top.cells[at];
            height += surface.rectangles[c.symbol].height().to_f64();
            cells += 1;
            let mid = (c.start.clone() + c.end.clone()) / S::from_u64(2) + c.shift.clone().expect("closed map");
            at = surface.top.locate(&mid).expect("image inside the domain");
        }
        let c = &surface.top.cells[start];
        vertical_cylinders.push(Cylinder { width: (c.end.clone() - c.start.clone()).to_f64(), height, cells });
    }
    Ok(Approximant { diagram, surface, vertical_cylinders })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PseudoAnosovReport {
    pub is_stationary: bool,
    pub period: Option<usize>,
    /// `e^{t_j}`: the Perron eigenvalue of the product over one period.
    pub expansion_factor: Option<f64>,
}

/// Detects matrices and orders repeating with a common period `j` from level 1
/// on both sides.
pub fn stationary_pa_report(diagram: &BiInfiniteDiagram, orders: &EdgeOrders) -> Result<PseudoAnosovReport> {
    let not = PseudoAnosovReport { is_stationary: false, period: None, expansion_factor: None };
    let (Some((hp, pp)), Some((hn, pn))) = (diagram.source(Side::Positive).period_structure(), diagram.source(Side::Negative).period_structure()) else {
        return Ok(not);
    };
    if hp != 0 || hn != 0 {
        return Ok(not);
    }
    let j = num_integer::lcm(pp, pn);
    let reach = orders.explicit.keys().map(|k| k.unsigned_abs() as usize).max().unwrap_or(0) + j;
    for k in 1..=reach as i64 {
        for s in [1, -1] {
            if orders.level(diagram, s * k)? != orders.level(diagram, s * (k + j as i64))? {
                return Ok(not);
            }
        }
    }
    let mut product = diagram.matrix_at(1)?;
    for k in 2..=j as i64 {
        product = diagram.matrix_at(k)?.checked_mul(&product, k)?;
    }
    let expansion_factor = perron(&product).or_else(|_| perron(&product.transpose())).ok().map(|(lambda, _)| lambda);
    Ok(PseudoAnosovReport { is_stationary: true, period: Some(j), expansion_factor })
}

/// SVG 1.1 drawing: rectangles in their diagonal placement, glued segments
/// carrying matching labels. Output depends only on the surface.
pub fn export_svg<S: Scalar>(s: &FlatSurfaceModel<S>) -> String {
    let f = s.to_f64();
    let (w, h) = (f.top.length.max(1e-12), f.right.length.max(1e-12));
    let size = 640.0;
    let margin = 40.0;
    let scale = (size - 2.0 * margin) / w.max(h);
    let px = |x: f64| margin + x * scale;
    let py = |y: f64| margin + (h - y) * scale;
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{:.0}" height="{:.0}" viewBox="0 0 {:.0} {:.0}">"#,
        2.0 * margin + w * scale,
        2.0 * margin + h * scale,
        2.0 * margin + w * scale,
        2.0 * margin + h * scale
    );
    let _ = writeln!(out, r#"<g fill="none" stroke="black" stroke-width="1">"#);
    for (i, r) in f.rectangles.iter().enumerate() {
        let _ = writeln!(
            out,
            r##"<rect id="R{}" x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="#eef3fb"/>"##,
            i + 1,
            px(r.x0),
            py(r.y1),
            (r.x1 - r.x0) * scale,
            (r.y1 - r.y0) * scale
        );
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, r#"<g font-family="sans-serif" font-size="10" text-anchor="middle">"#);
    let tick = |out: &mut String, x1: f64, y1: f64, x2: f64, y2: f64| {
        let _ = writeln!(out, r#"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="red"/>"#);
    };
    for p in f.identification_pairs() {
        let (a, b) = p.from;
        let (c, d) = p.to;
        let (fr, tr) = (&f.rectangles[p.from_rect], &f.rectangles[p.to_rect]);
        match p.from_edge {
            EdgeSide::Top => {
                tick(&mut out, px(a), py(fr.y1) - 3.0, px(a), py(fr.y1) + 3.0);
                tick(&mut out, px(c), py(tr.y0) - 3.0, px(c), py(tr.y0) + 3.0);
                let _ = writeln!(out, r#"<text x="{:.3}" y="{:.3}">{}</text>"#, px((a + b) / 2.0), py(fr.y1) - 4.0, p.label);
                let _ = writeln!(out, r#"<text x="{:.3}" y="{:.3}">{}</text>"#, px((c + d) / 2.0), py(tr.y0) + 12.0, p.label);
            }
            _ => {
                tick(&mut out, px(fr.x1) - 3.0, py(a), px(fr.x1) + 3.0, py(a));
                tick(&mut out, px(tr.x0) - 3.0, py(c), px(tr.x0) + 3.0, py(c));
                let _ = writeln!(out, r#"<text x="{:.3}" y="{:.3}">{}</text>"#, px(fr.x1) + 12.0, py((a + b) / 2.0) + 3.0, p.label);
                let _ = writeln!(out, r#"<text x="{:.3}" y="{:.3}">{}</text>"#, px(tr.x0) - 12.0, py((c + d) / 2.0) + 3.0, p.label);
            }
        }
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, "</svg>");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::TransitionMatrix;
    use crate::scalar::Q;
    use crate::weights::{pf_weights, pf_weights_exact};

    fn fib_bundle(depth: usize) -> WeightedDiagram<f64> {
        let d = BiInfiniteDiagram::stationary(TransitionMatrix::lit(&[[1, 1], [1, 0]]));
        let (p, _) = pf_weights(&d, Side::Positive, depth).unwrap();
        let (m, _) = pf_weights(&d, Side::Negative, depth).unwrap();
        WeightedDiagram::new(d, EdgeOrders::policy_only(), p, m).unwrap().normalized().unwrap()
    }

    fn chacon_exact(depth: usize) -> WeightedDiagram<Q> {
        let d = BiInfiniteDiagram::stationary(TransitionMatrix::mpn(3, 1));
        let (p, _) = pf_weights_exact(&d, Side::Positive, depth).unwrap().unwrap();
        let one = d.one_sided(Side::Negative, depth).unwrap();
        let m = WeightFunction::from_top(&one, vec![Q::from_int(1); 2]);
        WeightedDiagram::new(d, EdgeOrders::policy_only(), p, m).unwrap().normalized().unwrap()
    }

    #[test]
    fn torus() {
        let d = BiInfiniteDiagram::stationary(TransitionMatrix::identity(1));
        let w = |side| WeightFunction::new(side, vec![vec![Q::from_int(1)]; 3]);
        let b = WeightedDiagram::new(d, EdgeOrders::policy_only(), w(Side::Positive), w(Side::Negative)).unwrap();
        let a = finite_approximant(&b, 0).unwrap();
        assert_eq!(a.surface.rectangles.len(), 1);
        assert_eq!(a.surface.area, Q::from_int(1));
        assert!(a.surface.singular.is_empty());
        assert_eq!(a.surface.identification_pairs().len(), 2);
        assert_eq!(a.vertical_cylinders.len(), 1);
    }

    #[test]
    fn fibonacci_surface() {
        let b = fib_bundle(6);
        let s = build_surface(&b, 4).unwrap();
        assert_eq!(s.rectangles.len(), 2);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((s.rectangles[0].width() / s.rectangles[1].width() - phi).abs() < 1e-12);
        assert!((s.area - 1.0).abs() < 1e-12);
        assert!(!s.singular.is_empty());
        assert_eq!(export_svg(&s), export_svg(&build_surface(&b, 4).unwrap()));
        assert!(export_svg(&s).contains(">A1<"));
    }

    #[test]
    fn deformation() {
        let s = build_surface(&fib_bundle(4), 3).unwrap();
        for t in [0.5, -0.5, 2.0, -2.0] {
            let d = teichmuller_deform(&s, t);
            assert!((d.area - s.area).abs() < 1e-12);
            assert!(teichmuller_deform(&d, -t).deviation(&s, 1e-13) < 1e-12);
        }
        assert_eq!(teichmuller_deform(&s, 0.0), s);
    }

    #[test]
    fn renormalization_matches_shift() {
        let b = fib_bundle(8);
        for k in 0..=3 {
            let r = functoriality_check(&b, k, 5, 2, 1e-9).unwrap();
            assert!((r.area_after - 1.0).abs() < 1e-12);
        }
        let c = chacon_exact(6);
        for k in 1..=3 {
            let r = functoriality_check(&c, k, 4, 1, 0.0).unwrap();
            assert_eq!(r.deviation, 0.0);
        }
        let s = build_surface_with(&c, 4, 1).unwrap();
        let two = renorm_map(&s, &c, 2).unwrap();
        let step = renorm_map(&renorm_map(&s, &c, 1).unwrap(), &shift_weighted(&c, 1).unwrap(), 1).unwrap();
        assert_eq!(step, two);
        assert_eq!(two.area, Q::from_int(1));
    }

    #[test]
    fn approximant_cylinders() {
        let b = fib_bundle(3);
        for i in 1..=3 {
            let a = finite_approximant(&b, i).unwrap();
            let h = crate::renorm::heights(&b.diagram, &b.minus, i).unwrap();
            let mut got: Vec<(f64, f64)> = a.vertical_cylinders.iter().map(|c| (c.width, c.height)).collect();
            let mut want: Vec<(f64, f64)> = (0..2).map(|v| (b.plus.levels[i][v], h.levels[i][v])).collect();
            got.sort_by(|x, y| x.partial_cmp(y).unwrap());
            want.sort_by(|x, y| x.partial_cmp(y).unwrap());
            assert_eq!(got.len(), want.len());
            for (g, w) in got.iter().zip(&want) {
                assert!((g.0 - w.0).abs() < 1e-12 && (g.1 - w.1).abs() < 1e-12);
            }
        }
        assert_eq!(finite_approximant(&b, 0).unwrap().vertical_cylinders.len(), 2);
    }

    #[test]
    fn pseudo_anosov() {
        let fib = BiInfiniteDiagram::stationary(TransitionMatrix::lit(&[[1, 1], [1, 0]]));
        let r = stationary_pa_report(&fib, &EdgeOrders::policy_only()).unwrap();
        assert_eq!(r.period, Some(1));
        assert!((r.expansion_factor.unwrap() - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
        let c = BiInfiniteDiagram::stationary(TransitionMatrix::mpn(3, 1));
        let r = stationary_pa_report(&c, &EdgeOrders::policy_only()).unwrap();
        assert!((r.expansion_factor.unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let s = build_surface(&chacon_exact(3), 2).unwrap();
        let back = FlatSurfaceModel::<Q>::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        let f = build_surface(&fib_bundle(3), 3).unwrap();
        assert_eq!(FlatSurfaceModel::<f64>::from_json(&f.to_json()).unwrap(), f);
    }
}
