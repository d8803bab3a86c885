//! Cutting and stacking: stage-k stacks and the partial interval exchanges
//! `T_k` they define.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::orders::{EdgeKey, FinitePath, OrderedSide};
use crate::scalar::Scalar;
use crate::weights::WeightFunction;
use std::collections::HashMap;

/// One interval in a stack: the cylinder of `path`, placed in `[start, end)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StackCell<S> {
    pub path: FinitePath,
    pub start: S,
    pub end: S,
}

/// The stacks over each vertex of level `k`, listed bottom to top.
#[derive(Clone, Debug, PartialEq)]
pub struct StackFamily<S> {
    pub level: usize,
    pub stacks: Vec<Vec<StackCell<S>>>,
}

impl<S: Scalar> StackFamily<S> {
    pub fn width(&self, v: usize) -> S {
        let c = &self.stacks[v][0];
        c.end.clone() - c.start.clone()
    }

    pub fn heights(&self) -> Vec<usize> {
        self.stacks.iter().map(Vec::len).collect()
    }

    /// Largest gap or overlap when the cells are laid end to end over `[0, total)`.
    pub fn partition_defect(&self, total: &S) -> f64 {
        let mut cells: Vec<(S, S)> = self.stacks.iter().flatten().map(|c| (c.start.clone(), c.end.clone())).collect();
        cells.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("comparable"));
        let mut at = S::zero();
        let mut worst = 0.0f64;
        for (a, b) in cells {
            worst = worst.max((a - at).abs().to_f64());
            at = b;
        }
        worst.max((total.clone() - at).abs().to_f64())
    }
}

/// Offset of each edge inside the stack of its source: total weight of the
/// edges before it in the outgoing order.
fn edge_offsets<S: Scalar>(side: &OrderedSide, w: &WeightFunction<S>, level: usize) -> HashMap<EdgeKey, S> {
    let mut out = HashMap::new();
    for u in 0..side.diagram.sizes[level - 1] {
        let mut acc = S::zero();
        for e in side.outgoing(level, u) {
            out.insert(*e, acc.clone());
            acc = acc + w.levels[level][e.range].clone();
        }
    }
    out
}

/// Stage-`k` stacks. Level-0 intervals sit side by side from 0 in vertex order.
pub fn build_stacks<S: Scalar>(side: &OrderedSide, w: &WeightFunction<S>, k: usize) -> Result<StackFamily<S>> {
    if k > side.depth() || k > w.depth() {
        return Err(Error::WeightDepth { needed: k, available: side.depth().min(w.depth()) });
    }
    for (v, x) in w.levels[k].iter().enumerate() {
        if !(x.clone() > S::zero()) {
            return Err(Error::NeedsPositiveWeights { level: k, vertex: v });
        }
    }
    let mut base = Vec::with_capacity(w.levels[0].len());
    let mut acc = S::zero();
    for x in &w.levels[0] {
        base.push(acc.clone());
        acc = acc + x.clone();
    }
    let offsets: Vec<HashMap<EdgeKey, S>> = (1..=k).map(|j| edge_offsets(side, w, j)).collect();
    let stacks = (0..side.diagram.sizes[k])
        .map(|v| {
            side.enumerate_s(k, v)
                .into_iter()
                .map(|path| {
                    let start = path.edges.iter().enumerate().fold(base[path.start].clone(), |a, (i, e)| a + offsets[i][e].clone());
                    let end = start.clone() + w.levels[k][v].clone();
                    StackCell { path, start, end }
                })
                .collect()
        })
        .collect();
    Ok(StackFamily { level: k, stacks })
}

/// A piece of a partial interval exchange: `[start, end)` translated by
/// `shift`, or a gap where the map is not yet defined.
#[derive(Clone, Debug, PartialEq)]
pub struct IetCell<S> {
    pub start: S,
    pub end: S,
    pub shift: Option<S>,
    /// Index of the level-0 interval (rectangle) containing the cell.
    pub symbol: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IetApprox<S> {
    pub depth: usize,
    pub length: S,
    /// Sorted by `start`, covering `[0, length)`.
    pub cells: Vec<IetCell<S>>,
}

impl<S: Scalar> IetApprox<S> {
    pub fn from_stacks(st: &StackFamily<S>, length: S) -> Self {
        let mut cells = vec![];
        for stack in &st.stacks {
            for (i, c) in stack.iter().enumerate() {
                let shift = stack.get(i + 1).map(|up| up.start.clone() - c.start.clone());
                cells.push(IetCell { start: c.start.clone(), end: c.end.clone(), shift, symbol: c.path.start });
            }
        }
        Self::from_cells(st.level, length, cells)
    }

    pub fn from_cells(depth: usize, length: S, mut cells: Vec<IetCell<S>>) -> Self {
        cells.sort_by(|a, b| a.start.partial_cmp(&b.start).expect("comparable"));
        IetApprox { depth, length, cells }
    }

    pub fn breakpoints(&self) -> Vec<S> {
        let mut b: Vec<S> = self.cells.iter().map(|c| c.start.clone()).collect();
        b.push(self.length.clone());
        b
    }

    pub fn domain_gaps(&self) -> Vec<(S, S)> {
        self.cells.iter().filter(|c| c.shift.is_none()).map(|c| (c.start.clone(), c.end.clone())).collect()
    }

    /// Index of the cell containing `x`.
    pub fn locate(&self, x: &S) -> Option<usize> {
        let i = self.cells.partition_point(|c| c.start <= *x);
        (i > 0 && *x < self.cells[i - 1].end).then(|| i - 1)
    }

    /// `T_k(x)`, or `None` on a gap or outside `[0, length)`.
    pub fn apply(&self, x: &S) -> Option<S> {
        let c = &self.cells[self.locate(x)?];
        c.shift.as_ref().map(|s| x.clone() + s.clone())
    }

    pub fn scaled(&self, c: &S) -> Self {
        IetApprox {
            depth: self.depth,
            length: self.length.clone() * c.clone(),
            cells: self
                .cells
                .iter()
                .map(|x| IetCell {
                    start: x.start.clone() * c.clone(),
                    end: x.end.clone() * c.clone(),
                    shift: x.shift.clone().map(|s| s * c.clone()),
                    symbol: x.symbol,
                })
                .collect(),
        }
    }

    /// Merge neighbouring cells of one symbol that translate by the same
    /// amount (or are both gaps). Two maps agree iff their canonical forms do.
    pub fn canonical(&self, tol: f64) -> Self {
        let close = |a: &S, b: &S| (a.clone() - b.clone()).abs().to_f64() <= tol;
        let mut out: Vec<IetCell<S>> = vec![];
        for c in &self.cells {
            if let Some(last) = out.last_mut() {
                let same = match (&last.shift, &c.shift) {
                    (None, None) => true,
                    (Some(a), Some(b)) => close(a, b),
                    _ => false,
                };
                if same && last.symbol == c.symbol && close(&last.end, &c.start) {
                    last.end = c.end.clone();
                    continue;
                }
            }
            out.push(c.clone());
        }
        IetApprox { depth: self.depth, length: self.length.clone(), cells: out }
    }

    /// Largest difference in cell data between two canonical maps; infinite
    /// when the cell structure differs.
    pub fn deviation(&self, other: &Self) -> f64 {
        if self.cells.len() != other.cells.len() {
            return f64::INFINITY;
        }
        let d = |a: &S, b: &S| (a.clone() - b.clone()).abs().to_f64();
        let mut worst = d(&self.length, &other.length);
        for (a, b) in self.cells.iter().zip(&other.cells) {
            if a.symbol != b.symbol {
                return f64::INFINITY;
            }
            worst = worst.max(d(&a.start, &b.start)).max(d(&a.end, &b.end));
            match (&a.shift, &b.shift) {
                (None, None) => {}
                (Some(x), Some(y)) => worst = worst.max(d(x, y)),
                _ => return f64::INFINITY,
            }
        }
        worst
    }

    pub fn to_f64(&self) -> IetApprox<f64> {
        IetApprox {
            depth: self.depth,
            length: self.length.to_f64(),
            cells: self
                .cells
                .iter()
                .map(|c| IetCell { start: c.start.to_f64(), end: c.end.to_f64(), shift: c.shift.as_ref().map(S::to_f64), symbol: c.symbol })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "depth": self.depth,
            "length": self.length.to_json(),
            "cells": self.cells.iter().map(|c| json!({
                "start": c.start.to_json(),
                "end": c.end.to_json(),
                "shift": c.shift.as_ref().map_or(Value::Null, S::to_json),
                "symbol": c.symbol,
            })).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let num = |v: Option<&Value>, what: &str| -> Result<S> {
            S::from_json(v.ok_or_else(|| Error::Json(format!("missing {what}")))?).map_err(Error::Json)
        };
        let cells = v
            .get("cells")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Json("missing cells".into()))?
            .iter()
            .map(|c| {
                Ok(IetCell {
                    start: num(c.get("start"), "start")?,
                    end: num(c.get("end"), "end")?,
                    shift: match c.get("shift") {
                        None | Some(Value::Null) => None,
                        s => Some(num(s, "shift")?),
                    },
                    symbol: c.get("symbol").and_then(Value::as_u64).ok_or_else(|| Error::Json("missing symbol".into()))? as usize,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let depth = v.get("depth").and_then(Value::as_u64).unwrap_or(0) as usize;
        Ok(Self::from_cells(depth, num(v.get("length"), "length")?, cells))
    }
}

pub fn iet_at_depth<S: Scalar>(side: &OrderedSide, w: &WeightFunction<S>, k: usize) -> Result<IetApprox<S>> {
    let st = build_stacks(side, w, k)?;
    Ok(IetApprox::from_stacks(&st, S::sum_of(&w.levels[0])))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CodedOrbit {
    /// Level-0 symbols of `x, T x, …`.
    pub symbols: Vec<usize>,
    /// Set when the orbit reached a gap (or left the domain) before `steps`.
    pub gap_at: Option<usize>,
}

/// The itinerary of `x` over the level-0 intervals for up to `steps` steps.
pub fn code_orbit<S: Scalar>(t: &IetApprox<S>, x: &S, steps: usize) -> CodedOrbit {
    let mut symbols = vec![];
    let mut x = x.clone();
    for n in 0..=steps {
        let Some(i) = t.locate(&x) else {
            return CodedOrbit { symbols, gap_at: Some(n) };
        };
        let c = &t.cells[i];
        symbols.push(c.symbol);
        if n == steps {
            break;
        }
        match &c.shift {
            Some(s) => x = x + s.clone(),
            None => return CodedOrbit { symbols, gap_at: Some(n) },
        }
    }
    CodedOrbit { symbols, gap_at: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::BiInfiniteDiagram;
    use crate::matrix::TransitionMatrix;
    use crate::orders::EdgeOrders;
    use crate::paths::{orbit, Extension, TruncatedPath};
    use crate::scalar::Q;
    use crate::source::Side;
    use crate::weights::{pf_weights, pf_weights_exact};

    fn fib_side(depth: usize) -> (OrderedSide, WeightFunction<f64>) {
        let d = BiInfiniteDiagram::stationary(TransitionMatrix::lit(&[[1, 1], [1, 0]]));
        let side = OrderedSide::new(&d, &EdgeOrders::policy_only(), Side::Positive, depth).unwrap();
        (side, pf_weights(&d, Side::Positive, depth).unwrap().0)
    }

    #[test]
    fn fibonacci_first_stage() {
        let (side, w) = fib_side(3);
        let st = build_stacks(&side, &w, 0).unwrap();
        assert_eq!(st.heights(), vec![1, 1]);
        let st = build_stacks(&side, &w, 1).unwrap();
        assert_eq!(st.heights(), vec![2, 1]);
        // v1 stack: left cut of v1 under v2; v2 stack: right cut of v1.
        let s1 = &st.stacks[0];
        assert_eq!((s1[0].path.start, s1[1].path.start), (0, 1));
        assert_eq!(s1[0].start, 0.0);
        assert!((s1[1].start - w.levels[0][0]).abs() < 1e-15);
        assert!((st.stacks[1][0].start - w.levels[1][0]).abs() < 1e-15);
        for k in 0..=3 {
            assert!(build_stacks(&side, &w, k).unwrap().partition_defect(&1.0) < 1e-14);
        }
    }

    #[test]
    fn chacon_stacks_exact() {
        let d = BiInfiniteDiagram::stationary(TransitionMatrix::mpn(3, 1));
        let side = OrderedSide::new(&d, &EdgeOrders::policy_only(), Side::Positive, 4).unwrap();
        let (w, _) = pf_weights_exact(&d, Side::Positive, 4).unwrap().unwrap();
        assert_eq!(build_stacks(&side, &w, 1).unwrap().heights(), vec![4, 1]);
        for k in 0..=4 {
            assert_eq!(build_stacks(&side, &w, k).unwrap().partition_defect(&Q::from_int(1)), 0.0);
        }
    }

    #[test]
    fn extension_property() {
        let (side, w) = fib_side(8);
        let t0 = iet_at_depth(&side, &w, 0).unwrap();
        assert!(t0.cells.iter().all(|c| c.shift.is_none()));
        let mut prev = t0;
        for k in 1..=8 {
            let t = iet_at_depth(&side, &w, k).unwrap();
            for i in 0..500 {
                let x = (i as f64 + 0.5) / 500.0;
                if let Some(y) = prev.apply(&x) {
                    assert!((t.apply(&x).unwrap() - y).abs() < 1e-13);
                }
            }
            prev = t;
        }
        let top = prev.domain_gaps()[0].clone();
        assert_eq!(prev.apply(&((top.0 + top.1) / 2.0)), None);
    }

    #[test]
    fn coding_matches_vershik_orbit() {
        let (side, w) = fib_side(12);
        let t = iet_at_depth(&side, &w, 12).unwrap();
        let p = side.min_path(12, 0);
        let st = build_stacks(&side, &w, 12).unwrap();
        let x = (st.stacks[0][0].start + st.stacks[0][0].end) / 2.0;
        let steps = st.stacks[0].len() - 1;
        let coded = code_orbit(&t, &x, steps);
        let vo = orbit(&side, &TruncatedPath::free(p), steps as i64, 12, &Extension::default());
        assert_eq!(coded.gap_at, None);
        assert_eq!(coded.symbols, vo.itinerary);
        assert_eq!(code_orbit(&t, &x, steps + 1).gap_at, Some(steps));
        assert_eq!(code_orbit(&t, &x, 0).symbols, vec![0]);
    }

    #[test]
    fn canonical_and_json() {
        let (side, w) = fib_side(5);
        let t = iet_at_depth(&side, &w, 5).unwrap();
        let c = t.canonical(1e-12);
        assert!(c.cells.len() <= t.cells.len());
        assert_eq!(c.canonical(1e-12), c);
        let back = IetApprox::<f64>::from_json(&t.to_json()).unwrap();
        assert_eq!(back, t);
        assert_eq!(t.deviation(&back), 0.0);
    }
}
