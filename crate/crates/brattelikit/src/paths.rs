//! Vershik successor and predecessor on truncated paths, orbits, and the
//! metamour function.

use serde::{Deserialize, Serialize};

use crate::components::PeriodicComponent;
use crate::diagram::BiInfiniteDiagram;
use crate::error::{Error, Result};
use crate::orders::{FinitePath, OrderedSide};

/// What is assumed about the part of an infinite path below the prefix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailTag {
    #[default]
    Free,
    MaxTail,
    MinTail,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncatedPath {
    pub prefix: FinitePath,
    pub tail: TailTag,
}

impl TruncatedPath {
    pub fn free(prefix: FinitePath) -> Self {
        TruncatedPath { prefix, tail: TailTag::Free }
    }

    pub fn symbol(&self) -> usize {
        self.prefix.start
    }
}

/// Optional extension of the map over maximal paths: a path that is maximal
/// and runs along a detected periodic chain goes to the minimal path of the
/// same tower.
#[derive(Clone, Debug, Default)]
pub struct Extension<'a> {
    pub periodic: &'a [PeriodicComponent],
}

impl Extension<'_> {
    fn chain_for(&self, p: &FinitePath) -> Option<&PeriodicComponent> {
        let k = p.depth();
        self.periodic.iter().find(|c| c.end_level >= k && c.start_level <= k && c.vertex_at(k) == Some(p.end()))
    }
}

fn budget_check(side: &OrderedSide, p: &TruncatedPath, budget: usize) -> Result<()> {
    if budget < p.prefix.depth() {
        return Err(Error::Invalid(format!("depth budget {budget} below prefix depth {}", p.prefix.depth())));
    }
    if p.prefix.depth() > side.depth() {
        return Err(Error::Invalid("prefix deeper than the ordered levels".into()));
    }
    Ok(())
}

pub fn successor(side: &OrderedSide, p: &TruncatedPath, budget: usize) -> Result<TruncatedPath> {
    successor_ext(side, p, budget, &Extension::default())
}

pub fn successor_ext(side: &OrderedSide, p: &TruncatedPath, budget: usize, ext: &Extension<'_>) -> Result<TruncatedPath> {
    budget_check(side, p, budget)?;
    let edges = &p.prefix.edges;
    let ell = edges.iter().enumerate().position(|(i, e)| side.incoming(i + 1, e.range).last() != Some(e));
    let Some(i) = ell else {
        if ext.chain_for(&p.prefix).is_some() {
            let m = side.min_path(p.prefix.depth(), p.prefix.end());
            return Ok(TruncatedPath { prefix: m, tail: p.tail });
        }
        return Err(match p.tail {
            TailTag::MaxTail => Error::MaximalPath,
            _ => Error::NeedsDepth { depth: p.prefix.depth() },
        });
    };
    let k = i + 1;
    let inc = side.incoming(k, edges[i].range);
    let r = inc.iter().position(|x| *x == edges[i]).expect("edge in order");
    let mut out = edges.clone();
    out[i] = inc[r + 1];
    let mut at = out[i].source;
    for j in (1..k).rev() {
        let e = side.incoming(j, at)[0];
        out[j - 1] = e;
        at = e.source;
    }
    Ok(TruncatedPath { prefix: FinitePath { start: at, edges: out }, tail: p.tail })
}

pub fn predecessor(side: &OrderedSide, p: &TruncatedPath, budget: usize) -> Result<TruncatedPath> {
    predecessor_ext(side, p, budget, &Extension::default())
}

pub fn predecessor_ext(side: &OrderedSide, p: &TruncatedPath, budget: usize, ext: &Extension<'_>) -> Result<TruncatedPath> {
    budget_check(side, p, budget)?;
    let edges = &p.prefix.edges;
    let ell = edges.iter().enumerate().position(|(i, e)| side.incoming(i + 1, e.range).first() != Some(e));
    let Some(i) = ell else {
        if ext.chain_for(&p.prefix).is_some() {
            let m = side.max_path(p.prefix.depth(), p.prefix.end());
            return Ok(TruncatedPath { prefix: m, tail: p.tail });
        }
        return Err(match p.tail {
            TailTag::MinTail => Error::MinimalPath,
            _ => Error::NeedsDepth { depth: p.prefix.depth() },
        });
    };
    let k = i + 1;
    let inc = side.incoming(k, edges[i].range);
    let r = inc.iter().position(|x| *x == edges[i]).expect("edge in order");
    let mut out = edges.clone();
    out[i] = inc[r - 1];
    let mut at = out[i].source;
    for j in (1..k).rev() {
        let l = side.incoming(j, at);
        let e = l[l.len() - 1];
        out[j - 1] = e;
        at = e.source;
    }
    Ok(TruncatedPath { prefix: FinitePath { start: at, edges: out }, tail: p.tail })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitStop {
    pub step: usize,
    pub error: String,
    pub kind: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Orbit {
    pub paths: Vec<TruncatedPath>,
    /// Level-0 symbol of every visited path, starting with the initial one.
    pub itinerary: Vec<usize>,
    pub stop: Option<OrbitStop>,
}

/// Iterate the successor (`steps > 0`) or predecessor (`steps < 0`). Stops at
/// the first error and records the step that failed.
pub fn orbit(side: &OrderedSide, p: &TruncatedPath, steps: i64, budget: usize, ext: &Extension<'_>) -> Orbit {
    let mut paths = vec![p.clone()];
    let mut itinerary = vec![p.symbol()];
    let mut stop = None;
    let mut cur = p.clone();
    for step in 1..=steps.unsigned_abs() as usize {
        let next = if steps > 0 { successor_ext(side, &cur, budget, ext) } else { predecessor_ext(side, &cur, budget, ext) };
        match next {
            Ok(n) => {
                itinerary.push(n.symbol());
                paths.push(n.clone());
                cur = n;
            }
            Err(e) => {
                stop = Some(OrbitStop { step, error: e.to_string(), kind: e.kind().into() });
                break;
            }
        }
    }
    Orbit { paths, itinerary, stop }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value")]
pub enum Metamour {
    Finite(usize),
    Unknown(usize),
}

impl Metamour {
    pub fn finite(self) -> Option<usize> {
        match self {
            Metamour::Finite(m) => Some(m),
            Metamour::Unknown(_) => None,
        }
    }
}

/// Smallest `m ≤ cap` such that the forward reach sets of `v` and `w` (from
/// vertex level `k`) meet on level `k + m`.
pub fn metamour(diagram: &BiInfiniteDiagram, k: i64, v: usize, w: usize, cap: usize) -> Result<Metamour> {
    let n = diagram.level_size(k)?;
    if v >= n || w >= n {
        return Err(Error::Invalid(format!("vertex index out of range for level {k}")));
    }
    let mut a = vec![false; n];
    let mut b = vec![false; n];
    a[v] = true;
    b[w] = true;
    for m in 0..=cap {
        if a.iter().zip(&b).any(|(x, y)| *x && *y) {
            return Ok(Metamour::Finite(m));
        }
        if m == cap {
            break;
        }
        let f = diagram.forward(k + m as i64)?;
        a = reach(&f, &a);
        b = reach(&f, &b);
    }
    Ok(Metamour::Unknown(cap))
}

fn reach(f: &crate::matrix::TransitionMatrix, from: &[bool]) -> Vec<bool> {
    (0..f.rows()).map(|r| (0..f.cols()).any(|c| from[c] && f.get(r, c) > 0)).collect()
}

/// `Δ⁺(k)`: the largest metamour value over pairs of level-`k` vertices.
pub fn metamour_plus(diagram: &BiInfiniteDiagram, k: i64, cap: usize) -> Result<Metamour> {
    let n = diagram.level_size(k)?;
    let mut best = 0;
    for v in 0..n {
        for w in v + 1..n {
            match metamour(diagram, k, v, w, cap)? {
                Metamour::Finite(m) => best = best.max(m),
                u => return Ok(u),
            }
        }
    }
    Ok(Metamour::Finite(best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::TransitionMatrix;
    use crate::orders::EdgeOrders;
    use crate::source::Side;

    fn side(m: TransitionMatrix, depth: usize) -> OrderedSide {
        OrderedSide::new(&BiInfiniteDiagram::stationary(m), &EdgeOrders::policy_only(), Side::Positive, depth).unwrap()
    }

    fn fib() -> TransitionMatrix {
        TransitionMatrix::lit(&[[1, 1], [1, 0]])
    }

    #[test]
    fn successor_tours_each_tower() {
        let s = side(fib(), 4);
        for v in 0..2 {
            let all = s.enumerate_s(4, v);
            let mut p = TruncatedPath::free(all[0].clone());
            for q in &all[1..] {
                p = successor(&s, &p, 4).unwrap();
                assert_eq!(&p.prefix, q);
                let back = predecessor(&s, &p, 4).unwrap();
                assert_eq!(successor(&s, &back, 4).unwrap(), p);
            }
            assert_eq!(successor(&s, &p, 4), Err(Error::NeedsDepth { depth: 4 }));
            let mut m = TruncatedPath { prefix: p.prefix.clone(), tail: TailTag::MaxTail };
            assert_eq!(successor(&s, &m, 4), Err(Error::MaximalPath));
            for _ in 1..all.len() {
                m = predecessor(&s, &m, 4).unwrap();
            }
            assert_eq!(m.prefix, all[0]);
        }
    }

    #[test]
    fn first_edge_advances_alone() {
        let s = side(TransitionMatrix::mpn(3, 1), 3);
        let p = TruncatedPath::free(s.min_path(3, 0));
        let q = successor(&s, &p, 3).unwrap();
        assert_eq!(q.prefix.edges[1..], p.prefix.edges[1..]);
        assert_ne!(q.prefix.edges[0], p.prefix.edges[0]);
    }

    #[test]
    fn orbit_of_depth_three_cylinders() {
        let s = side(fib(), 3);
        let start = TruncatedPath::free(s.min_path(3, 0));
        let counts = s.diagram.path_counts(3);
        let n = counts[0].clone();
        let n: usize = n.try_into().unwrap();
        let o = orbit(&s, &start, n as i64, 3, &Extension::default());
        assert_eq!(o.paths.len(), n);
        assert_eq!(o.stop.as_ref().unwrap().step, n);
        assert_eq!(o.stop.as_ref().unwrap().kind, "NeedsDepth");
        assert_eq!(orbit(&s, &start, 0, 3, &Extension::default()).paths, vec![start]);
    }

    #[test]
    fn periodic_extension_fixes_chacon_path() {
        let d = BiInfiniteDiagram::stationary(TransitionMatrix::mpn(3, 1));
        let comps = crate::components::periodic_component_scan(&d, 5).unwrap();
        let s = OrderedSide::new(&d, &EdgeOrders::policy_only(), Side::Positive, 5).unwrap();
        let p = TruncatedPath { prefix: s.max_path(5, 1), tail: TailTag::MaxTail };
        assert_eq!(successor(&s, &p, 5), Err(Error::MaximalPath));
        let ext = Extension { periodic: &comps };
        let o = orbit(&s, &p, 5, 5, &ext);
        assert!(o.stop.is_none());
        assert!(o.paths.iter().all(|q| *q == p));
    }

    #[test]
    fn metamour_examples() {
        let f = BiInfiniteDiagram::stationary(fib());
        assert_eq!(metamour(&f, 0, 1, 1, 5).unwrap(), Metamour::Finite(0));
        assert_eq!(metamour(&f, 0, 0, 1, 5).unwrap(), Metamour::Finite(1));
        assert_eq!(metamour_plus(&f, 0, 5).unwrap(), Metamour::Finite(1));
        assert_eq!(metamour_plus(&f, -3, 5).unwrap(), Metamour::Finite(1));
        let c = BiInfiniteDiagram::stationary(TransitionMatrix::mpn(3, 1));
        assert_eq!(metamour(&c, 0, 0, 1, 5).unwrap(), Metamour::Finite(1));
        let blocks = BiInfiniteDiagram::stationary(TransitionMatrix::lit(&[[2, 0], [0, 2]]));
        for cap in [1, 5, 20] {
            assert_eq!(metamour_plus(&blocks, 0, cap).unwrap(), Metamour::Unknown(cap));
        }
        let one = BiInfiniteDiagram::stationary(TransitionMatrix::lit(&[[2]]));
        assert_eq!(metamour_plus(&one, 4, 3).unwrap(), Metamour::Finite(0));
    }
}
