//! Edge orders `≤_r` (on edges sharing a range) and `≤_s` (on edges sharing a
//! source), and the ordered path sets `S(v)`.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diagram::{edge_level_above, lower_vertex_level, BiInfiniteDiagram, OneSided};
use crate::error::{Error, Result};
use crate::matrix::TransitionMatrix;
use crate::source::Side;

/// An edge within one level: `source` and `range` are vertex indices on the
/// two adjacent levels, `copy` picks among parallel edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeKey {
    pub source: usize,
    pub range: usize,
    pub copy: usize,
}

impl EdgeKey {
    fn flipped(self) -> EdgeKey {
        EdgeKey { source: self.range, range: self.source, copy: self.copy }
    }
}

/// Orders on one edge level: `incoming[v]` lists `r^{-1}(v)` from least to
/// greatest, `outgoing[u]` lists `s^{-1}(u)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelOrder {
    pub incoming: Vec<Vec<EdgeKey>>,
    pub outgoing: Vec<Vec<EdgeKey>>,
}

impl LevelOrder {
    /// Left-to-right reading: incoming by (source, copy), outgoing by (range, copy).
    pub fn default_for(m: &TransitionMatrix) -> Self {
        let incoming = (0..m.rows())
            .map(|r| {
                (0..m.cols())
                    .flat_map(|s| (0..m.get(r, s) as usize).map(move |c| EdgeKey { source: s, range: r, copy: c }))
                    .collect()
            })
            .collect();
        let outgoing = (0..m.cols())
            .map(|s| {
                (0..m.rows())
                    .flat_map(|r| (0..m.get(r, s) as usize).map(move |c| EdgeKey { source: s, range: r, copy: c }))
                    .collect()
            })
            .collect();
        LevelOrder { incoming, outgoing }
    }

    pub fn check(&self, m: &TransitionMatrix) -> Result<()> {
        let d = Self::default_for(m);
        if self.incoming.len() != d.incoming.len() || self.outgoing.len() != d.outgoing.len() {
            return Err(Error::Invalid("order has the wrong number of vertices".into()));
        }
        for (mine, reference) in self.incoming.iter().zip(&d.incoming).chain(self.outgoing.iter().zip(&d.outgoing)) {
            let mut a = mine.clone();
            a.sort();
            if &a != reference {
                return Err(Error::Invalid("order is not a permutation of the edges at a vertex".into()));
            }
        }
        Ok(())
    }

    /// The same orders seen from the other direction (source and range swapped).
    pub fn flipped(&self) -> Self {
        let flip = |lists: &Vec<Vec<EdgeKey>>| lists.iter().map(|l| l.iter().map(|e| e.flipped()).collect()).collect();
        LevelOrder { incoming: flip(&self.outgoing), outgoing: flip(&self.incoming) }
    }

    pub fn shuffled<R: Rng>(&self, rng: &mut R) -> Self {
        let mut o = self.clone();
        for l in o.incoming.iter_mut().chain(o.outgoing.iter_mut()) {
            l.shuffle(rng);
        }
        o
    }

    pub fn incoming_rank(&self, e: &EdgeKey) -> usize {
        self.incoming[e.range].iter().position(|x| x == e).expect("edge present in incoming order")
    }

    pub fn outgoing_rank(&self, e: &EdgeKey) -> usize {
        self.outgoing[e.source].iter().position(|x| x == e).expect("edge present in outgoing order")
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrderPolicy {
    #[default]
    #[serde(rename = "default-left-right")]
    DefaultLeftRight,
}

/// Orders for a bi-infinite diagram. Levels without an explicit entry follow
/// the policy, so stationary diagrams keep stationary orders.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EdgeOrders {
    pub policy: OrderPolicy,
    pub explicit: BTreeMap<i64, LevelOrder>,
}

impl EdgeOrders {
    pub fn policy_only() -> Self {
        EdgeOrders::default()
    }

    pub fn level(&self, diagram: &BiInfiniteDiagram, k: i64) -> Result<LevelOrder> {
        match self.explicit.get(&k) {
            Some(o) => Ok(o.clone()),
            None => Ok(LevelOrder::default_for(&diagram.matrix_at(k)?)),
        }
    }

    /// Re-index for the diagram shifted by `n`.
    pub fn shift(&self, n: usize) -> Self {
        let explicit = self
            .explicit
            .iter()
            .map(|(&k, o)| (edge_level_above(lower_vertex_level(k) - n as i64), o.clone()))
            .collect();
        EdgeOrders { policy: self.policy, explicit }
    }

    /// One-sided orders for `side` through `depth`, matching `diagram.one_sided`.
    pub fn one_sided(&self, diagram: &BiInfiniteDiagram, side: Side, depth: usize) -> Result<Vec<LevelOrder>> {
        (1..=depth)
            .map(|i| {
                let o = self.level(diagram, side.sign() * i as i64)?;
                Ok(match side {
                    Side::Positive => o,
                    Side::Negative => o.flipped(),
                })
            })
            .collect()
    }

    pub fn check(&self, diagram: &BiInfiniteDiagram) -> Result<()> {
        for (&k, o) in &self.explicit {
            o.check(&diagram.matrix_at(k)?)?;
        }
        Ok(())
    }

    /// Independent uniformly shuffled orders on levels `±1..±depth`.
    pub fn random<R: Rng>(diagram: &BiInfiniteDiagram, depth: usize, rng: &mut R) -> Result<Self> {
        let mut explicit = BTreeMap::new();
        for i in 1..=depth as i64 {
            for k in [i, -i] {
                explicit.insert(k, LevelOrder::default_for(&diagram.matrix_at(k)?).shuffled(rng));
            }
        }
        Ok(EdgeOrders { policy: OrderPolicy::DefaultLeftRight, explicit })
    }

    pub fn to_json(&self, diagram: &BiInfiniteDiagram) -> Result<OrdersJson> {
        let mut levels = vec![];
        for (&k, o) in &self.explicit {
            let d = LevelOrder::default_for(&diagram.matrix_at(k)?);
            let perm = |mine: &Vec<Vec<EdgeKey>>, reference: &Vec<Vec<EdgeKey>>| -> Vec<Vec<usize>> {
                mine.iter()
                    .zip(reference)
                    .map(|(l, r)| l.iter().map(|e| r.iter().position(|x| x == e).expect("valid order")).collect())
                    .collect()
            };
            levels.push(LevelOrderJson { k, incoming: perm(&o.incoming, &d.incoming), outgoing: perm(&o.outgoing, &d.outgoing) });
        }
        Ok(OrdersJson { policy: self.policy, levels })
    }

    pub fn from_json(j: &OrdersJson, diagram: &BiInfiniteDiagram) -> Result<Self> {
        let mut explicit = BTreeMap::new();
        for l in &j.levels {
            if l.k == 0 {
                return Err(Error::Invalid("there is no edge level 0".into()));
            }
            let d = LevelOrder::default_for(&diagram.matrix_at(l.k)?);
            let apply = |perms: &Vec<Vec<usize>>, reference: &Vec<Vec<EdgeKey>>| -> Result<Vec<Vec<EdgeKey>>> {
                if perms.len() != reference.len() {
                    return Err(Error::Invalid(format!("level {}: wrong number of vertices in order", l.k)));
                }
                perms
                    .iter()
                    .zip(reference)
                    .map(|(p, r)| {
                        p.iter()
                            .map(|&i| r.get(i).copied().ok_or_else(|| Error::Invalid(format!("level {}: index {i} out of range", l.k))))
                            .collect()
                    })
                    .collect()
            };
            let o = LevelOrder { incoming: apply(&l.incoming, &d.incoming)?, outgoing: apply(&l.outgoing, &d.outgoing)? };
            o.check(&diagram.matrix_at(l.k)?)?;
            explicit.insert(l.k, o);
        }
        Ok(EdgeOrders { policy: j.policy, explicit })
    }
}

/// Default orders materialized on levels `±1..±depth`.
pub fn default_orders(diagram: &BiInfiniteDiagram, depth: usize) -> Result<EdgeOrders> {
    let mut explicit = BTreeMap::new();
    for i in 1..=depth as i64 {
        for k in [i, -i] {
            explicit.insert(k, LevelOrder::default_for(&diagram.matrix_at(k)?));
        }
    }
    Ok(EdgeOrders { policy: OrderPolicy::DefaultLeftRight, explicit })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelOrderJson {
    pub k: i64,
    pub incoming: Vec<Vec<usize>>,
    pub outgoing: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrdersJson {
    #[serde(default)]
    pub policy: OrderPolicy,
    #[serde(default)]
    pub levels: Vec<LevelOrderJson>,
}

/// A path `e_1..e_k` from `start ∈ V_0`; `edges[i]` lies on level `i+1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FinitePath {
    pub start: usize,
    pub edges: Vec<EdgeKey>,
}

impl FinitePath {
    pub fn depth(&self) -> usize {
        self.edges.len()
    }

    pub fn end(&self) -> usize {
        self.edges.last().map_or(self.start, |e| e.range)
    }
}

/// A finite one-sided diagram with its orders.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderedSide {
    pub diagram: OneSided,
    pub orders: Vec<LevelOrder>,
}

impl OrderedSide {
    pub fn new(diagram: &BiInfiniteDiagram, orders: &EdgeOrders, side: Side, depth: usize) -> Result<Self> {
        let one = diagram.one_sided(side, depth)?;
        let orders = orders.one_sided(diagram, side, depth)?;
        for (o, m) in orders.iter().zip(&one.matrices) {
            o.check(m)?;
        }
        Ok(OrderedSide { diagram: one, orders })
    }

    pub fn depth(&self) -> usize {
        self.diagram.depth()
    }

    pub fn incoming(&self, k: usize, v: usize) -> &[EdgeKey] {
        &self.orders[k - 1].incoming[v]
    }

    pub fn outgoing(&self, k: usize, u: usize) -> &[EdgeKey] {
        &self.orders[k - 1].outgoing[u]
    }

    pub fn check_path(&self, p: &FinitePath) -> Result<()> {
        if p.start >= self.diagram.sizes[0] {
            return Err(Error::Invalid("start vertex out of range".into()));
        }
        let mut at = p.start;
        for (i, e) in p.edges.iter().enumerate() {
            let k = i + 1;
            if k > self.depth() {
                return Err(Error::Invalid("path deeper than the available levels".into()));
            }
            if e.source != at || !self.incoming(k, e.range).contains(e) {
                return Err(Error::Invalid(format!("edge {e:?} does not continue the path at level {k}")));
            }
            at = e.range;
        }
        Ok(())
    }

    /// The least path into `v ∈ level k`.
    pub fn min_path(&self, k: usize, v: usize) -> FinitePath {
        self.extreme_path(k, v, true)
    }

    pub fn max_path(&self, k: usize, v: usize) -> FinitePath {
        self.extreme_path(k, v, false)
    }

    fn extreme_path(&self, k: usize, v: usize, least: bool) -> FinitePath {
        let mut edges = vec![EdgeKey { source: 0, range: 0, copy: 0 }; k];
        let mut at = v;
        for j in (1..=k).rev() {
            let inc = self.incoming(j, at);
            let e = if least { inc[0] } else { inc[inc.len() - 1] };
            edges[j - 1] = e;
            at = e.source;
        }
        FinitePath { start: at, edges }
    }

    /// `S(v)` for `v` on level `k`, in increasing order (compare at the
    /// deepest level where two paths differ).
    pub fn enumerate_s(&self, k: usize, v: usize) -> Vec<FinitePath> {
        if k == 0 {
            return vec![FinitePath { start: v, edges: vec![] }];
        }
        let mut out = vec![];
        for e in self.incoming(k, v) {
            for mut p in self.enumerate_s(k - 1, e.source) {
                p.edges.push(*e);
                out.push(p);
            }
        }
        out
    }

    pub fn is_maximal(&self, p: &FinitePath) -> bool {
        p.edges.iter().enumerate().all(|(i, e)| self.incoming(i + 1, e.range).last() == Some(e))
    }

    pub fn is_minimal(&self, p: &FinitePath) -> bool {
        p.edges.iter().enumerate().all(|(i, e)| self.incoming(i + 1, e.range).first() == Some(e))
    }

    /// Compare two paths ending at the same vertex under the induced order.
    pub fn cmp_paths(&self, p: &FinitePath, q: &FinitePath) -> std::cmp::Ordering {
        for i in (0..p.edges.len().min(q.edges.len())).rev() {
            if p.edges[i] != q.edges[i] {
                let o = &self.orders[i];
                return o.incoming_rank(&p.edges[i]).cmp(&o.incoming_rank(&q.edges[i]));
            }
        }
        std::cmp::Ordering::Equal
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;

    fn side(m: TransitionMatrix, depth: usize) -> OrderedSide {
        let d = BiInfiniteDiagram::stationary(m);
        OrderedSide::new(&d, &EdgeOrders::policy_only(), Side::Positive, depth).unwrap()
    }

    #[test]
    fn default_orders_fibonacci_and_chacon() {
        let f = side(TransitionMatrix::lit(&[[1, 1], [1, 0]]), 3);
        let inc = f.incoming(1, 0);
        assert_eq!(inc.iter().map(|e| e.source).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(f.incoming(1, 1).len(), 1);
        let c = side(TransitionMatrix::mpn(3, 1), 2);
        let inc = c.incoming(1, 0);
        assert_eq!(
            inc.iter().map(|e| (e.source, e.copy)).collect::<Vec<_>>(),
            vec![(0, 0), (0, 1), (0, 2), (1, 0)]
        );
    }

    #[test]
    fn enumerate_matches_counts_and_is_sorted() {
        let f = side(TransitionMatrix::lit(&[[1, 1], [1, 0]]), 5);
        assert_eq!(f.enumerate_s(1, 1).len(), 1);
        assert_eq!(f.enumerate_s(2, 0).len(), 3);
        for k in 1..=5 {
            let counts = f.diagram.path_counts(k);
            for v in 0..2 {
                let s = f.enumerate_s(k, v);
                assert_eq!(BigUint::from(s.len()), counts[v]);
                for w in s.windows(2) {
                    assert_eq!(f.cmp_paths(&w[0], &w[1]), std::cmp::Ordering::Less);
                }
                assert!(f.is_minimal(&s[0]) && f.is_maximal(s.last().unwrap()));
                assert_eq!(s.iter().filter(|p| f.is_maximal(p)).count(), 1);
                assert_eq!(s.iter().filter(|p| f.is_minimal(p)).count(), 1);
            }
        }
        let c = side(TransitionMatrix::mpn(3, 1), 1);
        assert_eq!(c.enumerate_s(1, 0).len(), 4);
    }

    #[test]
    fn extreme_paths() {
        let f = side(TransitionMatrix::lit(&[[1, 1], [1, 0]]), 3);
        let m = f.max_path(3, 0);
        assert!(f.is_maximal(&m));
        // last incoming edge at v1 comes from v2, whose only edge comes from v1
        assert_eq!(m.edges[2].source, 1);
        assert_eq!(m.edges[1].source, 0);
        let c = side(TransitionMatrix::mpn(3, 1), 4);
        let r = c.max_path(4, 1);
        assert!(c.is_maximal(&r) && c.is_minimal(&r));
    }

    #[test]
    fn shift_rekeys_levels() {
        let d = BiInfiniteDiagram::stationary(TransitionMatrix::mpn(3, 1));
        let o = default_orders(&d, 2).unwrap();
        let s = o.shift(1);
        assert!(s.explicit.contains_key(&-1) && s.explicit.contains_key(&-3) && s.explicit.contains_key(&1));
        assert!(!s.explicit.contains_key(&2));
    }

    #[test]
    fn json_round_trip() {
        use rand::SeedableRng;
        let d = BiInfiniteDiagram::stationary(TransitionMatrix::mpn(3, 1));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let o = EdgeOrders::random(&d, 3, &mut rng).unwrap();
        let j = o.to_json(&d).unwrap();
        let text = serde_json::to_string(&j).unwrap();
        let back = EdgeOrders::from_json(&serde_json::from_str(&text).unwrap(), &d).unwrap();
        assert_eq!(back, o);
        let p: OrdersJson = serde_json::from_str(r#"{"policy":"default-left-right"}"#).unwrap();
        assert!(EdgeOrders::from_json(&p, &d).unwrap().explicit.is_empty());
    }
}
