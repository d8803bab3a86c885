//! Lazy, finitely described matrix sequences for one side of a diagram.
//!
//! Positions are 1-based along the side: position `i` is `F_i` on the positive
//! side and the stored `𝓕_{-i}` on the negative side.

use num_bigint::BigUint;
use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::TransitionMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Side {
    Positive,
    Negative,
}

impl Side {
    pub fn sign(self) -> i64 {
        match self {
            Side::Positive => 1,
            Side::Negative => -1,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TailPolicy {
    /// Identity matrices forever after the window.
    #[default]
    Identity,
    /// Cycle through the window again.
    Repeat,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum CutSpec {
    /// Blocks end at these levels; levels past the last cut stay single.
    Levels(Vec<usize>),
    /// Blocks of a fixed length.
    Every(usize),
}

impl CutSpec {
    /// Inner level range `(a, b]` covered by telescoped position `i`.
    pub fn block(&self, i: usize) -> (usize, usize) {
        match self {
            CutSpec::Every(n) => ((i - 1) * n, i * n),
            CutSpec::Levels(cuts) => {
                let m = cuts.len();
                if i <= m {
                    (if i == 1 { 0 } else { cuts[i - 2] }, cuts[i - 1])
                } else {
                    let last = cuts.last().copied().unwrap_or(0);
                    (last + (i - m - 1), last + (i - m))
                }
            }
        }
    }

    pub fn check(&self) -> Result<()> {
        match self {
            CutSpec::Every(0) => Err(Error::BadParams("block length must be positive".into())),
            CutSpec::Every(_) => Ok(()),
            CutSpec::Levels(c) => {
                if c.first() == Some(&0) || c.windows(2).any(|w| w[0] >= w[1]) {
                    Err(Error::BadParams("cut levels must be strictly increasing and start at 1 or above".into()))
                } else {
                    Ok(())
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum MatrixSource {
    Stationary {
        period: Vec<TransitionMatrix>,
    },
    EventuallyPeriodic {
        head: Vec<TransitionMatrix>,
        period: Vec<TransitionMatrix>,
    },
    #[serde(rename_all = "camelCase")]
    ExplicitWindow {
        matrices: Vec<TransitionMatrix>,
        #[serde(default)]
        tail_policy: TailPolicy,
    },
    #[serde(rename_all = "camelCase")]
    Programmatic {
        rule_id: String,
        #[serde(default)]
        params: serde_json::Value,
    },
    Prefixed {
        head: Vec<TransitionMatrix>,
        rest: Box<MatrixSource>,
    },
    Skipped {
        skip: usize,
        inner: Box<MatrixSource>,
    },
    Telescoped {
        cuts: CutSpec,
        inner: Box<MatrixSource>,
    },
}

fn level_label(i: usize, side: Side) -> i64 {
    side.sign() * i as i64
}

fn pick(list: &[TransitionMatrix], idx: usize) -> Result<TransitionMatrix> {
    if list.is_empty() {
        return Err(Error::Invalid("empty matrix list".into()));
    }
    Ok(list[idx % list.len()].clone())
}

fn rotate(list: &[TransitionMatrix], by: usize) -> Vec<TransitionMatrix> {
    let mut v = list.to_vec();
    if !v.is_empty() {
        let n = v.len();
        v.rotate_left(by % n);
    }
    v
}

fn outer_size(m: &TransitionMatrix, side: Side) -> usize {
    match side {
        Side::Positive => m.rows(),
        Side::Negative => m.cols(),
    }
}

impl MatrixSource {
    pub fn stationary(m: TransitionMatrix) -> Self {
        MatrixSource::Stationary { period: vec![m] }
    }

    pub fn window(matrices: Vec<TransitionMatrix>) -> Self {
        MatrixSource::ExplicitWindow { matrices, tail_policy: TailPolicy::Identity }
    }

    pub fn rule(rule_id: &str, params: serde_json::Value) -> Self {
        MatrixSource::Programmatic { rule_id: rule_id.to_string(), params }
    }

    /// Matrix at 1-based position `i` on `side`.
    pub fn matrix(&self, i: usize, side: Side) -> Result<TransitionMatrix> {
        assert!(i >= 1, "positions are 1-based");
        match self {
            MatrixSource::Stationary { period } => pick(period, i - 1),
            MatrixSource::EventuallyPeriodic { head, period } => {
                if i <= head.len() {
                    Ok(head[i - 1].clone())
                } else {
                    pick(period, i - 1 - head.len())
                }
            }
            MatrixSource::ExplicitWindow { matrices, tail_policy } => {
                if i <= matrices.len() {
                    return Ok(matrices[i - 1].clone());
                }
                match tail_policy {
                    TailPolicy::Identity => {
                        let last = matrices
                            .last()
                            .ok_or_else(|| Error::Invalid("identity tail after an empty window".into()))?;
                        Ok(TransitionMatrix::identity(outer_size(last, side)))
                    }
                    TailPolicy::Repeat => pick(matrices, i - 1),
                    TailPolicy::Fail => Err(Error::TailPolicyFail { level: level_label(i, side) }),
                }
            }
            MatrixSource::Programmatic { rule_id, params } => {
                Rule::parse(rule_id, params)?.matrix(i).map_err(|e| match e {
                    Error::EntryOverflow { .. } => Error::EntryOverflow { level: level_label(i, side) },
                    other => other,
                })
            }
            MatrixSource::Prefixed { head, rest } => {
                if i <= head.len() {
                    Ok(head[i - 1].clone())
                } else {
                    rest.matrix(i - head.len(), side)
                }
            }
            MatrixSource::Skipped { skip, inner } => inner.matrix(i + skip, side),
            MatrixSource::Telescoped { cuts, inner } => {
                let (a, b) = cuts.block(i);
                let mut acc = inner.matrix(a + 1, side)?;
                for j in a + 2..=b {
                    let m = inner.matrix(j, side)?;
                    acc = match side {
                        Side::Positive => m.checked_mul(&acc, level_label(i, side))?,
                        Side::Negative => acc.checked_mul(&m, level_label(i, side))?,
                    };
                }
                Ok(acc)
            }
        }
    }

    /// Drop the first `n` positions.
    pub fn skip(&self, n: usize, side: Side) -> Result<Self> {
        if n == 0 {
            return Ok(self.clone());
        }
        Ok(match self {
            MatrixSource::Stationary { period } => MatrixSource::Stationary { period: rotate(period, n) },
            MatrixSource::EventuallyPeriodic { head, period } => {
                if n < head.len() {
                    MatrixSource::EventuallyPeriodic { head: head[n..].to_vec(), period: period.clone() }
                } else {
                    MatrixSource::Stationary { period: rotate(period, n - head.len()) }
                }
            }
            MatrixSource::ExplicitWindow { matrices, tail_policy } => {
                if n < matrices.len() {
                    MatrixSource::ExplicitWindow { matrices: matrices[n..].to_vec(), tail_policy: *tail_policy }
                } else {
                    match tail_policy {
                        TailPolicy::Identity => MatrixSource::Stationary { period: vec![self.matrix(n + 1, side)?] },
                        TailPolicy::Repeat => MatrixSource::Stationary { period: rotate(matrices, n) },
                        TailPolicy::Fail => {
                            MatrixSource::ExplicitWindow { matrices: vec![], tail_policy: TailPolicy::Fail }
                        }
                    }
                }
            }
            MatrixSource::Prefixed { head, rest } => {
                if n < head.len() {
                    MatrixSource::Prefixed { head: head[n..].to_vec(), rest: rest.clone() }
                } else {
                    rest.skip(n - head.len(), side)?
                }
            }
            MatrixSource::Skipped { skip, inner } => MatrixSource::Skipped { skip: skip + n, inner: inner.clone() },
            _ => MatrixSource::Skipped { skip: n, inner: Box::new(self.clone()) },
        })
    }

    /// Put `head` in front of the sequence.
    pub fn prefix(&self, head: Vec<TransitionMatrix>) -> Self {
        if head.is_empty() {
            return self.clone();
        }
        match self {
            MatrixSource::Stationary { period } => {
                MatrixSource::EventuallyPeriodic { head, period: period.clone() }
            }
            MatrixSource::EventuallyPeriodic { head: h, period } => {
                MatrixSource::EventuallyPeriodic { head: [head, h.clone()].concat(), period: period.clone() }
            }
            MatrixSource::ExplicitWindow { matrices, tail_policy }
                if *tail_policy != TailPolicy::Repeat && !matrices.is_empty() =>
            {
                MatrixSource::ExplicitWindow { matrices: [head, matrices.clone()].concat(), tail_policy: *tail_policy }
            }
            MatrixSource::Prefixed { head: h, rest } => {
                MatrixSource::Prefixed { head: [head, h.clone()].concat(), rest: rest.clone() }
            }
            _ => MatrixSource::Prefixed { head, rest: Box::new(self.clone()) },
        }
    }

    pub fn telescope(&self, cuts: CutSpec, side: Side) -> Result<Self> {
        cuts.check()?;
        if let (CutSpec::Every(n), Some((0, p))) = (&cuts, self.period_structure()) {
            // A stationary source telescopes to a stationary source.
            let blocks = (p.lcm(n)) / n;
            let t = MatrixSource::Telescoped { cuts: cuts.clone(), inner: Box::new(self.clone()) };
            let period = (1..=blocks).map(|i| t.matrix(i, side)).collect::<Result<Vec<_>>>()?;
            return Ok(MatrixSource::Stationary { period });
        }
        Ok(MatrixSource::Telescoped { cuts, inner: Box::new(self.clone()) })
    }

    /// `(head, period)` when the sequence is eventually periodic by construction.
    pub fn period_structure(&self) -> Option<(usize, usize)> {
        match self {
            MatrixSource::Stationary { period } => (!period.is_empty()).then_some((0, period.len())),
            MatrixSource::EventuallyPeriodic { head, period } => {
                (!period.is_empty()).then_some((head.len(), period.len()))
            }
            MatrixSource::ExplicitWindow { matrices, tail_policy } => match tail_policy {
                TailPolicy::Identity => (!matrices.is_empty()).then_some((matrices.len(), 1)),
                TailPolicy::Repeat => (!matrices.is_empty()).then_some((0, matrices.len())),
                TailPolicy::Fail => None,
            },
            MatrixSource::Programmatic { .. } => None,
            MatrixSource::Prefixed { head, rest } => rest.period_structure().map(|(h, p)| (h + head.len(), p)),
            MatrixSource::Skipped { skip, inner } => inner.period_structure().map(|(h, p)| (h.saturating_sub(*skip), p)),
            MatrixSource::Telescoped { cuts, inner } => {
                let (h, p) = inner.period_structure()?;
                match cuts {
                    CutSpec::Every(n) => Some((h.div_ceil(*n), p.lcm(n) / n)),
                    CutSpec::Levels(c) => {
                        let last = c.last().copied().unwrap_or(0);
                        Some((c.len() + h.saturating_sub(last), p))
                    }
                }
            }
        }
    }

    /// A candidate recurrence subsequence supplied by a programmatic rule.
    pub fn recurrence_hint(&self, up_to: usize) -> Option<Vec<usize>> {
        match self {
            MatrixSource::Programmatic { rule_id, params } => Rule::parse(rule_id, params).ok()?.recurrence_hint(up_to),
            MatrixSource::Skipped { skip, inner } => Some(
                inner
                    .recurrence_hint(up_to + skip)?
                    .into_iter()
                    .filter(|&k| k > *skip)
                    .map(|k| k - skip)
                    .collect(),
            ),
            MatrixSource::Prefixed { head, rest } => Some(
                rest.recurrence_hint(up_to.saturating_sub(head.len()))?
                    .into_iter()
                    .map(|k| k + head.len())
                    .collect(),
            ),
            _ => None,
        }
    }
}

/// How the off-diagonal entries of the `M(p, n)` family are chosen.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NRule {
    Constant(u64),
    /// `n_i = p^((i+1)^2 - 1)`.
    DivergentPower,
    /// Listed values, then 1.
    Explicit(Vec<u64>),
}

impl NRule {
    pub fn parse(v: &serde_json::Value) -> Result<Self> {
        match v {
            serde_json::Value::Null => Ok(NRule::Constant(1)),
            serde_json::Value::Number(n) => n
                .as_u64()
                .map(NRule::Constant)
                .ok_or_else(|| Error::BadParams(format!("nRule must be a positive integer, got {n}"))),
            serde_json::Value::Array(a) => a
                .iter()
                .map(|x| x.as_u64().ok_or_else(|| Error::BadParams("nRule entries must be integers".into())))
                .collect::<Result<Vec<_>>>()
                .map(NRule::Explicit),
            serde_json::Value::String(s) => {
                let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
                if t == "p^((i+1)^2-1)" {
                    Ok(NRule::DivergentPower)
                } else if let Some(n) = t.strip_prefix("const:") {
                    n.parse().map(NRule::Constant).map_err(|_| Error::BadParams(format!("bad nRule {s:?}")))
                } else {
                    t.parse().map(NRule::Constant).map_err(|_| Error::BadParams(format!("bad nRule {s:?}")))
                }
            }
            other => Err(Error::BadParams(format!("bad nRule {other}"))),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            NRule::Constant(n) => serde_json::json!(n),
            NRule::DivergentPower => serde_json::json!("p^((i+1)^2-1)"),
            NRule::Explicit(v) => serde_json::json!(v),
        }
    }

    /// Exact `n_i` for `i ≥ 1`.
    pub fn value(&self, p: u64, i: usize) -> BigUint {
        match self {
            NRule::Constant(n) => BigUint::from(*n),
            NRule::DivergentPower => BigUint::from(p).pow(((i + 1) * (i + 1) - 1) as u32),
            NRule::Explicit(v) => BigUint::from(v.get(i - 1).copied().unwrap_or(1)),
        }
    }
}

/// If `k = (i+1)^2 - 1` for some `i ≥ 1`, return `i`.
pub fn mpn_rule_index(k: usize) -> Option<usize> {
    let r = ((k + 1) as f64).sqrt().round() as usize;
    (r >= 2 && r * r == k + 1).then(|| r - 1)
}

/// Levels `2^m - 1` and `2^m` (m ≥ 1) carry a single vertex.
pub fn single_vertex_level(k: usize) -> bool {
    k >= 1 && ((k + 1).is_power_of_two() || k.is_power_of_two())
}

#[derive(Clone, Debug, PartialEq)]
pub enum Rule {
    Mpn { p: u64, n: NRule },
    SingleVertexOften,
    GrowingSizes { seed: u64 },
}

impl Rule {
    pub fn parse(rule_id: &str, params: &serde_json::Value) -> Result<Rule> {
        match rule_id {
            "mpn-family" => {
                let p = params
                    .get("p")
                    .and_then(|v| v.as_u64())
                    .ok_or_else(|| Error::BadParams("mpn-family needs an integer p".into()))?;
                if p < 2 {
                    return Err(Error::BadParams("mpn-family needs p >= 2".into()));
                }
                let n = NRule::parse(params.get("nRule").unwrap_or(&serde_json::Value::Null))?;
                Ok(Rule::Mpn { p, n })
            }
            "single-vertex-often" => Ok(Rule::SingleVertexOften),
            "growing-sizes" => Ok(Rule::GrowingSizes {
                seed: params.get("seed").and_then(|v| v.as_u64()).unwrap_or(0),
            }),
            other => Err(Error::UnknownRule(other.to_string())),
        }
    }

    pub fn matrix(&self, k: usize) -> Result<TransitionMatrix> {
        match self {
            Rule::Mpn { p, n } => match mpn_rule_index(k) {
                None => Ok(TransitionMatrix::mpn(*p, 1)),
                Some(i) => {
                    let v = n.value(*p, i);
                    let v: u64 = v.try_into().map_err(|_| Error::EntryOverflow { level: k as i64 })?;
                    Ok(TransitionMatrix::mpn(*p, v))
                }
            },
            Rule::SingleVertexOften => {
                let size = |j: usize| if single_vertex_level(j) { 1 } else { 2 };
                let m = match (size(k), size(k - 1)) {
                    (1, 1) => TransitionMatrix::lit(&[[2]]),
                    (1, _) => TransitionMatrix::lit(&[[1, 1]]),
                    (_, 1) => TransitionMatrix::lit(&[[1], [1]]),
                    _ => TransitionMatrix::lit(&[[1, 1], [1, 0]]),
                };
                Ok(m)
            }
            Rule::GrowingSizes { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                let (r, c) = (k + 1, k);
                let mut rows: Vec<Vec<u64>> = (0..r).map(|_| (0..c).map(|_| rng.gen_range(0..3)).collect()).collect();
                for (i, row) in rows.iter_mut().enumerate() {
                    if row.iter().all(|&x| x == 0) {
                        row[i % c] = 1;
                    }
                }
                for j in 0..c {
                    if rows.iter().all(|row| row[j] == 0) {
                        rows[j % r][j] = 1;
                    }
                }
                TransitionMatrix::from_rows(rows)
            }
        }
    }

    /// For the `M(p,n)` family the shifts `i(i+1)` sit midway between the
    /// exceptional levels, so their windows match `M(p,1)` ever more deeply.
    pub fn recurrence_hint(&self, up_to: usize) -> Option<Vec<usize>> {
        match self {
            Rule::Mpn { .. } => Some((1..).map(|i| i * (i + 1)).take_while(|&k| k <= up_to).collect()),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fib() -> TransitionMatrix {
        TransitionMatrix::lit(&[[1, 1], [1, 0]])
    }

    #[test]
    fn window_tails() {
        let a = TransitionMatrix::lit(&[[1, 1], [0, 1]]);
        let w = MatrixSource::window(vec![a.clone()]);
        assert_eq!(w.matrix(1, Side::Positive).unwrap(), a);
        assert!(w.matrix(3, Side::Positive).unwrap().is_identity());
        let f = MatrixSource::ExplicitWindow { matrices: vec![a.clone()], tail_policy: TailPolicy::Fail };
        assert_eq!(f.matrix(2, Side::Negative), Err(Error::TailPolicyFail { level: -2 }));
        let r = MatrixSource::ExplicitWindow { matrices: vec![a.clone(), fib()], tail_policy: TailPolicy::Repeat };
        assert_eq!(r.matrix(3, Side::Positive).unwrap(), a);
        assert_eq!(r.matrix(4, Side::Positive).unwrap(), fib());
    }

    #[test]
    fn identity_tail_size_follows_the_side() {
        let m = TransitionMatrix::lit(&[[1, 1, 1]]);
        let w = MatrixSource::window(vec![m]);
        assert_eq!(w.matrix(2, Side::Positive).unwrap().rows(), 1);
        assert_eq!(w.matrix(2, Side::Negative).unwrap().rows(), 3);
    }

    #[test]
    fn skip_and_prefix_normalize() {
        let s = MatrixSource::Stationary { period: vec![fib(), TransitionMatrix::mpn(3, 1)] };
        assert_eq!(s.skip(1, Side::Positive).unwrap().matrix(1, Side::Positive).unwrap(), TransitionMatrix::mpn(3, 1));
        let p = s.prefix(vec![TransitionMatrix::identity(2)]);
        assert!(matches!(p, MatrixSource::EventuallyPeriodic { .. }));
        assert!(p.matrix(1, Side::Positive).unwrap().is_identity());
        assert_eq!(p.matrix(2, Side::Positive).unwrap(), fib());
        assert_eq!(p.period_structure(), Some((1, 2)));
    }

    #[test]
    fn telescoping_blocks() {
        let s = MatrixSource::stationary(fib());
        let t = s.telescope(CutSpec::Every(2), Side::Positive).unwrap();
        assert_eq!(t, MatrixSource::stationary(TransitionMatrix::lit(&[[2, 1], [1, 1]])));
        let t = s.telescope(CutSpec::Levels(vec![1, 2]), Side::Positive).unwrap();
        assert_eq!(t.matrix(2, Side::Positive).unwrap(), fib());
        let c = MatrixSource::stationary(TransitionMatrix::mpn(3, 1)).telescope(CutSpec::Every(2), Side::Positive).unwrap();
        assert_eq!(c.matrix(7, Side::Positive).unwrap(), TransitionMatrix::lit(&[[9, 4], [0, 1]]));
        assert!(s.telescope(CutSpec::Levels(vec![2, 2]), Side::Positive).is_err());
    }

    #[test]
    fn mpn_rule() {
        let src = MatrixSource::rule("mpn-family", serde_json::json!({"p": 3, "nRule": "p^((i+1)^2-1)"}));
        assert_eq!(src.matrix(3, Side::Positive).unwrap(), TransitionMatrix::mpn(3, 27));
        assert_eq!(src.matrix(8, Side::Positive).unwrap(), TransitionMatrix::mpn(3, 6561));
        assert_eq!(src.matrix(4, Side::Positive).unwrap(), TransitionMatrix::mpn(3, 1));
        assert_eq!(src.matrix(48, Side::Positive), Err(Error::EntryOverflow { level: 48 }));
        assert_eq!(mpn_rule_index(0), None);
        assert_eq!(mpn_rule_index(15), Some(3));
        assert_eq!(src.recurrence_hint(30), Some(vec![2, 6, 12, 20, 30]));
        let shifted = src.skip(2, Side::Positive).unwrap();
        assert_eq!(shifted.recurrence_hint(30), Some(vec![4, 10, 18, 28]));
    }

    #[test]
    fn single_vertex_levels() {
        let lv: Vec<usize> = (0..20).filter(|&k| single_vertex_level(k)).collect();
        assert_eq!(lv, vec![1, 2, 3, 4, 7, 8, 15, 16]);
        let src = MatrixSource::rule("single-vertex-often", serde_json::Value::Null);
        assert_eq!(src.matrix(1, Side::Positive).unwrap(), TransitionMatrix::lit(&[[1, 1]]));
        assert_eq!(src.matrix(2, Side::Positive).unwrap(), TransitionMatrix::lit(&[[2]]));
        assert_eq!(src.matrix(5, Side::Positive).unwrap(), TransitionMatrix::lit(&[[1], [1]]));
        assert_eq!(src.matrix(6, Side::Positive).unwrap(), fib());
    }

    #[test]
    fn json_shape() {
        let s = MatrixSource::rule("mpn-family", serde_json::json!({"p": 3, "nRule": "p^((i+1)^2-1)"}));
        let v = serde_json::to_value(&s).unwrap();
        assert_eq!(v["kind"], "programmatic");
        assert_eq!(v["ruleId"], "mpn-family");
        let w: MatrixSource = serde_json::from_str(r#"{"kind":"explicitWindow","matrices":[[[1,1],[1,0]]]}"#).unwrap();
        assert_eq!(w, MatrixSource::window(vec![fib()]));
    }
}
