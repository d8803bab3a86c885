//! Weight functions on one side of a diagram: vertex weights per level with
//! `w_{k-1} = G_k^T w_k`, edge weights `w(e) = w(r(e)) / w(s(e))`.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::components::{scan_chains, PeriodicComponent};
use crate::diagram::{BiInfiniteDiagram, OneSided};
use crate::error::{Error, Result};
use crate::matrix::TransitionMatrix;
use crate::orders::EdgeKey;
use crate::scalar::{Scalar, Q};
use crate::source::{mpn_rule_index, NRule, Rule, Side};

#[derive(Clone, Debug, PartialEq)]
pub struct WeightFunction<S> {
    pub side: Side,
    /// `levels[k]` is the weight vector over level `k` of the side.
    pub levels: Vec<Vec<S>>,
}

impl<S: Scalar> WeightFunction<S> {
    pub fn new(side: Side, levels: Vec<Vec<S>>) -> Self {
        WeightFunction { side, levels }
    }

    /// Pull a top-level vector back through every level of `one`.
    pub fn from_top(one: &OneSided, top: Vec<S>) -> Self {
        let mut levels = vec![top];
        for k in (1..=one.depth()).rev() {
            let next = one.g(k).apply_transpose(levels.last().expect("nonempty"));
            levels.push(next);
        }
        levels.reverse();
        WeightFunction { side: one.side, levels }
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, k: usize) -> Result<&[S]> {
        self.levels.get(k).map(Vec::as_slice).ok_or(Error::WeightDepth { needed: k, available: self.depth() })
    }

    pub fn total(&self, k: usize) -> Result<S> {
        Ok(S::sum_of(self.level(k)?))
    }

    /// `w(e)` for an edge on level `k`, `None` when its source has weight 0.
    pub fn edge_weight(&self, k: usize, e: &EdgeKey) -> Option<S> {
        let ws = &self.levels[k - 1][e.source];
        if ws.is_zero() {
            None
        } else {
            Some(self.levels[k][e.range].clone() / ws.clone())
        }
    }

    pub fn is_positive(&self) -> bool {
        self.levels.iter().flatten().all(|x| *x > S::zero())
    }

    pub fn is_probability(&self, tol: f64) -> bool {
        (S::sum_of(&self.levels[0]).to_f64() - 1.0).abs() <= tol
    }

    pub fn scaled(&self, c: &S) -> Self {
        WeightFunction {
            side: self.side,
            levels: self.levels.iter().map(|l| l.iter().map(|x| x.clone() * c.clone()).collect()).collect(),
        }
    }

    pub fn truncated(&self, depth: usize) -> Self {
        WeightFunction { side: self.side, levels: self.levels[..=depth.min(self.depth())].to_vec() }
    }

    pub fn to_f64(&self) -> WeightFunction<f64> {
        WeightFunction { side: self.side, levels: self.levels.iter().map(|l| l.iter().map(Scalar::to_f64).collect()).collect() }
    }

    pub fn to_json(&self) -> Value {
        let levels: Vec<Value> = self
            .levels
            .iter()
            .enumerate()
            .map(|(k, l)| json!({"k": self.side.sign() * k as i64, "weights": l.iter().map(Scalar::to_json).collect::<Vec<_>>()}))
            .collect();
        json!({"numericMode": S::MODE, "side": self.side, "levels": levels})
    }

    pub fn from_json(v: &Value, side: Side) -> Result<Self> {
        let levels = v
            .get("levels")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Json("weights need a \"levels\" array".into()))?;
        let mut out: Vec<Option<Vec<S>>> = vec![None; levels.len()];
        for l in levels {
            let k = l.get("k").and_then(Value::as_i64).ok_or_else(|| Error::Json("weight level without integer k".into()))?;
            let idx = k.unsigned_abs() as usize;
            if (k != 0 && k.signum() != side.sign()) || idx >= out.len() {
                return Err(Error::Json(format!("weight level {k} does not fit the {side:?} side")));
            }
            let ws = l
                .get("weights")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::Json(format!("level {k} without a weights array")))?
                .iter()
                .map(|x| S::from_json(x).map_err(Error::Json))
                .collect::<Result<Vec<S>>>()?;
            out[idx] = Some(ws);
        }
        let levels = out
            .into_iter()
            .enumerate()
            .map(|(k, l)| l.ok_or_else(|| Error::Json(format!("weight level {k} missing"))))
            .collect::<Result<Vec<_>>>()?;
        if levels.is_empty() {
            return Err(Error::Json("no weight levels".into()));
        }
        Ok(WeightFunction { side, levels })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Check {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConditionIii {
    pub verdict: Check,
    /// Largest cylinder weight per level, periodic chains excluded.
    pub cylinder_max: Vec<f64>,
    /// Periodic chains that keep a definite share of their mass.
    pub atomic_chains: Vec<PeriodicComponent>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WeightReport {
    pub depth: usize,
    pub recursion_residual: f64,
    pub edge_sum_residual: f64,
    pub recursion_ok: bool,
    pub edge_sums_ok: bool,
    pub condition_iii: ConditionIii,
    pub is_positive: bool,
    pub is_probability: bool,
    pub passed: bool,
}

fn chain_carries_mass<S: Scalar>(w: &WeightFunction<S>, c: &PeriodicComponent, tol: f64) -> bool {
    let start = w.levels[c.start_level][c.chain[0]].to_f64();
    let end = w.levels[c.end_level][*c.chain.last().expect("nonempty")].to_f64();
    end > tol && end >= start / 2.0
}

/// Check the invariance recursion, the edge sums out of every vertex and the
/// decay of cylinder weights through `depth`.
pub fn validate_weight<S: Scalar>(w: &WeightFunction<S>, diagram: &BiInfiniteDiagram, depth: usize, tol: f64) -> Result<WeightReport> {
    let depth = depth.min(w.depth());
    let one = diagram.one_sided(w.side, depth)?;
    for (k, l) in w.levels.iter().enumerate().take(depth + 1) {
        if l.len() != one.sizes[k] {
            return Err(Error::DimensionMismatch { level: w.side.sign() * k as i64, expected: one.sizes[k], found: l.len() });
        }
    }
    let mut recursion = 0.0f64;
    let mut edge_sums = 0.0f64;
    for k in 1..=depth {
        let g = one.g(k);
        let pulled = g.apply_transpose(&w.levels[k]);
        for (u, (a, b)) in pulled.iter().zip(&w.levels[k - 1]).enumerate() {
            recursion = recursion.max((a.clone() - b.clone()).abs().to_f64());
            if !b.is_zero() {
                let mut s = S::zero();
                for v in 0..g.rows() {
                    let f = g.get(v, u);
                    if f > 0 {
                        s = s + S::from_u64(f) * (w.levels[k][v].clone() / b.clone());
                    }
                }
                edge_sums = edge_sums.max((s - S::one()).abs().to_f64());
            }
        }
    }
    let chains = if depth >= 1 { scan_chains(&one) } else { vec![] };
    let atomic_chains: Vec<PeriodicComponent> = chains.iter().filter(|c| chain_carries_mass(w, c, tol)).cloned().collect();
    let cylinder_max: Vec<f64> = (0..=depth)
        .map(|k| {
            w.levels[k]
                .iter()
                .enumerate()
                .filter(|(v, _)| !chains.iter().any(|c| c.vertex_at(k) == Some(*v)))
                .map(|(_, x)| x.to_f64())
                .fold(0.0, f64::max)
        })
        .collect();
    let last = *cylinder_max.last().expect("nonempty");
    let verdict = if !atomic_chains.is_empty() {
        Check::Fail
    } else if last < tol {
        Check::Pass
    } else if depth >= 2
        && cylinder_max.windows(2).all(|p| p[1] <= p[0] * (1.0 + 1e-12))
        && last <= cylinder_max[depth / 2] / 2.0
    {
        Check::Pass
    } else {
        Check::Inconclusive
    };
    let recursion_ok = recursion <= tol;
    let edge_sums_ok = edge_sums <= tol;
    Ok(WeightReport {
        depth,
        recursion_residual: recursion,
        edge_sum_residual: edge_sums,
        recursion_ok,
        edge_sums_ok,
        condition_iii: ConditionIii { verdict, cylinder_max, atomic_chains },
        is_positive: w.truncated(depth).is_positive(),
        is_probability: w.is_probability(tol.max(1e-12)),
        passed: recursion_ok && edge_sums_ok && verdict != Check::Fail,
    })
}

/// Smallest power of `a` with all entries positive, up to the Wielandt bound.
pub fn primitivity_exponent(a: &TransitionMatrix) -> Result<usize> {
    let n = a.rows();
    let bound = (n - 1) * (n - 1) + 1;
    let mut p = a.support_mul(&TransitionMatrix::identity(n));
    for m in 1..=bound {
        if p.is_positive() {
            return Ok(m);
        }
        p = p.support_mul(a);
    }
    Err(Error::NotPrimitive { bound })
}

/// Perron root and right eigenvector (summing to 1).
///
/// Primitive matrices always qualify. A reducible matrix is accepted when its
/// dominant eigenvector is strictly positive and checks out by residual
/// (`M(3,1)^T` is the motivating case); otherwise `NotPrimitive`.
pub fn perron(a: &TransitionMatrix) -> Result<(f64, Vec<f64>)> {
    if a.rows() != a.cols() {
        return Err(Error::Invalid("Perron data needs a square matrix".into()));
    }
    let primitive = primitivity_exponent(a);
    let (lambda, x) = dominant_pair(a);
    if let Err(e) = primitive {
        let ax = a.apply(&x);
        let residual = ax.iter().zip(&x).map(|(y, v)| (y - lambda * v).abs()).fold(0.0, f64::max);
        let ok = x.iter().all(|v| *v > 0.0) && residual <= 1e-12 * lambda.max(1.0) && lambda.is_finite();
        if !ok {
            return Err(e);
        }
    }
    Ok((lambda, x))
}

fn dominant_pair(a: &TransitionMatrix) -> (f64, Vec<f64>) {
    let n = a.rows();
    if n == 1 {
        return (a.get(0, 0) as f64, vec![1.0]);
    }
    if n == 2 {
        let (p, q, r, s) = (a.get(0, 0) as f64, a.get(0, 1) as f64, a.get(1, 0) as f64, a.get(1, 1) as f64);
        let lambda = (p + s + ((p - s) * (p - s) + 4.0 * q * r).sqrt()) / 2.0;
        let v = if q != 0.0 { [q, lambda - p] } else { [lambda - s, r] };
        let t = v[0] + v[1];
        return (lambda, vec![v[0] / t, v[1] / t]);
    }
    let mut x = vec![1.0 / n as f64; n];
    let mut lambda = 0.0;
    for _ in 0..200_000 {
        let y: Vec<f64> = a.apply(&x);
        let t: f64 = y.iter().sum();
        if t == 0.0 {
            break;
        }
        let y: Vec<f64> = y.iter().map(|v| v / t).collect();
        lambda = t;
        let change = y.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = y;
        if change < 1e-16 {
            break;
        }
    }
    (lambda, x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PfInfo {
    pub lambda: f64,
    pub xi: Vec<f64>,
    pub head: usize,
    pub period: usize,
}

fn periodic_structure(diagram: &BiInfiniteDiagram, side: Side) -> Result<(usize, usize, OneSided)> {
    let (head, period) = diagram
        .source(side)
        .period_structure()
        .ok_or_else(|| Error::Invalid("PF weights need a stationary or eventually periodic side".into()))?;
    let one = diagram.one_sided(side, head + period)?;
    Ok((head, period, one))
}

fn period_block(one: &OneSided, head: usize, period: usize) -> Result<TransitionMatrix> {
    let mut b = one.g(head + 1).clone();
    for k in head + 2..=head + period {
        b = one.g(k).checked_mul(&b, k as i64)?;
    }
    Ok(b)
}

/// Weights from a fixed ray `xi` of the period block (`B^T xi = lambda xi`):
/// `w_{head + jp + i} = lambda^{-j} u_i`, pulled back over the head and
/// normalized to a probability vector on level 0.
fn weights_from_ray<S: Scalar>(diagram: &BiInfiniteDiagram, side: Side, head: usize, period: usize, lambda: S, xi: Vec<S>, depth: usize) -> Result<WeightFunction<S>> {
    let one = diagram.one_sided(side, head + period)?;
    let mut u = vec![xi.iter().map(|x| x.clone() / lambda.clone()).collect::<Vec<S>>()];
    for k in (head + 2..=head + period).rev() {
        let next = one.g(k).apply_transpose(u.last().expect("nonempty"));
        u.push(next);
    }
    u.push(xi);
    u.reverse();
    // u[i] is the weight on level head + i for i in 0..=period
    let top = depth.max(head);
    let mut levels: Vec<Vec<S>> = Vec::with_capacity(top + 1);
    let mut scale = S::one();
    for k in head..=top {
        let i = (k - head) % period;
        if k > head && i == 0 {
            scale = scale / lambda.clone();
        }
        levels.push(u[i].iter().map(|x| x.clone() * scale.clone()).collect());
    }
    for k in (1..=head).rev() {
        let next = one.g(k).apply_transpose(&levels[0]);
        levels.insert(0, next);
    }
    let total = S::sum_of(&levels[0]);
    if total.is_zero() {
        return Err(Error::Invalid("fixed ray pulls back to zero".into()));
    }
    levels.truncate(depth + 1);
    Ok(WeightFunction::new(side, levels).scaled(&(S::one() / total)))
}

/// Perron-Frobenius weights of an eventually periodic side, in floating point.
pub fn pf_weights(diagram: &BiInfiniteDiagram, side: Side, depth: usize) -> Result<(WeightFunction<f64>, PfInfo)> {
    let (head, period, one) = periodic_structure(diagram, side)?;
    let b = period_block(&one, head, period)?;
    let (lambda, xi) = perron(&b.transpose())?;
    let w = weights_from_ray(diagram, side, head, period, lambda, xi.clone(), depth)?;
    Ok((w, PfInfo { lambda, xi, head, period }))
}

/// A nonnegative rational fixed direction of a square matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExactRay {
    pub eigenvalue: Q,
    /// Normalized to sum 1.
    pub ray: Vec<Q>,
    /// Eigenvalue 1 under stationarity: cylinder weights never decay.
    pub atomic: bool,
}

/// Rational basis of the kernel of a square rational matrix.
pub fn nullspace(m: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut a: Vec<Vec<Q>> = m.to_vec();
    let mut pivots = vec![];
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for x in a[r].iter_mut() {
            *x = x.clone() * inv.clone();
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..cols {
                    let d = f.clone() * a[r][j].clone();
                    a[i][j] = a[i][j].clone() - d;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    (0..cols)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = vec![Q::zero(); cols];
            v[free] = Q::one();
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[i][free].clone();
            }
            v
        })
        .collect()
}

/// Nonnegative rational eigenvectors `a x = λ x` with integer `λ ≥ 1`.
///
/// Any eigenvalue with a nonnegative eigenvector is bounded by the largest
/// row sum, so the candidates are finite; eigenspaces are reported through
/// their echelon basis.
pub fn exact_fixed_rays(a: &TransitionMatrix) -> Vec<ExactRay> {
    let n = a.rows();
    let bound = (0..n).map(|r| a.row_sum(r)).max().unwrap_or(0).min(100_000);
    let mut out = vec![];
    for lambda in 1..=bound {
        let m: Vec<Vec<Q>> = (0..n)
            .map(|r| (0..n).map(|c| Q::from_u64(a.get(r, c)) - if r == c { Q::from_u64(lambda) } else { Q::zero() }).collect())
            .collect();
        for v in nullspace(&m) {
            let nonneg = v.iter().all(|x| !x.is_negative());
            let nonpos = v.iter().all(|x| !(x.clone() > Q::zero()));
            if !(nonneg || nonpos) {
                continue;
            }
            let total = Q::sum_of(&v);
            let ray = v.iter().map(|x| x.clone() / total.clone()).collect();
            out.push(ExactRay { eigenvalue: Q::from_u64(lambda), ray, atomic: lambda == 1 });
        }
    }
    out
}

/// Fixed rays of the period block of an eventually periodic side
/// (`B^T x = λ x`), exactly.
pub fn stationary_rays(diagram: &BiInfiniteDiagram, side: Side) -> Result<Vec<ExactRay>> {
    let (head, period, one) = periodic_structure(diagram, side)?;
    Ok(exact_fixed_rays(&period_block(&one, head, period)?.transpose()))
}

/// Exact PF weights when the Perron root is an integer with a strictly
/// positive rational eigenvector.
pub fn pf_weights_exact(diagram: &BiInfiniteDiagram, side: Side, depth: usize) -> Result<Option<(WeightFunction<Q>, ExactRay)>> {
    let (head, period, _) = periodic_structure(diagram, side)?;
    let best = stationary_rays(diagram, side)?
        .into_iter()
        .filter(|r| r.ray.iter().all(|x| *x > Q::zero()))
        .max_by(|a, b| a.eigenvalue.cmp(&b.eigenvalue));
    let Some(ray) = best else { return Ok(None) };
    let w = weights_from_ray(diagram, side, head, period, ray.eigenvalue.clone(), ray.ray.clone(), depth)?;
    Ok(Some((w, ray)))
}

/// Constructive probability weight: average the normalized pull-backs of the
/// unit vectors of level `depth + lookahead` (the barycenter of the cone's
/// columns), then pull back to level 0.
pub fn solve_weights<S: Scalar>(diagram: &BiInfiniteDiagram, side: Side, depth: usize, lookahead: usize) -> Result<WeightFunction<S>> {
    let k_top = depth + lookahead;
    let one = diagram.one_sided(side, k_top)?;
    let n_top = one.sizes[k_top];
    let mut acc = vec![S::zero(); one.sizes[depth]];
    for v in 0..n_top {
        let mut x = vec![BigUint::zero(); n_top];
        x[v] = BigUint::one();
        for k in (depth + 1..=k_top).rev() {
            x = one.g(k).apply_transpose_big(&x);
        }
        let at_depth = x.clone();
        for k in (1..=depth).rev() {
            x = one.g(k).apply_transpose_big(&x);
        }
        let mass: BigUint = x.iter().sum();
        if mass.is_zero() {
            return Err(Error::DegenerateCone { depth: k_top });
        }
        let m = S::from_biguint(&mass);
        for (a, y) in acc.iter_mut().zip(&at_depth) {
            *a = a.clone() + S::from_biguint(y) / m.clone();
        }
    }
    let nv = S::from_u64(n_top as u64);
    let top: Vec<S> = acc.into_iter().map(|a| a / nv.clone()).collect();
    let trimmed = OneSided { side, matrices: one.matrices[..depth].to_vec(), sizes: one.sizes[..=depth].to_vec() };
    Ok(WeightFunction::from_top(&trimmed, top))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict")]
pub enum SeriesVerdict {
    /// Terms of at least 1/2 recur: levels where they occur.
    Unbounded { jumps: Vec<usize> },
    /// Partial sums with a geometric tail estimate added.
    Bounded { estimate: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MpnSeries {
    pub p: u64,
    pub depth: usize,
    /// `a_i / p^i` for `i = 0..=depth`.
    pub terms: Vec<Q>,
    /// `S_k = Σ_{i ≤ k} a_i / p^i`.
    pub partial_sums: Vec<Q>,
    /// Level-0 mass obtained by pulling `(p^{-k}, 0)` back through the
    /// diagram's own matrices; `None` where entries overflow.
    pub pulled_back: Vec<Option<Q>>,
    pub routes_agree: bool,
    pub verdict: SeriesVerdict,
}

/// Weight of `v_1^k` in the `M(p, n)` family, normalized by `w(v_1^0) = 1`:
/// the total level-0 mass forced by a unit of weight on `v_1^k`.
pub fn mpn_weight_series(p: u64, n_rule: &NRule, depth: usize) -> Result<MpnSeries> {
    if p < 2 {
        return Err(Error::BadParams("p must be at least 2".into()));
    }
    let rule = Rule::Mpn { p, n: n_rule.clone() };
    let pq = Q::from_u64(p);
    let mut terms = vec![];
    let mut partial_sums = vec![];
    let mut s = Q::zero();
    for i in 0..=depth {
        let a = match (i, mpn_rule_index(i)) {
            (0, _) | (_, None) => BigUint::one(),
            (_, Some(j)) => n_rule.value(p, j),
        };
        let t = Q::from_biguint(&a) / pq.pow(i as i32);
        s = s + t.clone();
        terms.push(t);
        partial_sums.push(s.clone());
    }
    let mut pulled_back = vec![];
    for k in 0..=depth {
        let mut w = vec![pq.pow(-(k as i32)), Q::zero()];
        let mut ok = true;
        for j in (1..=k).rev() {
            match rule.matrix(j) {
                Ok(m) => w = m.apply_transpose(&w),
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        pulled_back.push(ok.then(|| Q::sum_of(&w)));
    }
    let routes_agree = pulled_back.iter().zip(&partial_sums).all(|(a, b)| a.as_ref().is_none_or(|a| a == b));
    let half = Q::new(1, 2);
    let jumps: Vec<usize> = (1..=depth).filter(|&i| terms[i] >= half).collect();
    let verdict = if jumps.len() >= 2 && 2 * jumps[jumps.len() - 1] > depth {
        SeriesVerdict::Unbounded { jumps }
    } else {
        let tail = terms[depth].to_f64() / (p - 1) as f64;
        SeriesVerdict::Bounded { estimate: partial_sums[depth].to_f64() + tail }
    };
    Ok(MpnSeries { p, depth, terms, partial_sums, pulled_back, routes_agree, verdict })
}

/// Rescale `w⁻` so that `Σ_{v ∈ V_0} w⁻(v) w⁺(v) = 1`.
pub fn biinfinite_normalize<S: Scalar>(plus: &WeightFunction<S>, minus: &WeightFunction<S>) -> Result<(WeightFunction<S>, WeightFunction<S>)> {
    if plus.levels[0].len() != minus.levels[0].len() {
        return Err(Error::DimensionMismatch { level: 0, expected: plus.levels[0].len(), found: minus.levels[0].len() });
    }
    let pairing = S::dot(&plus.levels[0], &minus.levels[0]);
    if pairing.is_zero() {
        return Err(Error::ZeroPairing);
    }
    Ok((plus.clone(), minus.scaled(&(S::one() / pairing))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fib() -> BiInfiniteDiagram {
        BiInfiniteDiagram::stationary(TransitionMatrix::lit(&[[1, 1], [1, 0]]))
    }

    fn chacon() -> BiInfiniteDiagram {
        BiInfiniteDiagram::stationary(TransitionMatrix::mpn(3, 1))
    }

    #[test]
    fn fibonacci_pf() {
        let (w, info) = pf_weights(&fib(), Side::Positive, 10).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((info.lambda - phi).abs() < 1e-15);
        assert!((w.levels[0][0] - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
        assert!((w.levels[0][1] - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-15);
        let r = validate_weight(&w, &fib(), 10, 1e-12).unwrap();
        assert!(r.passed && r.condition_iii.verdict == Check::Pass, "{r:?}");
        let (wm, _) = pf_weights(&fib(), Side::Negative, 4).unwrap();
        assert!((wm.levels[0][0] - w.levels[0][0]).abs() < 1e-15);
    }

    #[test]
    fn chacon_pf_exact_and_atomic() {
        let (w, ray) = pf_weights_exact(&chacon(), Side::Positive, 5).unwrap().unwrap();
        assert_eq!(ray.eigenvalue, Q::from_int(3));
        assert_eq!(w.levels[0], vec![Q::new(2, 3), Q::new(1, 3)]);
        assert_eq!(w.levels[2], vec![Q::new(2, 27), Q::new(1, 27)]);
        let r = validate_weight(&w, &chacon(), 5, 0.0).unwrap();
        assert_eq!(r.recursion_residual, 0.0);
        assert!(r.passed);
        let atomic = WeightFunction::new(Side::Positive, vec![vec![Q::zero(), Q::one()]; 6]);
        let r = validate_weight(&atomic, &chacon(), 5, 1e-12).unwrap();
        assert!(r.recursion_ok && r.edge_sums_ok);
        assert_eq!(r.condition_iii.verdict, Check::Fail);
        let (fw, info) = pf_weights(&chacon(), Side::Positive, 3).unwrap();
        assert_eq!(info.lambda, 3.0);
        assert!((fw.levels[0][0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn scalar_and_imprimitive() {
        let two = BiInfiniteDiagram::stationary(TransitionMatrix::lit(&[[2]]));
        let (w, info) = pf_weights(&two, Side::Positive, 3).unwrap();
        assert_eq!(info.lambda, 2.0);
        assert_eq!(w.levels[3], vec![0.125]);
        let blocks = BiInfiniteDiagram::stationary(TransitionMatrix::lit(&[[2, 0], [0, 2]]));
        assert_eq!(pf_weights(&blocks, Side::Positive, 3).unwrap_err().kind(), "NotPrimitive");
    }

    #[test]
    fn invariance_violation_reported() {
        let w = WeightFunction::new(Side::Positive, vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
        let r = validate_weight(&w, &fib(), 1, 1e-12).unwrap();
        assert!(!r.recursion_ok && !r.passed);
    }

    #[test]
    fn rays_of_chacon() {
        let rays = stationary_rays(&chacon(), Side::Positive).unwrap();
        assert_eq!(rays.len(), 2);
        assert_eq!(rays[0].ray, vec![Q::zero(), Q::one()]);
        assert!(rays[0].atomic);
        assert_eq!(rays[1].ray, vec![Q::new(2, 3), Q::new(1, 3)]);
        assert!(!rays[1].atomic);
    }

    #[test]
    fn solver_gives_probability_weights() {
        let w: WeightFunction<Q> = solve_weights(&fib(), Side::Positive, 4, 6).unwrap();
        assert_eq!(Q::sum_of(&w.levels[0]), Q::one());
        let r = validate_weight(&w, &fib(), 4, 0.0).unwrap();
        assert!(r.recursion_ok && r.edge_sums_ok);
        let f: WeightFunction<f64> = solve_weights(&fib(), Side::Positive, 3, 30).unwrap();
        assert!((f.levels[0][0] - 0.6180339887498949).abs() < 1e-12);
    }

    #[test]
    fn series_examples() {
        let c = mpn_weight_series(3, &NRule::Constant(1), 20).unwrap();
        assert!(c.routes_agree);
        match c.verdict {
            SeriesVerdict::Bounded { estimate } => assert!((estimate - 1.5).abs() < 1e-12),
            ref v => panic!("{v:?}"),
        }
        let d = mpn_weight_series(3, &NRule::DivergentPower, 8).unwrap();
        assert!(d.routes_agree);
        assert_eq!(d.verdict, SeriesVerdict::Unbounded { jumps: vec![3, 8] });
        assert_eq!(d.partial_sums[8].clone() - d.partial_sums[7].clone(), Q::one());
    }

    #[test]
    fn normalization() {
        let (w, _) = pf_weights(&fib(), Side::Positive, 2).unwrap();
        let (_, m) = biinfinite_normalize(&w, &w).unwrap();
        assert!((m.levels[0][0] / w.levels[0][0] - 1.894427190999916).abs() < 1e-12);
        let one = WeightFunction::new(Side::Positive, vec![vec![Q::one()]]);
        let five = WeightFunction::new(Side::Negative, vec![vec![Q::from_int(5)]]);
        assert_eq!(biinfinite_normalize(&one, &five).unwrap().1.levels[0], vec![Q::one()]);
        let a = WeightFunction::new(Side::Positive, vec![vec![Q::one(), Q::zero()]]);
        let b = WeightFunction::new(Side::Negative, vec![vec![Q::zero(), Q::one()]]);
        assert_eq!(biinfinite_normalize(&a, &b), Err(Error::ZeroPairing));
    }

    #[test]
    fn json_round_trip() {
        let (w, _) = pf_weights_exact(&chacon(), Side::Positive, 2).unwrap().unwrap();
        let back = WeightFunction::<Q>::from_json(&w.to_json(), Side::Positive).unwrap();
        assert_eq!(back, w);
        let m = WeightFunction::new(Side::Negative, vec![vec![1.5, 0.25], vec![0.5, 0.125]]);
        assert_eq!(WeightFunction::<f64>::from_json(&m.to_json(), Side::Negative).unwrap(), m);
        assert!(pf_weights_exact(&chacon(), Side::Negative, 2).unwrap().is_none());
    }
}
