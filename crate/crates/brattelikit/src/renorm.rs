//! Renormalization times, height vectors and the shift on weighted diagrams.

use serde::{Deserialize, Serialize};

use crate::bundle::WeightedDiagram;
use crate::components::scan_chains;
use crate::diagram::BiInfiniteDiagram;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::source::Side;
use crate::weights::WeightFunction;

#[derive(Clone, Debug, PartialEq)]
pub struct RenormSchedule<S> {
    /// `t_k` for `k = 1..=depth` (index `k - 1`).
    pub times: Vec<f64>,
    /// `e^{-t_k} = Σ_{v ∈ V_k} w⁺(v)`, exact in exact mode. Index `k`, from 0.
    pub level_sums: Vec<S>,
    pub bounded_flag: bool,
}

impl<S: Scalar> RenormSchedule<S> {
    pub fn t(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.times[k - 1]
        }
    }

    /// `ℓ̄^k = e^{t_k} w⁺_k`.
    pub fn rescaled_widths(&self, w_plus: &WeightFunction<S>, k: usize) -> Vec<S> {
        w_plus.levels[k].iter().map(|x| x.clone() / self.level_sums[k].clone()).collect()
    }

    /// `h̄^k = e^{-t_k} h^k`.
    pub fn rescaled_heights(&self, h: &HeightVectors<S>, k: usize) -> Vec<S> {
        h.levels[k].iter().map(|x| x.clone() * self.level_sums[k].clone()).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.times
                .iter()
                .enumerate()
                .map(|(i, t)| serde_json::json!({"k": i + 1, "t": t, "levelSum": self.level_sums[i + 1].to_json()}))
                .collect(),
        )
    }
}

/// `t_k = -ln Σ_{v ∈ V_k} w⁺(v)`.
///
/// `bounded_flag` is set when a periodic chain keeps a definite share of its
/// weight, the situation where `sup t_k < ∞`.
pub fn renorm_times<S: Scalar>(diagram: &BiInfiniteDiagram, w_plus: &WeightFunction<S>, depth: usize) -> Result<RenormSchedule<S>> {
    if depth > w_plus.depth() {
        return Err(Error::WeightDepth { needed: depth, available: w_plus.depth() });
    }
    let level_sums: Vec<S> = (0..=depth).map(|k| S::sum_of(&w_plus.levels[k])).collect();
    let times = level_sums[1..].iter().map(|s| -s.ln()).collect();
    let bounded_flag = depth >= 1
        && scan_chains(&diagram.one_sided(Side::Positive, depth)?).iter().any(|c| {
            let start = w_plus.levels[c.start_level][c.chain[0]].to_f64();
            let end = w_plus.levels[c.end_level][*c.chain.last().expect("nonempty")].to_f64();
            end > 1e-12 && end >= start / 2.0
        });
    Ok(RenormSchedule { times, level_sums, bounded_flag })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightVectors<S> {
    /// `h^k` over `V_k`, `k = 0..=depth`.
    pub levels: Vec<Vec<S>>,
}

/// `h^0 = w⁻` on `V_0` and `h^k = F_k h^{k-1}`.
pub fn heights<S: Scalar>(diagram: &BiInfiniteDiagram, w_minus: &WeightFunction<S>, depth: usize) -> Result<HeightVectors<S>> {
    let mut levels = vec![w_minus.levels[0].clone()];
    for k in 1..=depth {
        let next = diagram.matrix_at(k as i64)?.apply(levels.last().expect("nonempty"));
        levels.push(next);
    }
    Ok(HeightVectors { levels })
}

/// `σ^n` on a weighted ordered diagram: `w⁺_n = e^{t_n} w⁺ ∘ σ^{-n}`,
/// `w⁻_n = e^{-t_n} w⁻ ∘ σ^{-n}`, where the new negative levels `1..n` carry
/// the old heights `h^{n-1}, …, h^0`.
pub fn shift_weighted<S: Scalar>(b: &WeightedDiagram<S>, n: usize) -> Result<WeightedDiagram<S>> {
    if n == 0 {
        return Ok(b.clone());
    }
    if n > b.depth_plus() {
        return Err(Error::WeightDepth { needed: n, available: b.depth_plus() });
    }
    let sum_n = S::sum_of(&b.plus.levels[n]);
    let factor = S::one() / sum_n.clone();
    let plus_levels = b.plus.levels[n..].iter().map(|l| l.iter().map(|x| x.clone() * factor.clone()).collect()).collect();
    let h = heights(&b.diagram, &b.minus, n)?;
    let mut minus_levels: Vec<Vec<S>> = (0..n).map(|j| h.levels[n - j].clone()).collect();
    minus_levels.extend(b.minus.levels.iter().cloned());
    let minus_levels = minus_levels.into_iter().map(|l| l.into_iter().map(|x| x * sum_n.clone()).collect()).collect();
    WeightedDiagram::new(
        b.diagram.shift(n)?,
        b.orders.shift(n),
        WeightFunction::new(Side::Positive, plus_levels),
        WeightFunction::new(Side::Negative, minus_levels),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::TransitionMatrix;
    use crate::orders::EdgeOrders;
    use crate::scalar::Q;
    use crate::weights::{pf_weights, pf_weights_exact};

    fn exact_bundle(m: TransitionMatrix, dp: usize, dm: usize) -> WeightedDiagram<Q> {
        let d = BiInfiniteDiagram::stationary(m);
        let (p, _) = pf_weights_exact(&d, Side::Positive, dp).unwrap().unwrap();
        let one = d.one_sided(Side::Negative, dm).unwrap();
        let m = WeightFunction::from_top(&one, vec![Q::from_int(1); one.sizes[dm]]);
        WeightedDiagram::new(d, EdgeOrders::policy_only(), p, m).unwrap().normalized().unwrap()
    }

    #[test]
    fn fibonacci_times() {
        let d = BiInfiniteDiagram::stationary(TransitionMatrix::lit(&[[1, 1], [1, 0]]));
        let (w, _) = pf_weights(&d, Side::Positive, 30).unwrap();
        let s = renorm_times(&d, &w, 30).unwrap();
        let ln_phi = ((1.0 + 5f64.sqrt()) / 2.0).ln();
        for k in 1..=30 {
            assert!((s.t(k) - k as f64 * ln_phi).abs() < 1e-12);
        }
        assert!(!s.bounded_flag);
    }

    #[test]
    fn scalar_and_atomic_times() {
        let b = exact_bundle(TransitionMatrix::lit(&[[2]]), 5, 1);
        let s = renorm_times(&b.diagram, &b.plus, 5).unwrap();
        for k in 1..=5 {
            assert!((s.t(k) - k as f64 * 2f64.ln()).abs() < 1e-14);
        }
        let c = BiInfiniteDiagram::stationary(TransitionMatrix::mpn(3, 1));
        let atomic = WeightFunction::new(Side::Positive, vec![vec![Q::from_int(0), Q::from_int(1)]; 6]);
        let s = renorm_times(&c, &atomic, 5).unwrap();
        assert!(s.times.iter().all(|t| *t == 0.0));
        assert!(s.bounded_flag);
    }

    #[test]
    fn shift_is_a_cocycle() {
        let b = exact_bundle(TransitionMatrix::mpn(3, 1), 6, 3);
        let once = shift_weighted(&b, 2).unwrap();
        let twice = shift_weighted(&shift_weighted(&b, 1).unwrap(), 1).unwrap();
        assert_eq!(once, twice);
        assert_eq!(shift_weighted(&b, 0).unwrap(), b);
        assert_eq!(once.residual().unwrap(), 0.0);
        assert_eq!(once.pairing(), Q::from_int(1));
        assert_eq!(once.plus.levels[0], b.plus.levels[0]);
        assert_eq!(once.depth_minus(), 5);
    }

    #[test]
    fn heights_and_rescaling() {
        let b = exact_bundle(TransitionMatrix::mpn(3, 1), 4, 1);
        let h = heights(&b.diagram, &b.minus, 4).unwrap();
        assert_eq!(h.levels[0], b.minus.levels[0]);
        let s = renorm_times(&b.diagram, &b.plus, 4).unwrap();
        for k in 0..=4 {
            let wbar = s.rescaled_widths(&b.plus, k);
            let hbar = s.rescaled_heights(&h, k);
            assert_eq!(Q::sum_of(&wbar), Q::from_int(1));
            assert_eq!(Q::dot(&wbar, &hbar), Q::from_int(1));
        }
    }
}
