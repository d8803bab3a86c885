//! The column cone of `P_K = G_1^T ··· G_K^T` in the Hilbert projective
//! metric, and the unique-weight oracle built on it.
//!
//! Columns are kept as exact big integers. Two columns with different
//! supports are at infinite distance, so the diameter is `+∞` until the
//! products become positive.

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::components::{periodic_component_scan, PeriodicComponent};
use crate::diagram::BiInfiniteDiagram;
use crate::error::{Error, Result};
use crate::scalar::{ln_ratio, Scalar, Q};
use crate::source::Side;
use crate::weights::{stationary_rays, ExactRay};

#[derive(Clone, Debug, PartialEq)]
pub struct ConeState {
    pub depth: usize,
    /// One column per vertex of level `depth`, each over `V_0`.
    pub columns: Vec<Vec<BigUint>>,
    pub hilbert_diameter: f64,
}

impl ConeState {
    fn start(n: usize) -> Self {
        let columns = (0..n)
            .map(|i| (0..n).map(|j| if i == j { BigUint::from(1u32) } else { BigUint::zero() }).collect())
            .collect();
        let mut s = ConeState { depth: 0, columns, hilbert_diameter: 0.0 };
        s.hilbert_diameter = diameter(&s.columns);
        s
    }

    fn advance(&mut self, g: &crate::matrix::TransitionMatrix) -> Result<()> {
        let n0 = self.columns.first().map_or(0, Vec::len);
        let mut next = vec![vec![BigUint::zero(); n0]; g.rows()];
        for (v, col) in next.iter_mut().enumerate() {
            for u in 0..g.cols() {
                let f = g.get(v, u);
                if f > 0 {
                    for (a, b) in col.iter_mut().zip(&self.columns[u]) {
                        *a += b * f;
                    }
                }
            }
        }
        self.depth += 1;
        if next.iter().any(|c| c.iter().all(Zero::is_zero)) {
            return Err(Error::DegenerateCone { depth: self.depth });
        }
        self.columns = next;
        self.hilbert_diameter = diameter(&self.columns);
        Ok(())
    }

    /// Columns scaled to sum 1.
    pub fn normalized_columns(&self) -> Vec<Vec<f64>> {
        self.columns
            .iter()
            .map(|c| {
                let total: BigUint = c.iter().sum();
                c.iter().map(|x| Q::from_bigs(x.clone().into(), total.clone().into()).to_f64()).collect()
            })
            .collect()
    }

    /// Number of distinct column supports; columns sharing a support are at
    /// finite distance.
    pub fn support_classes(&self) -> usize {
        let mut seen: Vec<Vec<bool>> = vec![];
        for c in &self.columns {
            let s: Vec<bool> = c.iter().map(|x| !x.is_zero()).collect();
            if !seen.contains(&s) {
                seen.push(s);
            }
        }
        seen.len()
    }
}

/// Hilbert projective distance between two nonnegative columns.
pub fn hilbert_distance(x: &[BigUint], y: &[BigUint]) -> f64 {
    let support = |v: &[BigUint]| v.iter().map(|a| !a.is_zero()).collect::<Vec<_>>();
    if support(x) != support(y) {
        return f64::INFINITY;
    }
    let idx: Vec<usize> = (0..x.len()).filter(|&i| !x[i].is_zero()).collect();
    if idx.len() <= 1 {
        return 0.0;
    }
    // largest and smallest x_i / y_i, compared by cross multiplication
    let mut hi = idx[0];
    let mut lo = idx[0];
    for &i in &idx[1..] {
        if &x[i] * &y[hi] > &x[hi] * &y[i] {
            hi = i;
        }
        if &x[i] * &y[lo] < &x[lo] * &y[i] {
            lo = i;
        }
    }
    ln_ratio(&(&x[hi] * &y[lo]), &(&x[lo] * &y[hi]))
}

fn diameter(columns: &[Vec<BigUint>]) -> f64 {
    let mut d = 0.0f64;
    for i in 0..columns.len() {
        for j in i + 1..columns.len() {
            d = d.max(hilbert_distance(&columns[i], &columns[j]));
            if d.is_infinite() {
                return d;
            }
        }
    }
    d
}

pub fn invariant_cone(diagram: &BiInfiniteDiagram, depth: usize) -> Result<ConeState> {
    let one = diagram.one_sided(Side::Positive, depth)?;
    let mut s = ConeState::start(diagram.weld_size);
    for k in 1..=depth {
        s.advance(one.g(k))?;
    }
    Ok(s)
}

/// Diameters at depths `0..=depth`.
pub fn cone_diameters(diagram: &BiInfiniteDiagram, depth: usize) -> Result<Vec<f64>> {
    let one = diagram.one_sided(Side::Positive, depth)?;
    let mut s = ConeState::start(diagram.weld_size);
    let mut out = vec![s.hilbert_diameter];
    for k in 1..=depth {
        s.advance(one.g(k))?;
        out.push(s.hilbert_diameter);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightVerdict {
    UniqueNonAtomic,
    MultipleOrAtomic,
    Inconclusive,
}

/// Growth of the mass a unit on a non-periodic vertex forces onto the
/// start of a periodic chain: `R_K = c[u] / Σ_{a ≠ u} c[a]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DivergenceEvidence {
    pub anchor: usize,
    pub ratios: Vec<f64>,
    /// Levels where the ratio jumps by at least 1/2.
    pub jumps: Vec<usize>,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UniqueWeightReport {
    pub verdict: WeightVerdict,
    pub depth: usize,
    pub hilbert_diameter: f64,
    pub support_classes: usize,
    /// Barycenter of the normalized columns.
    pub ray: Vec<f64>,
    pub components: Vec<PeriodicComponent>,
    /// Exact fixed rays of the period block, when the side is eventually periodic.
    pub exact_rays: Vec<ExactRay>,
    pub non_atomic_ray: Option<Vec<Q>>,
    pub atomic_rays: Vec<Vec<Q>>,
    pub divergence: Option<DivergenceEvidence>,
}

pub fn unique_weight_report(diagram: &BiInfiniteDiagram, depth: usize, tol: f64) -> Result<UniqueWeightReport> {
    let one = diagram.one_sided(Side::Positive, depth)?;
    let components = periodic_component_scan(diagram, depth)?;
    let anchor = components.iter().find(|c| c.start_level == 0);
    let mut s = ConeState::start(diagram.weld_size);
    let mut ratios = vec![];
    for k in 1..=depth {
        s.advance(one.g(k))?;
        if let Some(c) = anchor {
            let u = c.chain[0];
            let on_chain = c.vertex_at(k);
            let mut best: Option<Q> = None;
            for (v, col) in s.columns.iter().enumerate() {
                if Some(v) == on_chain {
                    continue;
                }
                let rest: BigUint = col.iter().enumerate().filter(|(a, _)| *a != u).map(|(_, x)| x).sum();
                if rest.is_zero() {
                    continue;
                }
                let r = Q::from_bigs(col[u].clone().into(), rest.into());
                if best.as_ref().is_none_or(|b| r > *b) {
                    best = Some(r);
                }
            }
            ratios.push(best.map_or(0.0, |b| b.to_f64()));
        }
    }
    let divergence = anchor.map(|c| {
        let mut jumps = vec![];
        for k in 1..ratios.len() {
            if ratios[k] - ratios[k - 1] >= 0.5 {
                jumps.push(k + 1);
            }
        }
        let flagged = jumps.len() >= 2 && 2 * jumps[jumps.len() - 1] > depth;
        DivergenceEvidence { anchor: c.chain[0], ratios, jumps, flagged }
    });
    let cols = s.normalized_columns();
    let n0 = diagram.weld_size;
    let ray: Vec<f64> = (0..n0).map(|a| cols.iter().map(|c| c[a]).sum::<f64>() / cols.len() as f64).collect();
    let exact_rays = if diagram.positive.period_structure().is_some() { stationary_rays(diagram, Side::Positive)? } else { vec![] };
    let non_atomic_ray = exact_rays
        .iter()
        .filter(|r| !r.atomic && r.ray.iter().all(|x| *x > Q::zero()))
        .max_by(|a, b| a.eigenvalue.cmp(&b.eigenvalue))
        .map(|r| r.ray.clone());
    let atomic_rays: Vec<Vec<Q>> = exact_rays.iter().filter(|r| r.atomic).map(|r| r.ray.clone()).collect();
    let classes = s.support_classes();
    let verdict = if !components.is_empty() || classes >= 2 {
        WeightVerdict::MultipleOrAtomic
    } else if s.hilbert_diameter < tol && ray.iter().all(|x| *x > 0.0) {
        WeightVerdict::UniqueNonAtomic
    } else {
        WeightVerdict::Inconclusive
    };
    Ok(UniqueWeightReport {
        verdict,
        depth,
        hilbert_diameter: s.hilbert_diameter,
        support_classes: classes,
        ray,
        components,
        exact_rays,
        non_atomic_ray,
        atomic_rays,
        divergence,
    })
}
