//! The unique-ergodicity certificate: accumulation of the shift orbit,
//! minimality of the limit, limit weights, the geometric quantities and the
//! divergence sums, cross-checked against the cone oracle.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::bundle::WeightedDiagram;
use crate::components::{minimality_certificate, Minimality};
use crate::cone::{unique_weight_report, WeightVerdict};
use crate::diagram::{edge_level_above, BiInfiniteDiagram};
use crate::error::{Error, Result};
use crate::matrix::TransitionMatrix;
use crate::paths::{metamour_plus, Metamour};
use crate::renorm::{heights, renorm_times};
use crate::scalar::Scalar;
use crate::source::{MatrixSource, Side, TailPolicy};
use crate::weights::pf_weights;

/// The matrices of `σ^n(𝓑)` on edge levels `-d..=-1` and `1..=d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    /// Levels `-1, -2, …, -d` in stored form.
    pub negative: Vec<TransitionMatrix>,
    /// Levels `1, 2, …, d`.
    pub positive: Vec<TransitionMatrix>,
}

impl Window {
    pub fn depth(&self) -> usize {
        self.positive.len()
    }

    /// The bi-infinite diagram repeating this window on both sides.
    pub fn periodic_completion(&self) -> BiInfiniteDiagram {
        let weld = self.positive.first().map_or(1, TransitionMatrix::cols);
        BiInfiniteDiagram::new(
            MatrixSource::ExplicitWindow { matrices: self.positive.clone(), tail_policy: TailPolicy::Repeat },
            MatrixSource::ExplicitWindow { matrices: self.negative.clone(), tail_policy: TailPolicy::Repeat },
            weld,
        )
    }
}

/// Window of `σ^n(𝓑)` of radius `d`, read through the shifted diagram.
pub fn window_at(diagram: &BiInfiniteDiagram, n: usize, d: usize) -> Result<Window> {
    let s = diagram.shift(n)?;
    Ok(Window {
        negative: (1..=d as i64).map(|l| s.matrix_at(-l)).collect::<Result<_>>()?,
        positive: (1..=d as i64).map(|l| s.matrix_at(l)).collect::<Result<_>>()?,
    })
}

/// The same window read directly off the original levels.
fn window_direct(diagram: &BiInfiniteDiagram, n: usize, d: usize) -> Result<Window> {
    let n = n as i64;
    Ok(Window {
        negative: (1..=d as i64).map(|l| diagram.matrix_at(edge_level_above(n - l))).collect::<Result<_>>()?,
        positive: (1..=d as i64).map(|l| diagram.matrix_at(n + l)).collect::<Result<_>>()?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AccumulationWitness {
    pub subsequence: Vec<usize>,
    /// For each entry of `subsequence`, the largest radius (up to the search
    /// bound) at which its window still equals the limit's.
    pub match_depths: Vec<usize>,
    pub match_depth: usize,
    pub limit_window: Window,
    /// Set when the recurrence follows from a known period structure.
    pub exact: bool,
    pub hits: usize,
}

impl AccumulationWitness {
    pub fn limit(&self) -> BiInfiniteDiagram {
        self.limit_window.periodic_completion()
    }

    /// Re-fetch every window from the original levels and compare.
    pub fn verify(&self, diagram: &BiInfiniteDiagram) -> Result<bool> {
        for &k in &self.subsequence {
            if window_direct(diagram, k, self.match_depth)? != self.limit_window {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Largest `r ≤ max_r` with the radius-`r` window at `n` equal to the
/// corresponding part of `limit` (a window of radius at least `max_r`).
fn match_radius(diagram: &BiInfiniteDiagram, n: usize, limit: &BiInfiniteDiagram, max_r: usize) -> usize {
    let mut r = 0;
    while r < max_r {
        let l = r as i64 + 1;
        let ok = match (diagram.matrix_at(n as i64 + l), diagram.matrix_at(edge_level_above(n as i64 - l))) {
            (Ok(p), Ok(m)) => limit.matrix_at(l).is_ok_and(|x| x == p) && limit.matrix_at(-l).is_ok_and(|x| x == m),
            _ => false,
        };
        if !ok {
            break;
        }
        r += 1;
    }
    r
}

/// Windows of radius `window_depth` over shifts `1..=max_shift`; the most
/// frequent one is the limit. `None` when no window occurs twice.
pub fn detect_accumulation(diagram: &BiInfiniteDiagram, max_shift: usize, window_depth: usize) -> Result<Option<AccumulationWitness>> {
    if window_depth == 0 || max_shift < window_depth {
        return Err(Error::BadParams("need 0 < window depth <= max shift".into()));
    }
    let periods = (diagram.source(Side::Positive).period_structure(), diagram.source(Side::Negative).period_structure());
    let exact_period = match periods {
        (Some((0, p)), Some((0, q))) => Some(num_integer::lcm(p, q)),
        _ => None,
    };
    let d = match exact_period {
        Some(p) => window_depth.div_ceil(p) * p,
        None => window_depth,
    };
    let mut windows: Vec<(usize, Window)> = vec![];
    for n in 1..=max_shift {
        match window_at(diagram, n, d) {
            Ok(w) => windows.push((n, w)),
            Err(Error::EntryOverflow { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    let mut counts: HashMap<&Window, (usize, usize)> = HashMap::new();
    for (n, w) in &windows {
        counts.entry(w).or_insert((0, *n)).0 += 1;
    }
    let Some((limit, (hits, _))) = counts.into_iter().max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(b.1 .1.cmp(&a.1 .1))) else {
        return Ok(None);
    };
    if hits < 2 {
        return Ok(None);
    }
    let limit = limit.clone();
    let hit_shifts: Vec<usize> = windows.iter().filter(|(_, w)| *w == limit).map(|(n, _)| *n).collect();
    let subsequence = match diagram.positive.recurrence_hint(max_shift) {
        Some(hint) => hint.into_iter().filter(|k| hit_shifts.contains(k)).collect(),
        None => hit_shifts,
    };
    if subsequence.is_empty() {
        return Ok(None);
    }
    let limit_diagram = limit.periodic_completion();
    let search = 4 * d.max(8);
    let match_depths = subsequence.iter().map(|&n| match_radius(diagram, n, &limit_diagram, search)).collect();
    Ok(Some(AccumulationWitness { subsequence, match_depths, match_depth: d, limit_window: limit, exact: exact_period.is_some(), hits }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitRoute {
    /// Rescaled weights of the input along the subsequence.
    Rescaled,
    /// Weights of the limit diagram itself (used when the input has no finite
    /// non-atomic weight to rescale).
    LimitCone,
    SingleVertex,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LimitWeights {
    pub route: LimitRoute,
    /// `w⁺_*` on levels `0..=levels` of the limit.
    pub w_star: Vec<Vec<f64>>,
    pub h_star: Vec<f64>,
    /// The rescaled heights along the subsequence (one entry for the cone route).
    pub h_sequence: Vec<Vec<f64>>,
    pub oscillation: f64,
    pub pairing: f64,
    pub used_shifts: Vec<usize>,
}

/// Rescaled widths `e^{t_κ} w⁺_{κ+j}` and heights `e^{-t_κ} h^κ` along the
/// subsequence, with their limits read off once they stop moving.
pub fn limit_weights<S: Scalar>(witness: &AccumulationWitness, b: &WeightedDiagram<S>, levels: usize, tol: f64) -> Result<LimitWeights> {
    let used: Vec<usize> = witness.subsequence.iter().copied().filter(|k| k + levels <= b.depth_plus()).collect();
    if used.is_empty() {
        return Err(Error::WeightDepth { needed: witness.subsequence[0] + levels, available: b.depth_plus() });
    }
    let top = *used.last().expect("nonempty");
    let h = heights(&b.diagram, &b.minus, top)?;
    let mut ws: Vec<Vec<Vec<f64>>> = vec![];
    let mut hs: Vec<Vec<f64>> = vec![];
    for &k in &used {
        let total = S::sum_of(&b.plus.levels[k]);
        ws.push((0..=levels).map(|j| b.plus.levels[k + j].iter().map(|x| (x.clone() / total.clone()).to_f64()).collect()).collect());
        hs.push(h.levels[k].iter().map(|x| (x.clone() * total.clone()).to_f64()).collect());
    }
    let tail = used.len() / 2;
    let mut oscillation = 0.0f64;
    for i in tail.max(1)..used.len() {
        for (a, c) in ws[i].iter().flatten().zip(ws[i - 1].iter().flatten()).chain(hs[i].iter().zip(&hs[i - 1])) {
            oscillation = oscillation.max((a - c).abs());
        }
    }
    if oscillation > tol {
        return Err(Error::NotCauchy { oscillation });
    }
    let w_star = ws.pop().expect("nonempty");
    let h_star = hs.last().expect("nonempty").clone();
    let pairing = w_star[0].iter().zip(&h_star).map(|(a, c)| a * c).sum();
    Ok(LimitWeights { route: LimitRoute::Rescaled, w_star, h_star, h_sequence: hs, oscillation, pairing, used_shifts: used })
}

/// Weights of the limit diagram: the non-atomic ray `ray` propagated through
/// its positive levels, heights pulled back from deep in its negative side and
/// scaled so the pairing is 1.
pub fn limit_weights_from_cone(limit: &BiInfiniteDiagram, ray: &[f64], levels: usize) -> Result<LimitWeights> {
    let total: f64 = ray.iter().sum();
    let mut w_star = vec![ray.iter().map(|x| x / total).collect::<Vec<f64>>()];
    let plus = pf_weights(limit, Side::Positive, levels).map(|(w, _)| w).ok();
    for j in 1..=levels {
        match &plus {
            // same ray, read at level j and rescaled to the level-0 normalization
            Some(w) => {
                let s0: f64 = w.levels[0].iter().sum();
                w_star.push(w.levels[j].iter().map(|x| x / s0).collect());
            }
            None => return Err(Error::Invalid("limit weights beyond level 0 unavailable".into())),
        }
    }
    let deep = 64;
    let one = limit.one_sided(Side::Negative, deep)?;
    let mut h = vec![1.0f64; one.sizes[deep]];
    for k in (1..=deep).rev() {
        h = one.g(k).apply_transpose(&h);
        let m = h.iter().cloned().fold(0.0, f64::max);
        h.iter_mut().for_each(|x| *x /= m);
    }
    let pairing: f64 = w_star[0].iter().zip(&h).map(|(a, c)| a * c).sum();
    let h_star: Vec<f64> = h.iter().map(|x| x / pairing).collect();
    Ok(LimitWeights {
        route: LimitRoute::LimitCone,
        w_star,
        h_sequence: vec![h_star.clone()],
        h_star,
        oscillation: 0.0,
        pairing: 1.0,
        used_shifts: vec![],
    })
}

/// `H₀`: heights that end below `tol` without increasing over the second half
/// of the sequence. `G₀` is the rest and must be nonempty.
pub fn partition_g0_h0(h_sequence: &[Vec<f64>], tol: f64) -> Result<(Vec<usize>, Vec<usize>)> {
    let last = h_sequence.last().ok_or(Error::EmptyG0)?;
    let tail = &h_sequence[h_sequence.len() / 2..];
    let (mut g0, mut h0) = (vec![], vec![]);
    for v in 0..last.len() {
        let decreasing = tail.windows(2).all(|p| p[1][v] <= p[0][v] + tol);
        if last[v] < tol && decreasing {
            h0.push(v);
        } else {
            g0.push(v);
        }
    }
    if g0.is_empty() {
        return Err(Error::EmptyG0);
    }
    Ok((g0, h0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CriterionQuantities {
    pub delta_metamour: usize,
    pub g0: Vec<usize>,
    pub h0: Vec<usize>,
    pub epsilon: f64,
    pub epsilon_bound: f64,
    pub eta: f64,
    /// Area of the points at distance at least `ε` from the `G₀` rectangle boundaries.
    pub good_area: f64,
    pub area_feasible: bool,
    pub delta: f64,
    pub diameter: f64,
    pub components: usize,
    pub term_value: f64,
}

fn good_area(w: &[f64], h: &[f64], g0: &[usize], eps: f64) -> f64 {
    g0.iter().map(|&v| (w[v] - 2.0 * eps).max(0.0) * (h[v] - 2.0 * eps).max(0.0)).sum()
}

/// `τ = (C D / ε² + (C - 1) / δ)^{-2}`.
pub fn term_value(components: usize, diameter: f64, epsilon: f64, delta: f64) -> f64 {
    let c = components as f64;
    let inner = c * diameter / (epsilon * epsilon) + (c - 1.0) / delta;
    inner.powi(-2)
}

/// Fill in `ε`, `δ_{ε,Δ}`, `D`, `C` and the summand. Without an explicit `ε`
/// the default is the smaller of `min w⁺_*/4` and half the largest `ε` that
/// keeps the good set's area at least `1 - η`.
pub fn criterion_quantities(limits: &LimitWeights, g0: Vec<usize>, h0: Vec<usize>, delta_metamour: usize, eta: f64, epsilon: Option<f64>) -> Result<CriterionQuantities> {
    let w = &limits.w_star[0];
    let h = &limits.h_star;
    let min_w = w.iter().cloned().fold(f64::INFINITY, f64::min);
    let epsilon_bound = min_w / 3.0;
    let (mut lo, mut hi) = (0.0f64, epsilon_bound);
    for _ in 0..200 {
        let mid = (lo + hi) / 2.0;
        if good_area(w, h, &g0, mid) >= 1.0 - eta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let epsilon = match epsilon {
        Some(e) if e > 0.0 && e < epsilon_bound => e,
        Some(e) => return Err(Error::EpsilonTooLarge { epsilon: e, bound: epsilon_bound }),
        None => (min_w / 4.0).min(0.5 * lo),
    };
    if !(epsilon > 0.0) {
        return Err(Error::EpsilonTooLarge { epsilon, bound: epsilon_bound });
    }
    let area = good_area(w, h, &g0, epsilon);
    let level = limits.w_star.get(delta_metamour).ok_or(Error::WeightDepth { needed: delta_metamour, available: limits.w_star.len() - 1 })?;
    let delta = epsilon.min(level.iter().cloned().fold(f64::INFINITY, f64::min) / 4.0);
    let norm = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max);
    let diameter = 4.0 * (norm(w) + norm(h));
    let components = g0.len();
    Ok(CriterionQuantities {
        delta_metamour,
        g0,
        h0,
        epsilon,
        epsilon_bound,
        eta,
        good_area: area,
        area_feasible: area >= 1.0 - eta,
        delta,
        diameter,
        components,
        term_value: term_value(components, diameter, epsilon, delta),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DivergenceReport {
    pub times: Vec<f64>,
    pub min_gap: f64,
    pub mu: f64,
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// `μ e^{-3μ} τ`, the lower bound per interval around each time.
    pub interval_bound: f64,
    /// `μ (e^{3μ/2} C D / ε² + e^{μ/2} (C - 1)/δ)^{-2}`, the same bound before
    /// the exponentials are pulled out.
    pub interval_direct: f64,
    pub diverges: bool,
}

/// The discrete sum over the subsequence and its `μ`-interval extension.
/// The summand is recomputed from the quantities for every term.
pub fn divergence_check(q: &CriterionQuantities, times: &[f64], n_terms: usize, mu: Option<f64>) -> DivergenceReport {
    let min_gap = times.windows(2).map(|p| p[1] - p[0]).fold(f64::INFINITY, f64::min);
    let mu = mu.unwrap_or(if min_gap.is_finite() { min_gap / 2.0 } else { 0.5 });
    let terms: Vec<f64> = (0..n_terms).map(|_| term_value(q.components, q.diameter, q.epsilon, q.delta)).collect();
    let mut partial_sums = Vec::with_capacity(n_terms);
    let mut acc = 0.0;
    for t in &terms {
        acc += t;
        partial_sums.push(acc);
    }
    let tau = q.term_value;
    let c = q.components as f64;
    let interval_bound = mu * (-3.0 * mu).exp() * tau;
    let inner = (1.5 * mu).exp() * c * q.diameter / (q.epsilon * q.epsilon) + (0.5 * mu).exp() * (c - 1.0) / q.delta;
    let interval_direct = mu * inner.powi(-2);
    let constant = terms.iter().all(|t| (t - tau).abs() <= 1e-12 * tau.max(1.0));
    let diverges = tau > 0.0 && min_gap > 0.0 && constant && n_terms > 0 && interval_direct >= interval_bound * (1.0 - 1e-12);
    DivergenceReport { times: times.to_vec(), min_gap, mu, terms, partial_sums, interval_bound, interval_direct, diverges }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    UniquelyErgodic,
    LimitUeButNoFiniteMeasure,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CertifyConfig {
    pub max_shift: usize,
    pub window_depth: usize,
    pub n_terms: usize,
    pub eta: f64,
    pub epsilon: Option<f64>,
    pub mu: Option<f64>,
    pub tol: f64,
    pub metamour_cap: usize,
    pub oracle_depth: usize,
    pub minimality_depth: usize,
    /// Limit weight levels kept (at least the metamour value of the limit).
    pub levels: usize,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            max_shift: 40,
            window_depth: 3,
            n_terms: 100,
            eta: 0.05,
            epsilon: None,
            mu: None,
            tol: 1e-9,
            metamour_cap: 16,
            oracle_depth: 40,
            minimality_depth: 32,
            levels: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OracleCheck {
    pub verdict: WeightVerdict,
    pub hilbert_diameter: f64,
    pub depth: usize,
    pub divergence_flagged: bool,
    /// `None` when either side is inconclusive.
    pub agrees: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Certificate {
    pub verdict: Verdict,
    pub route: String,
    pub witness: Option<AccumulationWitness>,
    pub witness_verified: Option<bool>,
    pub minimality: Option<Minimality>,
    pub single_vertex_levels: Vec<usize>,
    pub limits: Option<LimitWeights>,
    pub quantities: Option<CriterionQuantities>,
    pub divergence: Option<DivergenceReport>,
    pub oracle: OracleCheck,
    pub notes: Vec<String>,
    pub config: CertifyConfig,
}

impl Certificate {
    pub fn partial_sums(&self) -> &[f64] {
        self.divergence.as_ref().map_or(&[], |d| &d.partial_sums)
    }
}

fn oracle_agrees(v: Verdict, o: WeightVerdict) -> Option<bool> {
    match (v, o) {
        (Verdict::Inconclusive, _) | (_, WeightVerdict::Inconclusive) => None,
        (Verdict::UniquelyErgodic, w) => Some(w == WeightVerdict::UniqueNonAtomic),
        (Verdict::LimitUeButNoFiniteMeasure, w) => Some(w == WeightVerdict::MultipleOrAtomic),
    }
}

fn metamour_value(diagram: &BiInfiniteDiagram, k: i64, cap: usize) -> Result<usize> {
    match metamour_plus(diagram, k, cap)? {
        Metamour::Finite(m) => Ok(m),
        Metamour::Unknown(cap) => Err(Error::DeltaUnknown { cap }),
    }
}

/// Levels where `|𝓥_k| = 1`, if they keep recurring through `up_to`.
fn single_vertex_levels(diagram: &BiInfiniteDiagram, up_to: usize) -> Result<Vec<usize>> {
    let mut out = vec![];
    for k in 1..=up_to {
        if diagram.level_size(k as i64)? == 1 {
            out.push(k);
        }
    }
    Ok(out)
}

struct Route {
    name: &'static str,
    verdict: Verdict,
    witness: Option<AccumulationWitness>,
    witness_verified: Option<bool>,
    minimality: Option<Minimality>,
    limits: Option<LimitWeights>,
    quantities: Option<CriterionQuantities>,
    divergence: Option<DivergenceReport>,
}

impl Route {
    fn none(name: &'static str) -> Self {
        Route { name, verdict: Verdict::Inconclusive, witness: None, witness_verified: None, minimality: None, limits: None, quantities: None, divergence: None }
    }
}

fn single_vertex_route<S: Scalar>(b: &WeightedDiagram<S>, levels: &[usize], cfg: &CertifyConfig, notes: &mut Vec<String>) -> Result<Route> {
    let mut r = Route::none("single-vertex");
    let depth = cfg.minimality_depth.max(*levels.last().expect("nonempty"));
    r.minimality = Some(minimality_certificate(&b.diagram, depth)?);
    for &k in levels {
        let d = metamour_value(&b.diagram, k as i64, cfg.metamour_cap)?;
        if d != 0 {
            return Err(Error::Invalid(format!("metamour {d} at single-vertex level {k}")));
        }
    }
    let limits = LimitWeights {
        route: LimitRoute::SingleVertex,
        w_star: vec![vec![1.0]],
        h_star: vec![1.0],
        h_sequence: vec![vec![1.0]],
        oscillation: 0.0,
        pairing: 1.0,
        used_shifts: levels.to_vec(),
    };
    let q = criterion_quantities(&limits, vec![0], vec![], 0, cfg.eta, cfg.epsilon)?;
    let sched = renorm_times(&b.diagram, &b.plus, *levels.last().expect("nonempty"))?;
    let times: Vec<f64> = levels.iter().map(|&k| sched.t(k)).collect();
    let div = divergence_check(&q, &times, cfg.n_terms, cfg.mu);
    notes.push(format!("|V_k| = 1 at {} levels up to {}", levels.len(), levels.last().expect("nonempty")));
    if r.minimality.as_ref().is_some_and(Minimality::is_minimal) && div.diverges && q.area_feasible {
        r.verdict = Verdict::UniquelyErgodic;
    }
    r.limits = Some(limits);
    r.quantities = Some(q);
    r.divergence = Some(div);
    Ok(r)
}

fn accumulation_route<S: Scalar>(b: &WeightedDiagram<S>, cfg: &CertifyConfig, diverging: bool, notes: &mut Vec<String>) -> Result<Route> {
    let mut r = Route::none("accumulation");
    let Some(w) = detect_accumulation(&b.diagram, cfg.max_shift, cfg.window_depth)? else {
        notes.push("no recurring window among the searched shifts".into());
        return Ok(r);
    };
    r.witness_verified = Some(w.verify(&b.diagram)?);
    let limit = w.limit();
    let minimality = minimality_certificate(&limit, cfg.minimality_depth)?;
    let limit_minimal = minimality.is_minimal();
    r.minimality = Some(minimality);
    r.witness = Some(w.clone());

    if limit_minimal {
        let delta = metamour_value(&limit, 0, cfg.metamour_cap)?;
        let limits = limit_weights(&w, b, cfg.levels.max(delta), cfg.tol.max(1e-9))?;
        let (g0, h0) = partition_g0_h0(&limits.h_sequence, 1e-6)?;
        let q = criterion_quantities(&limits, g0, h0, delta, cfg.eta, cfg.epsilon)?;
        let sched = renorm_times(&b.diagram, &b.plus, *limits.used_shifts.last().expect("nonempty"))?;
        let times: Vec<f64> = limits.used_shifts.iter().map(|&k| sched.t(k)).collect();
        let div = divergence_check(&q, &times, cfg.n_terms, cfg.mu);
        if div.diverges && q.area_feasible && r.witness_verified == Some(true) {
            r.verdict = Verdict::UniquelyErgodic;
        }
        r.limits = Some(limits);
        r.quantities = Some(q);
        r.divergence = Some(div);
        return Ok(r);
    }

    let limit_report = unique_weight_report(&limit, cfg.oracle_depth, 1e-8)?;
    match &limit_report.non_atomic_ray {
        Some(ray) if diverging => {
            let ray: Vec<f64> = ray.iter().map(Scalar::to_f64).collect();
            let limits = limit_weights_from_cone(&limit, &ray, cfg.levels)?;
            let (g0, h0) = partition_g0_h0(&limits.h_sequence, 1e-6)?;
            r.quantities = criterion_quantities(&limits, g0, h0, 0, cfg.eta, cfg.epsilon).ok();
            r.limits = Some(limits);
            notes.push("limit is not minimal but carries a unique non-atomic ray; the input's weights diverge".into());
            r.verdict = Verdict::LimitUeButNoFiniteMeasure;
        }
        Some(_) => notes.push("limit is not minimal and the input shows no weight divergence".into()),
        None => notes.push("limit is not minimal and has no non-atomic ray".into()),
    }
    Ok(r)
}

/// Run the full pipeline. Errors inside a route turn into an inconclusive
/// verdict with the error recorded in `notes`.
pub fn certify<S: Scalar>(b: &WeightedDiagram<S>, cfg: &CertifyConfig) -> Result<Certificate> {
    let mut notes = vec![];
    let oracle_report = unique_weight_report(&b.diagram, cfg.oracle_depth, 1e-8)?;
    let diverging = oracle_report.divergence.as_ref().is_some_and(|d| d.flagged);

    let svl = single_vertex_levels(&b.diagram, cfg.max_shift.min(b.depth_plus()))?;
    let mut route = if svl.len() >= 3 {
        single_vertex_route(b, &svl, cfg, &mut notes).unwrap_or_else(|e| {
            notes.push(format!("single-vertex route: {e}"));
            Route::none("single-vertex")
        })
    } else {
        Route::none("single-vertex")
    };
    if route.verdict == Verdict::Inconclusive {
        route = accumulation_route(b, cfg, diverging, &mut notes).unwrap_or_else(|e| {
            notes.push(format!("accumulation route: {e}"));
            Route::none("accumulation")
        });
    }
    let oracle = OracleCheck {
        verdict: oracle_report.verdict,
        hilbert_diameter: oracle_report.hilbert_diameter,
        depth: cfg.oracle_depth,
        divergence_flagged: diverging,
        agrees: oracle_agrees(route.verdict, oracle_report.verdict),
    };
    Ok(Certificate {
        verdict: route.verdict,
        route: route.name.into(),
        witness: route.witness,
        witness_verified: route.witness_verified,
        minimality: route.minimality,
        single_vertex_levels: svl,
        limits: route.limits,
        quantities: route.quantities,
        divergence: route.divergence,
        oracle,
        notes,
        config: cfg.clone(),
    })
}
