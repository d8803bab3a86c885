//! Acceptance criteria. Each check prints one PASS/FAIL line; the process
//! exits nonzero if any fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use brattelikit::certify::{certify, detect_accumulation, CertifyConfig, Verdict};
use brattelikit::components::{periodic_component_scan, Minimality};
use brattelikit::cone::{cone_diameters, unique_weight_report};
use brattelikit::examples::{chacon, fibonacci, mpn_family, odometer_tower, single_vertex_often, two_chains};
use brattelikit::orders::OrderedSide;
use brattelikit::paths::{metamour, metamour_plus, orbit, Extension, Metamour, TruncatedPath};
use brattelikit::random::{random_bundle, random_diagram, rng, RandomSpec};
use brattelikit::renorm::renorm_times;
use brattelikit::source::NRule;
use brattelikit::stacks::{build_stacks, code_orbit, iet_at_depth};
use brattelikit::surface::{build_surface_with, functoriality_check, renorm_map, teichmuller_deform, FlatSurfaceModel};
use brattelikit::weights::{biinfinite_normalize, mpn_weight_series, SeriesVerdict};
use brattelikit::{BiInfiniteDiagram, Scalar, Side, TransitionMatrix, Q};
use rand::Rng;

const TIMES_TOL: f64 = 1e-12;
const TIMES_BUDGET: Duration = Duration::from_secs(1);
const FUNCTORIALITY_TOL: f64 = 1e-9;
const FUNCTORIALITY_BUDGET: Duration = Duration::from_secs(30);
const CONJUGACY_BUDGET: Duration = Duration::from_secs(10);
const HILBERT_TARGET: f64 = 1e-10;
const BLOCK_FLOOR: f64 = 0.1;
const TERM_REL_TOL: f64 = 1e-12;
const SUM_REL_TOL: f64 = 1e-9;
const INTERVAL_REL_TOL: f64 = 1e-12;
const METAMOUR_BUDGET: Duration = Duration::from_secs(60);
const AREA_TOL: f64 = 1e-12;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn fib_matrix() -> TransitionMatrix {
    TransitionMatrix::lit(&[[1, 1], [1, 0]])
}

fn c1_fibonacci_times() -> Outcome {
    let start = Instant::now();
    let b = fibonacci();
    let s = renorm_times(&b.diagram, &b.plus, 30).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let ln_phi = ((1.0 + 5f64.sqrt()) / 2.0).ln();
    let worst = (1..=30).map(|k| (s.t(k) - k as f64 * ln_phi).abs()).fold(0.0, f64::max);
    check(worst < TIMES_TOL, format!("max |t_k - k ln phi| = {worst:e}"))?;
    check(elapsed < TIMES_BUDGET, format!("took {elapsed:?}"))?;
    Ok(format!("max error {worst:.1e}, {elapsed:.2?}"))
}

fn c2_functoriality() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut runs = 0;
    let fib = fibonacci();
    let cha = chacon();
    for k in 1..=4 {
        worst = worst.max(functoriality_check(&fib, k, 8, 2, FUNCTORIALITY_TOL).map_err(|e| format!("fibonacci k={k}: {e}"))?.deviation);
        worst = worst.max(functoriality_check(&cha, k, 8, 2, FUNCTORIALITY_TOL).map_err(|e| format!("chacon k={k}: {e}"))?.deviation);
        runs += 2;
    }
    for seed in 0..25u64 {
        let depth = 1 + (seed as usize % 6);
        let spec = RandomSpec { max_vertices: 4, depth, max_entry: 2, random_orders: true };
        let b = random_bundle(seed, &spec, 4 + 6 - depth).map_err(|e| e.to_string())?;
        for k in 1..=4 {
            let r = functoriality_check(&b, k, 8, 2, FUNCTORIALITY_TOL).map_err(|e| format!("random seed {seed} k={k}: {e}"))?;
            worst = worst.max(r.deviation);
            runs += 1;
        }
    }
    let elapsed = start.elapsed();
    check(elapsed < FUNCTORIALITY_BUDGET, format!("took {elapsed:?}"))?;
    Ok(format!("{runs} comparisons, max deviation {worst:.1e}, {elapsed:.2?}"))
}

/// Itinerary of the IET orbit of the midpoint of floor `floor` of stack 0,
/// against the Vershik orbit of that floor's path.
fn conjugacy<S: Scalar>(b: &brattelikit::bundle::WeightedDiagram<S>, depth: usize, floor: usize, steps: usize) -> Result<usize, String> {
    let side = OrderedSide::new(&b.diagram, &b.orders, Side::Positive, depth).map_err(|e| e.to_string())?;
    let st = build_stacks(&side, &b.plus, depth).map_err(|e| e.to_string())?;
    let cell = &st.stacks[0][floor];
    check(st.stacks[0].len() > floor + steps, format!("stack of height {} too short", st.stacks[0].len()))?;
    let two = S::from_u64(2);
    let x = (cell.start.clone() + cell.end.clone()) / two;
    let t = iet_at_depth(&side, &b.plus, depth).map_err(|e| e.to_string())?;
    let coded = code_orbit(&t, &x, steps);
    let vo = orbit(&side, &TruncatedPath::free(cell.path.clone()), steps as i64, depth, &Extension::default());
    check(coded.gap_at.is_none() && vo.stop.is_none(), "orbit stopped early")?;
    check(coded.symbols == vo.itinerary, "itineraries differ")?;
    Ok(coded.symbols.len())
}

fn c3_conjugacy() -> Outcome {
    let start = Instant::now();
    let n_fib = conjugacy(&fibonacci(), 21, 0, 10_000)?;
    let n_cha = conjugacy(&chacon(), 7, 1_000, 1_000)?;
    let elapsed = start.elapsed();
    check(elapsed < CONJUGACY_BUDGET, format!("took {elapsed:?}"))?;
    Ok(format!("fibonacci {n_fib} symbols, chacon {n_cha} symbols from floor 1000, {elapsed:.2?}"))
}

fn c4_chacon() -> Outcome {
    let d = chacon().diagram;
    let r = unique_weight_report(&d, 30, 1e-9).map_err(|e| e.to_string())?;
    let ray = r.non_atomic_ray.clone().ok_or("no non-atomic ray")?;
    // independent check: F^T x = 3 x, and (0,1) is fixed
    let f = TransitionMatrix::mpn(3, 1);
    let ft = |x: &[Q]| f.apply_transpose(x);
    check(ray == vec![Q::new(2, 3), Q::new(1, 3)], format!("ray {ray:?}"))?;
    check(ft(&ray) == vec![Q::new(2, 1), Q::new(1, 1)], "ray is not an eigenvector for 3")?;
    let atom = vec![Q::from_int(0), Q::from_int(1)];
    check(r.atomic_rays.contains(&atom), format!("atomic rays {:?}", r.atomic_rays))?;
    check(ft(&atom) == atom, "atom not fixed")?;
    for depth in 1..=20 {
        let n = periodic_component_scan(&d, depth).map_err(|e| e.to_string())?.len();
        check(n == 1, format!("{n} components at depth {depth}"))?;
    }
    Ok("ray (2/3, 1/3), atom (0, 1), one periodic component at depths 1..20".into())
}

/// `|ln(F_{k+1} F_{k-1} / F_k^2)|`, the Hilbert diameter of the columns of `F^k`.
fn fibonacci_diameter(k: usize) -> f64 {
    let mut f = vec![0u128, 1];
    while f.len() < k + 3 {
        let n = f[f.len() - 1] + f[f.len() - 2];
        f.push(n);
    }
    let (a, b, c) = (f[k + 1], f[k - 1], f[k]);
    let exact = (a * b) as i128 - (c * c) as i128;
    (exact as f64 / (c as f64 * c as f64)).ln_1p().abs()
}

fn c5_cone() -> Outcome {
    let d = cone_diameters(&BiInfiniteDiagram::stationary(fib_matrix()), 60).map_err(|e| e.to_string())?;
    for k in 1..d.len() {
        check(d[k] <= d[k - 1], format!("diameter grew at depth {k}: {} > {}", d[k], d[k - 1]))?;
    }
    let by = (0..=60).find(|&k| d[k] < HILBERT_TARGET).ok_or(format!("diameter {} at depth 60", d[60]))?;
    for k in [2, 10, 20, 30] {
        let o = fibonacci_diameter(k);
        check((d[k] - o).abs() <= 1e-9 * o, format!("depth {k}: {} vs Cassini {o}", d[k]))?;
    }
    let blocks = cone_diameters(&two_chains().map_err(|e| e.to_string())?.diagram, 60).map_err(|e| e.to_string())?;
    let low = blocks.iter().cloned().fold(f64::INFINITY, f64::min);
    check(low > BLOCK_FLOOR, format!("block-diagonal diameter fell to {low}"))?;
    Ok(format!("fibonacci below {HILBERT_TARGET:e} from depth {by} (d60 = {:.1e}), block-diagonal min {low}", d[60]))
}

fn c6_mpn() -> Outcome {
    let b = mpn_family(3, &NRule::DivergentPower, 47).map_err(|e| e.to_string())?;
    let w = detect_accumulation(&b.diagram, 44, 3).map_err(|e| e.to_string())?.ok_or("no accumulation")?;
    let expected: Vec<usize> = (4..=6).map(|i| i * (i + 1)).collect();
    check(w.subsequence == expected, format!("subsequence {:?}", w.subsequence))?;
    let chacon = BiInfiniteDiagram::stationary(TransitionMatrix::mpn(3, 1));
    for (&k, &md) in w.subsequence.iter().zip(&w.match_depths) {
        check(md >= 3, format!("match depth {md} at {k}"))?;
        // compare the shifted levels with Chacon's directly
        let s = b.diagram.shift(k).map_err(|e| e.to_string())?;
        for l in 1..=3i64 {
            for j in [l, -l] {
                check(s.matrix_at(j).ok() == chacon.matrix_at(j).ok(), format!("shift {k} level {j} differs from Chacon"))?;
            }
        }
    }
    let series = mpn_weight_series(3, &NRule::DivergentPower, 8).map_err(|e| e.to_string())?;
    // terms a_i / 3^i: n_1 = 3^3 sits at level 3, n_2 = 3^8 at level 8
    check(series.terms[3] == Q::from_int(1) && series.terms[8] == Q::from_int(1), "jump terms are not 1")?;
    check(matches!(series.verdict, SeriesVerdict::Unbounded { .. }), format!("series verdict {:?}", series.verdict))?;
    check(series.routes_agree, "series routes disagree")?;
    let c = certify(&b, &CertifyConfig { max_shift: 44, ..Default::default() }).map_err(|e| e.to_string())?;
    check(c.verdict == Verdict::LimitUeButNoFiniteMeasure, format!("verdict {:?}", c.verdict))?;
    Ok(format!("k_i = {:?}, match depths {:?}, series unbounded by depth 8, {:?}", w.subsequence, w.match_depths, c.verdict))
}

fn c7_divergence() -> Outcome {
    let c = certify(&fibonacci(), &CertifyConfig::default()).map_err(|e| e.to_string())?;
    let q = c.quantities.as_ref().ok_or("no quantities")?;
    let div = c.divergence.as_ref().ok_or("no divergence report")?;
    let l = c.limits.as_ref().ok_or("no limits")?;
    let norm = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max);
    let d = 4.0 * (norm(&l.w_star[0]) + norm(&l.h_star));
    let cc = q.components as f64;
    let tau = (cc * d / (q.epsilon * q.epsilon) + (cc - 1.0) / q.delta).powi(-2);
    check((tau - q.term_value).abs() <= TERM_REL_TOL * tau, format!("term {} vs recomputed {tau}", q.term_value))?;
    for t in &div.terms {
        check((t - tau).abs() <= TERM_REL_TOL * tau, format!("term {t} drifts from {tau}"))?;
    }
    check(div.terms.len() == 100, "expected 100 terms")?;
    let s100 = div.partial_sums[99];
    check((s100 - 100.0 * tau).abs() <= SUM_REL_TOL * 100.0 * tau, format!("S_100 = {s100} vs {}", 100.0 * tau))?;
    let bound = div.mu * (-3.0 * div.mu).exp() * tau;
    check((div.interval_bound - bound).abs() <= INTERVAL_REL_TOL * bound, format!("interval bound {} vs {bound}", div.interval_bound))?;
    check(div.interval_direct >= div.interval_bound, "direct interval value below the bound")?;
    check(div.diverges, "not flagged divergent")?;
    Ok(format!("tau = {tau:.6e}, S_100 = {s100:.6e}, mu = {:.4}, interval bound {:.6e}", div.mu, div.interval_bound))
}

fn c8_single_vertex() -> Outcome {
    let mut lines = vec![];
    let bundles = [
        ("single-vertex-often", single_vertex_often().map_err(|e| e.to_string())?),
        ("odometer-2", odometer_tower(2).map_err(|e| e.to_string())?),
        ("odometer-5", odometer_tower(5).map_err(|e| e.to_string())?),
    ];
    for (name, b) in bundles {
        let c = certify(&b, &CertifyConfig::default()).map_err(|e| e.to_string())?;
        check(c.verdict == Verdict::UniquelyErgodic, format!("{name}: {:?} {:?}", c.verdict, c.notes))?;
        check(matches!(c.minimality, Some(Minimality::Minimal { .. })), format!("{name}: minimality {:?}", c.minimality))?;
        check(c.single_vertex_levels.len() >= 3, format!("{name}: single-vertex levels {:?}", c.single_vertex_levels))?;
        for &k in &c.single_vertex_levels {
            check(b.diagram.level_size(k as i64).map_err(|e| e.to_string())? == 1, "level is not a single vertex")?;
            check(metamour_plus(&b.diagram, k as i64, 8).map_err(|e| e.to_string())? == Metamour::Finite(0), format!("{name}: Δ⁺({k}) ≠ 0"))?;
        }
        lines.push(format!("{name} UE ({} single-vertex levels)", c.single_vertex_levels.len()));
    }
    Ok(lines.join(", "))
}

/// Smallest `m ≤ cap` such that some path of length `m` from `v` and some
/// path of length `m` from `w` (starting at vertex level `k`) end together.
fn brute_force_metamour(d: &BiInfiniteDiagram, k: i64, v: usize, w: usize, cap: usize) -> Option<usize> {
    let mut paths_v: Vec<Vec<usize>> = vec![vec![v]];
    let mut paths_w: Vec<Vec<usize>> = vec![vec![w]];
    for m in 0..=cap {
        let ends_v: BTreeSet<usize> = paths_v.iter().map(|p| *p.last().expect("nonempty")).collect();
        if paths_w.iter().any(|p| ends_v.contains(p.last().expect("nonempty"))) {
            return Some(m);
        }
        if m == cap {
            break;
        }
        let f = d.forward(k + m as i64).expect("level exists");
        let extend = |paths: &Vec<Vec<usize>>| {
            let mut out = vec![];
            for p in paths {
                let u = *p.last().expect("nonempty");
                for r in 0..f.rows() {
                    for _copy in 0..f.get(r, u) {
                        let mut q = p.clone();
                        q.push(r);
                        out.push(q);
                    }
                }
            }
            out
        };
        paths_v = extend(&paths_v);
        paths_w = extend(&paths_w);
    }
    None
}

fn c9_metamour() -> Outcome {
    let start = Instant::now();
    let mut pairs = 0;
    let mut r = rng(2024);
    for _ in 0..100 {
        let depth = r.gen_range(1..=6);
        let spec = RandomSpec { max_vertices: 3, depth, max_entry: 2, random_orders: false };
        let d = random_diagram(&mut r, &spec);
        for k in [-(depth as i64), 0] {
            let cap = 6usize.min((depth as i64 - k) as usize);
            let n = d.level_size(k).map_err(|e| e.to_string())?;
            for v in 0..n {
                for w in 0..n {
                    let bfs = metamour(&d, k, v, w, cap).map_err(|e| e.to_string())?.finite();
                    let brute = brute_force_metamour(&d, k, v, w, cap);
                    check(bfs == brute, format!("level {k} pair ({v},{w}): bfs {bfs:?} brute force {brute:?}"))?;
                    pairs += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    check(elapsed < METAMOUR_BUDGET, format!("took {elapsed:?}"))?;
    Ok(format!("{pairs} vertex pairs agree, {elapsed:.2?}"))
}

fn rect_area<S: Scalar>(s: &FlatSurfaceModel<S>) -> S {
    S::sum_of(&s.rectangles.iter().map(|r| (r.x1.clone() - r.x0.clone()) * (r.y1.clone() - r.y0.clone())).collect::<Vec<_>>())
}

fn c10_area() -> Outcome {
    let mut exact = vec![chacon(), odometer_tower(3).map_err(|e| e.to_string())?];
    for seed in 0..10 {
        let spec = RandomSpec { max_vertices: 4, ..Default::default() };
        exact.push(random_bundle(100 + seed, &spec, 4).map_err(|e| e.to_string())?);
    }
    for b in &exact {
        // undo the normalization, then redo it
        let scaled = b.minus.scaled(&Q::new(7, 3));
        let (plus, minus) = biinfinite_normalize(&b.plus, &scaled).map_err(|e| e.to_string())?;
        let nb = brattelikit::bundle::WeightedDiagram::new(b.diagram.clone(), b.orders.clone(), plus, minus).map_err(|e| e.to_string())?;
        let s = build_surface_with(&nb, 6, 2).map_err(|e| e.to_string())?;
        check(rect_area(&s) == Q::from_int(1) && s.area == Q::from_int(1), format!("area {:?}", s.area))?;
        for k in 1..=3 {
            let m = renorm_map(&s, &nb, k).map_err(|e| e.to_string())?;
            check(rect_area(&m) == Q::from_int(1), format!("area after renorm_map({k}) is {:?}", rect_area(&m)))?;
        }
    }
    let fib = fibonacci();
    let s = build_surface_with(&fib, 8, 2).map_err(|e| e.to_string())?;
    let mut worst = (rect_area(&s) - 1.0).abs();
    for t in [0.5, -0.5, 2.0, -2.0] {
        worst = worst.max((rect_area(&teichmuller_deform(&s, t)) - 1.0).abs());
    }
    for k in 1..=4 {
        worst = worst.max((rect_area(&renorm_map(&s, &fib, k).map_err(|e| e.to_string())?) - 1.0).abs());
    }
    check(worst < AREA_TOL, format!("float area drift {worst:e}"))?;
    Ok(format!("{} exact bundles at area 1, float drift {worst:.1e} under g_t and renormalization", exact.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("fibonacci renormalization times", c1_fibonacci_times),
        ("functoriality of renormalization", c2_functoriality),
        ("vershik / IET conjugacy", c3_conjugacy),
        ("chacon measures", c4_chacon),
        ("cone oracle", c5_cone),
        ("M(p,n) family", c6_mpn),
        ("divergence sums", c7_divergence),
        ("single-vertex criterion", c8_single_vertex),
        ("metamour correctness", c9_metamour),
        ("area and normalization", c10_area),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS criterion {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
