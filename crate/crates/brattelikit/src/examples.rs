//! Built-in bundles with their expected values.

use serde::Serialize;
use serde_json::{json, Value};

use crate::bundle::{AnyBundle, WeightedDiagram};
use crate::diagram::BiInfiniteDiagram;
use crate::error::{Error, Result};
use crate::matrix::TransitionMatrix;
use crate::orders::{EdgeOrders, OrderedSide};
use crate::renorm::renorm_times;
use crate::scalar::{Scalar, Q};
use crate::source::{single_vertex_level, MatrixSource, NRule, Side};
use crate::stacks::build_stacks;
use crate::weights::{pf_weights, pf_weights_exact, solve_weights, validate_weight, WeightFunction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Provenance {
    Paper,
    Derived,
    Trivial,
}

/// One named expected value and how to measure it on the built bundle.
#[derive(Clone, Serialize)]
pub struct Expected {
    pub name: &'static str,
    pub value: f64,
    pub tol: f64,
    pub provenance: Provenance,
    #[serde(skip)]
    pub measure: fn(&AnyBundle) -> Result<f64>,
}

impl std::fmt::Debug for Expected {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Expected").field("name", &self.name).field("value", &self.value).field("tol", &self.tol).finish()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExampleSpec {
    pub name: &'static str,
    pub description: &'static str,
    pub params: Value,
    pub expected: Vec<Expected>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExpectedCheck {
    pub name: &'static str,
    pub expected: f64,
    pub measured: f64,
    pub tol: f64,
    pub ok: bool,
}

impl ExampleSpec {
    pub fn build(&self) -> Result<AnyBundle> {
        build(self.name)
    }

    /// Measure every expected value on a freshly built bundle.
    pub fn check(&self) -> Result<Vec<ExpectedCheck>> {
        let b = self.build()?;
        self.expected
            .iter()
            .map(|e| {
                let measured = (e.measure)(&b)?;
                Ok(ExpectedCheck { name: e.name, expected: e.value, measured, tol: e.tol, ok: (measured - e.value).abs() <= e.tol })
            })
            .collect()
    }
}

fn stationary_exact(d: BiInfiniteDiagram, plus_depth: usize, minus_depth: usize) -> Result<WeightedDiagram<Q>> {
    let (plus, _) = pf_weights_exact(&d, Side::Positive, plus_depth)?.ok_or_else(|| Error::Invalid("no rational PF ray".into()))?;
    let one = d.one_sided(Side::Negative, minus_depth)?;
    let minus = WeightFunction::from_top(&one, vec![Q::from_int(1); one.sizes[minus_depth]]);
    WeightedDiagram::new(d, EdgeOrders::policy_only(), plus, minus)?.normalized()
}

pub const FIBONACCI_DEPTH: usize = 64;

/// Stationary `[[1,1],[1,0]]` on both sides with PF weights, normalized.
pub fn fibonacci() -> WeightedDiagram<f64> {
    let d = BiInfiniteDiagram::stationary(TransitionMatrix::lit(&[[1, 1], [1, 0]]));
    let (plus, _) = pf_weights(&d, Side::Positive, FIBONACCI_DEPTH).expect("primitive");
    let (minus, _) = pf_weights(&d, Side::Negative, 8).expect("primitive");
    WeightedDiagram::new(d, EdgeOrders::policy_only(), plus, minus).and_then(|b| b.normalized()).expect("valid bundle")
}

/// Stationary `M(3,1)` with the non-atomic weight `3^{-k}(2/3, 1/3)`.
pub fn chacon() -> WeightedDiagram<Q> {
    stationary_exact(BiInfiniteDiagram::stationary(TransitionMatrix::mpn(3, 1)), 40, 6).expect("valid bundle")
}

/// `M(p, n_i)` at levels `(i+1)^2 - 1`, `M(p, 1)` elsewhere, identity on the
/// negative side. The positive weight is the atom `(0, 1)`: for the divergent
/// rule no finite non-atomic weight exists.
pub fn mpn_family(p: u64, n_rule: &NRule, depth: usize) -> Result<WeightedDiagram<Q>> {
    let d = BiInfiniteDiagram::new(
        MatrixSource::rule("mpn-family", json!({"p": p, "nRule": n_rule.to_json()})),
        MatrixSource::stationary(TransitionMatrix::identity(2)),
        2,
    );
    let plus = WeightFunction::new(Side::Positive, vec![vec![Q::from_int(0), Q::from_int(1)]; depth + 1]);
    let minus = WeightFunction::new(Side::Negative, vec![vec![Q::from_int(1), Q::from_int(1)]; 3]);
    WeightedDiagram::new(d, EdgeOrders::policy_only(), plus, minus)
}

/// Stationary `[[p]]`: the p-adic odometer.
pub fn odometer_tower(p: u64) -> Result<WeightedDiagram<Q>> {
    stationary_exact(BiInfiniteDiagram::stationary(TransitionMatrix::lit(&[[p]])), 40, 6)
}

pub const SINGLE_VERTEX_DEPTH: usize = 40;

/// One vertex at levels `2^m - 1` and `2^m`, Fibonacci blocks in between,
/// `[[1,1],[1,1]]` on the negative side. Weights are exact: each level is
/// pulled back from the next single-vertex level.
pub fn single_vertex_often() -> Result<WeightedDiagram<Q>> {
    let d = BiInfiniteDiagram::new(
        MatrixSource::rule("single-vertex-often", json!({})),
        MatrixSource::stationary(TransitionMatrix::lit(&[[1, 1], [1, 1]])),
        2,
    );
    let top = (SINGLE_VERTEX_DEPTH..).find(|&k| single_vertex_level(k)).expect("unbounded");
    let plus = solve_weights::<Q>(&d, Side::Positive, SINGLE_VERTEX_DEPTH, top - SINGLE_VERTEX_DEPTH)?;
    let (minus, _) = pf_weights_exact(&d, Side::Negative, 6)?.ok_or_else(|| Error::Invalid("no rational PF ray".into()))?;
    WeightedDiagram::new(d, EdgeOrders::policy_only(), plus, minus)?.normalized()
}

/// Block-diagonal `[[2,0],[0,2]]`: two odometers side by side.
pub fn two_chains() -> Result<WeightedDiagram<Q>> {
    let d = BiInfiniteDiagram::stationary(TransitionMatrix::lit(&[[2, 0], [0, 2]]));
    let plus = WeightFunction::new(Side::Positive, (0..=20).map(|k| vec![Q::new(1, 2) * Q::new(1, 2).pow(k); 2]).collect());
    let minus = WeightFunction::new(Side::Negative, (0..=6).map(|k| vec![Q::new(1, 2).pow(k); 2]).collect());
    WeightedDiagram::new(d, EdgeOrders::policy_only(), plus, minus)?.normalized()
}

/// The bundle with the diagram replaced by identities beyond level `i` on
/// both sides, weights truncated to match.
pub fn identity_tail<S: Scalar>(b: &WeightedDiagram<S>, i: usize) -> Result<WeightedDiagram<S>> {
    let t = b.truncated(i.min(b.depth_plus()), i.min(b.depth_minus()));
    WeightedDiagram::new(b.diagram.truncate(i)?, t.orders, t.plus, t.minus)
}

pub const NAMES: [&str; 8] =
    ["fibonacci", "chacon", "mpn-divergent", "mpn-bounded", "odometer-2", "odometer-3", "single-vertex-often", "two-chains"];

/// Build a bundle by catalogue name.
pub fn build(name: &str) -> Result<AnyBundle> {
    Ok(match name {
        "fibonacci" => AnyBundle::Float(fibonacci()),
        "chacon" => AnyBundle::Exact(chacon()),
        "mpn-divergent" => AnyBundle::Exact(mpn_family(3, &NRule::DivergentPower, 47)?),
        "mpn-bounded" => AnyBundle::Exact(mpn_family(3, &NRule::Constant(1), 47)?),
        "odometer-2" => AnyBundle::Exact(odometer_tower(2)?),
        "odometer-3" => AnyBundle::Exact(odometer_tower(3)?),
        "single-vertex-often" => AnyBundle::Exact(single_vertex_often()?),
        "two-chains" => AnyBundle::Exact(two_chains()?),
        other => return Err(Error::Invalid(format!("unknown example {other:?}"))),
    })
}

fn plus_level(b: &AnyBundle, k: usize, v: usize) -> Result<f64> {
    let f = b.to_float();
    f.plus.levels.get(k).and_then(|l| l.get(v)).copied().ok_or(Error::WeightDepth { needed: k, available: f.depth_plus() })
}

fn time(b: &AnyBundle, k: usize) -> Result<f64> {
    let f = b.to_float();
    Ok(renorm_times(&f.diagram, &f.plus, k)?.t(k))
}

fn stack_height(b: &AnyBundle, v: usize) -> Result<f64> {
    let f = b.to_float();
    let side = OrderedSide::new(&f.diagram, &f.orders, Side::Positive, 2)?;
    Ok(build_stacks(&side, &f.plus, 1)?.heights()[v] as f64)
}

fn pairing(b: &AnyBundle) -> Result<f64> {
    Ok(b.to_float().pairing())
}

fn weights_pass(b: &AnyBundle) -> Result<f64> {
    let ok = match b {
        AnyBundle::Float(w) => validate_weight(&w.plus, &w.diagram, 20, 1e-9)?.passed,
        AnyBundle::Exact(w) => validate_weight(&w.plus, &w.diagram, 20, 1e-9)?.passed,
    };
    Ok(if ok { 1.0 } else { 0.0 })
}

fn diagram_valid(b: &AnyBundle) -> Result<f64> {
    Ok(if b.diagram().validate(20).valid { 1.0 } else { 0.0 })
}

fn exp(name: &'static str, value: f64, tol: f64, provenance: Provenance, measure: fn(&AnyBundle) -> Result<f64>) -> Expected {
    Expected { name, value, tol, provenance, measure }
}

fn common(weights_ok: bool) -> Vec<Expected> {
    vec![
        exp("diagramValid", 1.0, 0.0, Provenance::Trivial, diagram_valid),
        exp("plusWeightPasses", if weights_ok { 1.0 } else { 0.0 }, 0.0, Provenance::Derived, weights_pass),
        exp("pairing", 1.0, 1e-12, Provenance::Trivial, pairing),
    ]
}

/// The catalogue with expected-value tables.
pub fn catalogue() -> Vec<ExampleSpec> {
    let sqrt5 = 5f64.sqrt();
    let mut out = vec![];
    let mut fib = common(true);
    fib.extend([
        exp("t1", 0.48121182505960347, 1e-12, Provenance::Paper, |b| time(b, 1)),
        exp("t10", 10.0 * ((1.0 + sqrt5) / 2.0).ln(), 1e-11, Provenance::Paper, |b| time(b, 10)),
        exp("w0[0]", (sqrt5 - 1.0) / 2.0, 1e-12, Provenance::Derived, |b| plus_level(b, 0, 0)),
        exp("w0[1]", (3.0 - sqrt5) / 2.0, 1e-12, Provenance::Derived, |b| plus_level(b, 0, 1)),
        exp("stackHeight1[0]", 2.0, 0.0, Provenance::Paper, |b| stack_height(b, 0)),
        exp("stackHeight1[1]", 1.0, 0.0, Provenance::Paper, |b| stack_height(b, 1)),
    ]);
    out.push(ExampleSpec { name: "fibonacci", description: "stationary [[1,1],[1,0]], PF weights", params: json!({}), expected: fib });

    let mut ch = common(true);
    ch.extend([
        exp("w0[0]", 2.0 / 3.0, 1e-15, Provenance::Derived, |b| plus_level(b, 0, 0)),
        exp("w0[1]", 1.0 / 3.0, 1e-15, Provenance::Derived, |b| plus_level(b, 0, 1)),
        exp("t1", 3f64.ln(), 1e-14, Provenance::Derived, |b| time(b, 1)),
        exp("stackHeight1[0]", 4.0, 0.0, Provenance::Derived, |b| stack_height(b, 0)),
    ]);
    out.push(ExampleSpec { name: "chacon", description: "stationary M(3,1), non-atomic weight", params: json!({}), expected: ch });

    for (name, rule, description) in [
        ("mpn-divergent", NRule::DivergentPower, "M(3, n_i) with n_i = 3^((i+1)^2-1), identity negative side"),
        ("mpn-bounded", NRule::Constant(1), "M(3, 1) throughout, identity negative side"),
    ] {
        let mut e = common(false);
        e.push(exp("w0[1]", 1.0, 0.0, Provenance::Trivial, |b| plus_level(b, 0, 1)));
        out.push(ExampleSpec { name, description, params: json!({"p": 3, "nRule": rule.to_json()}), expected: e });
    }

    for (name, p) in [("odometer-2", 2u64), ("odometer-3", 3)] {
        let mut e = common(true);
        let t1 = match p {
            2 => exp("t1", 2f64.ln(), 1e-14, Provenance::Derived, |b| time(b, 1)),
            _ => exp("t1", 3f64.ln(), 1e-14, Provenance::Derived, |b| time(b, 1)),
        };
        e.push(t1);
        out.push(ExampleSpec { name, description: "stationary [[p]]", params: json!({"p": p}), expected: e });
    }

    let mut sv = common(true);
    sv.push(exp("singleVertexLevel8", 1.0, 0.0, Provenance::Trivial, |b| Ok(b.diagram().level_size(8)? as f64)));
    out.push(ExampleSpec {
        name: "single-vertex-often",
        description: "one vertex at levels 2^m - 1 and 2^m",
        params: json!({}),
        expected: sv,
    });

    let mut tc = common(true);
    tc.push(exp("w0[0]", 0.5, 0.0, Provenance::Trivial, |b| plus_level(b, 0, 0)));
    out.push(ExampleSpec { name: "two-chains", description: "block-diagonal [[2,0],[0,2]]", params: json!({}), expected: tc });
    out
}

pub fn spec(name: &str) -> Option<ExampleSpec> {
    catalogue().into_iter().find(|s| s.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_match_catalogue() {
        let names: Vec<&str> = catalogue().iter().map(|s| s.name).collect();
        assert_eq!(names, NAMES);
        assert!(build("nope").is_err());
    }

    #[test]
    fn expected_tables_hold() {
        for spec in catalogue() {
            for c in spec.check().unwrap() {
                assert!(c.ok, "{}: {:?}", spec.name, c);
            }
        }
    }

    #[test]
    fn bundles_round_trip() {
        for name in NAMES {
            let b = build(name).unwrap();
            assert_eq!(AnyBundle::from_json(&b.to_json().unwrap()).unwrap(), b, "{name}");
        }
    }

    #[test]
    fn chacon_is_exact() {
        let c = chacon();
        assert_eq!(c.plus.levels[2], vec![Q::new(2, 27), Q::new(1, 27)]);
        assert_eq!(c.pairing(), Q::from_int(1));
        assert_eq!(c.residual().unwrap(), 0.0);
    }

    #[test]
    fn single_vertex_weights() {
        let b = single_vertex_often().unwrap();
        assert_eq!(b.residual().unwrap(), 0.0);
        assert_eq!(Q::sum_of(&b.plus.levels[0]), Q::from_int(1));
        assert_eq!(b.plus.levels[7].len(), 1);
    }

    #[test]
    fn identity_tail_keeps_head() {
        let b = chacon();
        let t = identity_tail(&b, 3).unwrap();
        assert!(t.diagram.matrix_at(4).unwrap().is_identity());
        assert_eq!(t.diagram.matrix_at(2).unwrap(), TransitionMatrix::mpn(3, 1));
        assert_eq!(t.plus.levels[..=3], b.plus.levels[..=3]);
    }
}
