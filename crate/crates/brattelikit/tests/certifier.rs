use brattelikit::bundle::{AnyBundle, WeightedDiagram};
use brattelikit::certify::{certify, CertifyConfig, Certificate, Verdict};
use brattelikit::examples::{build, fibonacci, NAMES};
use brattelikit::orders::EdgeOrders;
use brattelikit::random::rng;

fn run(b: &AnyBundle, cfg: &CertifyConfig) -> Certificate {
    match b {
        AnyBundle::Float(b) => certify(b, cfg).unwrap(),
        AnyBundle::Exact(b) => certify(b, cfg).unwrap(),
    }
}

#[test]
fn oracle_concordance() {
    for name in NAMES {
        let c = run(&build(name).unwrap(), &CertifyConfig::default());
        assert_ne!(c.oracle.agrees, Some(false), "{name}: {:?} vs {:?}", c.verdict, c.oracle.verdict);
    }
}

#[test]
fn expected_verdicts() {
    let expect = [
        ("fibonacci", Verdict::UniquelyErgodic),
        ("mpn-divergent", Verdict::LimitUeButNoFiniteMeasure),
        ("odometer-2", Verdict::UniquelyErgodic),
        ("odometer-3", Verdict::UniquelyErgodic),
        ("single-vertex-often", Verdict::UniquelyErgodic),
        ("chacon", Verdict::Inconclusive),
        ("two-chains", Verdict::Inconclusive),
    ];
    for (name, v) in expect {
        assert_eq!(run(&build(name).unwrap(), &CertifyConfig::default()).verdict, v, "{name}");
    }
}

#[test]
fn verdicts_survive_more_depth_and_terms() {
    for name in NAMES {
        let b = build(name).unwrap();
        let base = run(&b, &CertifyConfig::default()).verdict;
        if base != Verdict::UniquelyErgodic {
            continue;
        }
        for (w, n) in [(4, 100), (3, 400), (5, 1000)] {
            let c = run(&b, &CertifyConfig { window_depth: w, n_terms: n, ..Default::default() });
            assert_eq!(c.verdict, Verdict::UniquelyErgodic, "{name} at window {w}, {n} terms");
        }
    }
}

#[test]
fn fibonacci_under_shuffled_orders() {
    let f = fibonacci();
    let mut r = rng(11);
    for _ in 0..5 {
        let orders = EdgeOrders::random(&f.diagram, 12, &mut r).unwrap();
        let b = WeightedDiagram::new(f.diagram.clone(), orders, f.plus.clone(), f.minus.clone()).unwrap();
        assert_eq!(certify(&b, &CertifyConfig::default()).unwrap().verdict, Verdict::UniquelyErgodic);
    }
}

#[test]
fn certificate_json_is_deterministic() {
    let b = build("fibonacci").unwrap();
    let a = serde_json::to_string(&run(&b, &CertifyConfig::default())).unwrap();
    assert_eq!(a, serde_json::to_string(&run(&b, &CertifyConfig::default())).unwrap());
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    for key in ["verdict", "witness", "quantities", "divergence", "oracle", "config"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}
