//! Seeded random diagrams and bundles for property tests.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bundle::WeightedDiagram;
use crate::diagram::BiInfiniteDiagram;
use crate::error::Result;
use crate::matrix::TransitionMatrix;
use crate::orders::EdgeOrders;
use crate::scalar::Q;
use crate::source::{MatrixSource, Side};
use crate::weights::{solve_weights, WeightFunction};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomSpec {
    pub max_vertices: usize,
    /// Random levels on each side; identities beyond.
    pub depth: usize,
    pub max_entry: u64,
    /// Shuffle the edge orders instead of using the default left-right order.
    pub random_orders: bool,
}

impl Default for RandomSpec {
    fn default() -> Self {
        RandomSpec { max_vertices: 3, depth: 6, max_entry: 2, random_orders: true }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries in `0..=max_entry` with no zero row or column.
pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, max_entry: u64) -> TransitionMatrix {
    let max_entry = max_entry.max(1);
    let mut data: Vec<Vec<u64>> = (0..rows).map(|_| (0..cols).map(|_| rng.gen_range(0..=max_entry)).collect()).collect();
    for row in data.iter_mut() {
        if row.iter().all(|&x| x == 0) {
            row[rng.gen_range(0..cols)] = 1;
        }
    }
    for c in 0..cols {
        if data.iter().all(|row| row[c] == 0) {
            data[rng.gen_range(0..rows)][c] = 1;
        }
    }
    TransitionMatrix::from_rows(data).expect("rectangular")
}

/// Random level sizes and matrices on `±1..±depth`, identity tails.
pub fn random_diagram<R: Rng>(rng: &mut R, spec: &RandomSpec) -> BiInfiniteDiagram {
    let weld = rng.gen_range(1..=spec.max_vertices);
    let mut side = |negative: bool| {
        let mut prev = weld;
        let mut out = vec![];
        for _ in 0..spec.depth.max(1) {
            let next = rng.gen_range(1..=spec.max_vertices);
            // stored negative matrices run from the farther level to the nearer one
            out.push(if negative { random_matrix(rng, prev, next, spec.max_entry) } else { random_matrix(rng, next, prev, spec.max_entry) });
            prev = next;
        }
        out
    };
    let positive = side(false);
    let negative = side(true);
    BiInfiniteDiagram::new(MatrixSource::window(positive), MatrixSource::window(negative), weld)
}

/// A random diagram with exact positive weights on both sides, normalized so
/// the pairing is 1, carried `extra` levels past the random part.
pub fn random_bundle(seed: u64, spec: &RandomSpec, extra: usize) -> Result<WeightedDiagram<Q>> {
    let mut r = rng(seed);
    let d = random_diagram(&mut r, spec);
    let depth = spec.depth.max(1) + extra;
    let orders = if spec.random_orders { EdgeOrders::random(&d, spec.depth.max(1), &mut r)? } else { EdgeOrders::policy_only() };
    let plus = solve_weights::<Q>(&d, Side::Positive, depth, 1)?;
    let one = d.one_sided(Side::Negative, depth)?;
    let minus = WeightFunction::from_top(&one, vec![Q::from_int(1); one.sizes[depth]]);
    WeightedDiagram::new(d, orders, plus, minus)?.normalized()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_valid() {
        let spec = RandomSpec { max_vertices: 4, ..Default::default() };
        for seed in 0..30 {
            let a = random_bundle(seed, &spec, 3).unwrap();
            assert_eq!(a, random_bundle(seed, &spec, 3).unwrap());
            assert!(a.diagram.validate(10).valid, "seed {seed}");
            assert_eq!(a.residual().unwrap(), 0.0);
            assert_eq!(a.pairing(), Q::from_int(1));
            assert!(a.plus.is_positive() && a.minus.is_positive());
            for k in 1..=6 {
                assert!(a.diagram.level_size(k).unwrap() <= 4 && a.diagram.level_size(-k).unwrap() <= 4);
            }
        }
    }
}
