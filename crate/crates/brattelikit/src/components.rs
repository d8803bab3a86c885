//! Tail-equivalence structure on the positive side: periodic components
//! (finite tail classes) and minimality evidence.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::diagram::{BiInfiniteDiagram, OneSided};
use crate::error::Result;
use crate::matrix::TransitionMatrix;
use crate::scalar::biguint_string;
use crate::source::Side;

/// A chain of vertices with exactly one incoming edge each, from
/// `start_level` to `end_level`. Every path into the chain's end follows it,
/// so the tower over it keeps the same height (`period`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PeriodicComponent {
    pub start_level: usize,
    pub end_level: usize,
    pub chain: Vec<usize>,
    #[serde(with = "biguint_string")]
    pub period: BigUint,
}

impl PeriodicComponent {
    pub fn vertex_at(&self, level: usize) -> Option<usize> {
        level.checked_sub(self.start_level).and_then(|i| self.chain.get(i).copied())
    }
}

/// Candidate periodic components seen through `depth`.
///
/// One level of lookahead is inspected (`L = depth + 1`). A chain ending on
/// level `L` is reported when it spans at least `max(2, ⌈L/2⌉)` edges.
pub fn periodic_component_scan(diagram: &BiInfiniteDiagram, depth: usize) -> Result<Vec<PeriodicComponent>> {
    Ok(scan_chains(&diagram.one_sided(Side::Positive, depth + 1)?))
}

/// The chain scan on a finite one-sided diagram, using all of its levels.
pub fn scan_chains(side: &OneSided) -> Vec<PeriodicComponent> {
    let l = side.depth();
    let counts = side.path_counts(l);
    let need = 2.max(l.div_ceil(2));
    let mut out = vec![];
    for (u, count) in counts.iter().enumerate() {
        let mut chain = vec![u];
        let mut level = l;
        let mut at = u;
        while level > 0 {
            let g = side.g(level);
            if g.row_sum(at) != 1 {
                break;
            }
            at = (0..g.cols()).find(|&c| g.get(at, c) == 1).expect("row sum one");
            chain.push(at);
            level -= 1;
        }
        if l - level >= need {
            chain.reverse();
            out.push(PeriodicComponent { start_level: level, end_level: l, chain, period: count.clone() });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub from: usize,
    pub to: usize,
    /// Zero pattern of `F_to ··· F_{from+1}`.
    pub support: TransitionMatrix,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict")]
pub enum Minimality {
    /// `structural` is set when a positive block provably repeats forever
    /// (periodic source); otherwise the blocks are finite-depth evidence.
    Minimal { blocks: Vec<Block>, structural: bool },
    NotMinimal { components: Vec<PeriodicComponent> },
    Inconclusive { blocks: Vec<Block> },
}

impl Minimality {
    pub fn is_minimal(&self) -> bool {
        matches!(self, Minimality::Minimal { .. })
    }
}

/// Greedy decomposition of levels `0..depth` into blocks with strictly
/// positive products.
pub fn positive_blocks(diagram: &BiInfiniteDiagram, depth: usize) -> Result<Vec<Block>> {
    let mut blocks = vec![];
    let mut from = 0;
    let mut acc: Option<TransitionMatrix> = None;
    for b in 1..=depth {
        let f = diagram.matrix_at(b as i64)?;
        let p = match acc {
            None => f.support_mul(&TransitionMatrix::identity(f.cols())),
            Some(a) => f.support_mul(&a),
        };
        if p.is_positive() {
            blocks.push(Block { from, to: b, support: p });
            from = b;
            acc = None;
        } else {
            acc = Some(p);
        }
    }
    Ok(blocks)
}

pub fn minimality_certificate(diagram: &BiInfiniteDiagram, depth: usize) -> Result<Minimality> {
    let blocks = positive_blocks(diagram, depth)?;
    let structural = diagram
        .positive
        .period_structure()
        .is_some_and(|(head, period)| blocks.iter().any(|b| b.from >= head && (b.to - b.from) % period == 0));
    let recurring = blocks.len() >= 2 && blocks.last().is_some_and(|b| 2 * b.to > depth);
    if structural || recurring {
        return Ok(Minimality::Minimal { blocks, structural });
    }
    let components = periodic_component_scan(diagram, depth)?;
    if !components.is_empty() {
        return Ok(Minimality::NotMinimal { components });
    }
    Ok(Minimality::Inconclusive { blocks })
}
