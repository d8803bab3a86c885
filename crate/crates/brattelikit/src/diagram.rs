//! Bi-infinite diagrams: two matrix sources welded at level 0.
//!
//! Vertex levels run over all integers. Edges of `E_k` go from `V_{k-1}` to
//! `V_k` when `k > 0` and from `V_k` to `V_{k+1}` when `k < 0`; the stored
//! negative matrices already use this source-to-range convention.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::TransitionMatrix;
use crate::source::{CutSpec, MatrixSource, Side};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex {
    pub level: i64,
    pub index: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Edge {
    pub level: i64,
    pub source_index: usize,
    pub range_index: usize,
    pub copy_index: usize,
}

impl Edge {
    pub fn source(&self) -> Vertex {
        let level = if self.level > 0 { self.level - 1 } else { self.level };
        Vertex { level, index: self.source_index }
    }

    pub fn range(&self) -> Vertex {
        let level = if self.level > 0 { self.level } else { self.level + 1 };
        Vertex { level, index: self.range_index }
    }
}

/// Edge level sitting between vertex levels `j` and `j + 1`.
pub fn edge_level_above(j: i64) -> i64 {
    if j >= 0 {
        j + 1
    } else {
        j
    }
}

/// Lower vertex level of edge level `k`.
pub fn lower_vertex_level(k: i64) -> i64 {
    assert!(k != 0, "there is no edge level 0");
    if k > 0 {
        k - 1
    } else {
        k
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BiInfiniteDiagram {
    pub positive: MatrixSource,
    pub negative: MatrixSource,
    pub weld_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LevelIssue {
    pub level: i64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ValidationReport {
    pub valid: bool,
    pub depth: usize,
    pub weld_ok: bool,
    pub vertex_counts: BTreeMap<i64, usize>,
    pub dimension_mismatches: Vec<LevelIssue>,
    pub zero_rows: Vec<LevelIssue>,
    pub zero_columns: Vec<LevelIssue>,
    pub source_errors: Vec<LevelIssue>,
}

impl BiInfiniteDiagram {
    pub fn new(positive: MatrixSource, negative: MatrixSource, weld_size: usize) -> Self {
        BiInfiniteDiagram { positive, negative, weld_size }
    }

    /// Same stationary matrix on both sides.
    pub fn stationary(m: TransitionMatrix) -> Self {
        let n = m.cols();
        BiInfiniteDiagram::new(MatrixSource::stationary(m.clone()), MatrixSource::stationary(m), n)
    }

    pub fn source(&self, side: Side) -> &MatrixSource {
        match side {
            Side::Positive => &self.positive,
            Side::Negative => &self.negative,
        }
    }

    /// `F_k` for `k > 0`, stored `𝓕_k` for `k < 0`.
    pub fn matrix_at(&self, k: i64) -> Result<TransitionMatrix> {
        match k {
            0 => Err(Error::Invalid("there is no edge level 0".into())),
            k if k > 0 => self.positive.matrix(k as usize, Side::Positive),
            k => self.negative.matrix((-k) as usize, Side::Negative),
        }
    }

    /// Matrix of the edges from `V_j` to `V_{j+1}`.
    pub fn forward(&self, j: i64) -> Result<TransitionMatrix> {
        self.matrix_at(edge_level_above(j))
    }

    pub fn level_size(&self, j: i64) -> Result<usize> {
        Ok(match j {
            0 => self.weld_size,
            j if j > 0 => self.matrix_at(j)?.rows(),
            j => self.matrix_at(j)?.cols(),
        })
    }

    pub fn validate(&self, depth: usize) -> ValidationReport {
        let mut rep = ValidationReport {
            valid: true,
            depth,
            weld_ok: true,
            vertex_counts: BTreeMap::new(),
            dimension_mismatches: vec![],
            zero_rows: vec![],
            zero_columns: vec![],
            source_errors: vec![],
        };
        rep.vertex_counts.insert(0, self.weld_size);
        if self.weld_size == 0 {
            rep.weld_ok = false;
        }
        for side in [Side::Positive, Side::Negative] {
            let mut inner = self.weld_size;
            for i in 1..=depth {
                let k = side.sign() * i as i64;
                let m = match self.matrix_at(k) {
                    Ok(m) => m,
                    Err(e) => {
                        rep.source_errors.push(LevelIssue { level: k, detail: e.to_string() });
                        break;
                    }
                };
                // inner = size of the level adjacent to 0-side of this edge level.
                let (near, far) = match side {
                    Side::Positive => (m.cols(), m.rows()),
                    Side::Negative => (m.rows(), m.cols()),
                };
                if near != inner {
                    let issue = LevelIssue {
                        level: k,
                        detail: format!("expected {inner} vertices on the inner side, matrix has {near}"),
                    };
                    if i == 1 {
                        rep.weld_ok = false;
                    }
                    rep.dimension_mismatches.push(issue);
                }
                for r in m.zero_rows() {
                    rep.zero_rows.push(LevelIssue { level: k, detail: format!("row {r}") });
                }
                for c in m.zero_cols() {
                    rep.zero_columns.push(LevelIssue { level: k, detail: format!("column {c}") });
                }
                rep.vertex_counts.insert(k, far);
                inner = far;
            }
        }
        rep.valid = rep.weld_ok
            && rep.dimension_mismatches.is_empty()
            && rep.zero_rows.is_empty()
            && rep.zero_columns.is_empty()
            && rep.source_errors.is_empty();
        rep
    }

    /// Fails with the first problem `validate` would report.
    pub fn check(&self, depth: usize) -> Result<()> {
        let rep = self.validate(depth);
        if rep.valid {
            return Ok(());
        }
        if let Some(i) = rep.source_errors.first() {
            return Err(Error::Invalid(format!("level {}: {}", i.level, i.detail)));
        }
        let issue = rep
            .dimension_mismatches
            .first()
            .or(rep.zero_rows.first())
            .or(rep.zero_columns.first());
        Err(Error::Invalid(match issue {
            Some(i) => format!("level {}: {}", i.level, i.detail),
            None => "weld sizes disagree".into(),
        }))
    }

    /// Shift by `n`: vertex level `j` of the result is level `j + n` here.
    pub fn shift(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Ok(self.clone());
        }
        let mut head = Vec::with_capacity(n);
        for k in (1..=n).rev() {
            head.push(self.matrix_at(k as i64)?);
        }
        let weld_size = head[0].rows();
        Ok(BiInfiniteDiagram {
            positive: self.positive.skip(n, Side::Positive)?,
            negative: self.negative.prefix(head),
            weld_size,
        })
    }

    pub fn telescope(&self, cuts: CutSpec) -> Result<Self> {
        Ok(BiInfiniteDiagram {
            positive: self.positive.telescope(cuts, Side::Positive)?,
            negative: self.negative.clone(),
            weld_size: self.weld_size,
        })
    }

    /// `c_k(v) = |S(v)|` for `v ∈ V_k`.
    pub fn path_count_vector(&self, k: usize) -> Result<Vec<BigUint>> {
        let mut c = vec![BigUint::from(1u32); self.weld_size];
        for i in 1..=k {
            c = self.matrix_at(i as i64)?.apply_big(&c);
        }
        Ok(c)
    }

    /// Finite one-sided view of `side` through `depth`, in the one-sided
    /// convention (`G_k` has `|level k|` rows).
    pub fn one_sided(&self, side: Side, depth: usize) -> Result<OneSided> {
        let mut matrices = Vec::with_capacity(depth);
        let mut sizes = vec![self.weld_size];
        for i in 1..=depth {
            let m = self.matrix_at(side.sign() * i as i64)?;
            let g = match side {
                Side::Positive => m,
                Side::Negative => m.transpose(),
            };
            let prev = *sizes.last().expect("nonempty");
            if g.cols() != prev {
                return Err(Error::DimensionMismatch { level: side.sign() * i as i64, expected: prev, found: g.cols() });
            }
            sizes.push(g.rows());
            matrices.push(g);
        }
        Ok(OneSided { side, matrices, sizes })
    }

    /// Identity-tail truncation: matrices beyond `±i` become identities.
    pub fn truncate(&self, i: usize) -> Result<Self> {
        if i == 0 {
            return Ok(BiInfiniteDiagram::new(
                MatrixSource::stationary(TransitionMatrix::identity(self.weld_size)),
                MatrixSource::stationary(TransitionMatrix::identity(self.weld_size)),
                self.weld_size,
            ));
        }
        let grab = |s: i64| (1..=i).map(|j| self.matrix_at(s * j as i64)).collect::<Result<Vec<_>>>();
        Ok(BiInfiniteDiagram::new(MatrixSource::window(grab(1)?), MatrixSource::window(grab(-1)?), self.weld_size))
    }
}

/// One side of a diagram as an ordinary (one-sided) Bratteli diagram,
/// truncated at a finite depth.
#[derive(Clone, Debug, PartialEq)]
pub struct OneSided {
    pub side: Side,
    /// `matrices[k-1] = G_k`, `|level k| × |level k-1|`.
    pub matrices: Vec<TransitionMatrix>,
    pub sizes: Vec<usize>,
}

impl OneSided {
    pub fn depth(&self) -> usize {
        self.matrices.len()
    }

    pub fn g(&self, k: usize) -> &TransitionMatrix {
        &self.matrices[k - 1]
    }

    pub fn path_counts(&self, k: usize) -> Vec<BigUint> {
        let mut c = vec![BigUint::from(1u32); self.sizes[0]];
        for m in &self.matrices[..k] {
            c = m.apply_big(&c);
        }
        c
    }
}
