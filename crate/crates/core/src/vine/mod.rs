//! Regular-vine copulas: structure selection, truncated sequential fitting,
//! density evaluation and simulation.
//!
//! Trees are stored level by level. Level 0 is the first tree, whose edges
//! join variables; an edge at level `m > 0` joins two edges of level `m - 1`
//! (referenced by index through [`TreeEdge::nodes`]). For an edge with
//! conditioned pair `(j, k)` and conditioning set `D`, the pair copula is
//! evaluated at `(F(j | D), F(k | D))`, where `j` comes from the first node
//! and `k` from the second.

mod fit;
mod sample;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::pair_copula::{FitFlag, PairCopulaSpec, PairEval};

pub use fit::{fit_truncated_vine, independence_vine, select_structure};
pub use sample::sample_vine;

/// Truncation used when none is configured: `min(3, d - 1)`.
pub fn default_truncation(d: usize) -> usize {
    3.min(d.saturating_sub(1)).max(1)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeEdge {
    /// `(j, k)`; `j` belongs to the complete set of `nodes.0`.
    pub conditioned: (usize, usize),
    /// Sorted conditioning set `D`.
    pub conditioning: Vec<usize>,
    /// Indices of the joined nodes: variables in the first tree, edges of
    /// the previous tree otherwise.
    pub nodes: (usize, usize),
}

impl TreeEdge {
    pub fn complete_set(&self) -> BTreeSet<usize> {
        let mut s: BTreeSet<usize> = self.conditioning.iter().copied().collect();
        s.insert(self.conditioned.0);
        s.insert(self.conditioned.1);
        s
    }

    pub(crate) fn contains_conditioned(&self, var: usize) -> bool {
        self.conditioned.0 == var || self.conditioned.1 == var
    }

    /// Position (0 or 1) of `var` in the conditioned pair.
    pub(crate) fn side_of(&self, var: usize) -> Option<usize> {
        if self.conditioned.0 == var {
            Some(0)
        } else if self.conditioned.1 == var {
            Some(1)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VineStructure {
    pub dimension: usize,
    /// `trees[m]` holds the `d - m - 1` edges of tree `m + 1`.
    pub trees: Vec<Vec<TreeEdge>>,
}

impl VineStructure {
    pub fn n_edges(&self) -> usize {
        self.trees.iter().map(Vec::len).sum()
    }

    /// Checks edge counts, set bookkeeping, acyclicity and the proximity
    /// condition.
    pub fn validate(&self) -> Result<()> {
        let d = self.dimension;
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if d < 2 {
            return bad(format!("vine dimension must be at least 2, got {d}"));
        }
        if self.trees.len() != d - 1 {
            return bad(format!("expected {} trees, got {}", d - 1, self.trees.len()));
        }
        for (m, tree) in self.trees.iter().enumerate() {
            if tree.len() != d - m - 1 {
                return bad(format!("tree {} has {} edges, expected {}", m + 1, tree.len(), d - m - 1));
            }
            let n_nodes = if m == 0 { d } else { self.trees[m - 1].len() };
            let mut forest = UnionFind::new(n_nodes);
            for (i, e) in tree.iter().enumerate() {
                let (a, b) = e.nodes;
                let (j, k) = e.conditioned;
                if a >= n_nodes || b >= n_nodes || a == b {
                    return bad(format!("tree {} edge {i} has invalid nodes {:?}", m + 1, e.nodes));
                }
                if j == k || j >= d || k >= d || e.conditioning.contains(&j) || e.conditioning.contains(&k) {
                    return bad(format!("tree {} edge {i} has invalid conditioned pair", m + 1));
                }
                if e.conditioning.len() != m || !e.conditioning.windows(2).all(|w| w[0] < w[1]) {
                    return bad(format!("tree {} edge {i} conditioning set malformed", m + 1));
                }
                if !forest.union(a, b) {
                    return bad(format!("tree {} contains a cycle", m + 1));
                }
                if m == 0 {
                    if (j, k) != (a, b) {
                        return bad(format!("tree 1 edge {i} conditioned pair must equal its nodes"));
                    }
                    continue;
                }
                let prev = &self.trees[m - 1];
                let (ea, eb) = (&prev[a], &prev[b]);
                let shared = {
                    let (x, y) = (ea.nodes, eb.nodes);
                    x.0 == y.0 || x.0 == y.1 || x.1 == y.0 || x.1 == y.1
                };
                if !shared {
                    return bad(format!("tree {} edge {i} violates the proximity condition", m + 1));
                }
                let (ca, cb) = (ea.complete_set(), eb.complete_set());
                let inter: Vec<usize> = ca.intersection(&cb).copied().collect();
                if inter != e.conditioning || !ca.contains(&j) || cb.contains(&j) || !cb.contains(&k) || ca.contains(&k)
                {
                    return bad(format!("tree {} edge {i} sets inconsistent with its nodes", m + 1));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VineEdge {
    pub conditioned: (usize, usize),
    pub conditioning: Vec<usize>,
    pub copula: PairCopulaSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDiagnostic {
    pub tree: usize,
    pub edge: usize,
    pub conditioned: (usize, usize),
    pub conditioning: Vec<usize>,
    pub tau: f64,
    pub family: crate::pair_copula::CopulaFamily,
    pub rotation: crate::pair_copula::Rotation,
    pub loglik: f64,
    pub bic: f64,
    pub flag: Option<FitFlag>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VineFlag {
    /// Too few rows or a constant column; every edge is independence.
    DegenerateInput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VineModel {
    pub structure: VineStructure,
    pub truncation_level: usize,
    /// Parallel to `structure.trees`.
    pub edges: Vec<Vec<VineEdge>>,
    /// One entry per fitted edge (trees `1..=truncation_level`).
    pub fit_diagnostics: Vec<EdgeDiagnostic>,
    pub flag: Option<VineFlag>,
}

impl VineModel {
    pub fn dimension(&self) -> usize {
        self.structure.dimension
    }

    pub fn validate(&self) -> Result<()> {
        self.structure.validate()?;
        if self.truncation_level == 0 {
            return Err(Error::InvalidSpec("truncation level must be at least 1".into()));
        }
        if self.edges.len() != self.structure.trees.len() {
            return Err(Error::InvalidSpec("edge table does not match structure".into()));
        }
        for (m, (tree, fitted)) in self.structure.trees.iter().zip(&self.edges).enumerate() {
            if tree.len() != fitted.len() {
                return Err(Error::InvalidSpec(format!("tree {} edge count mismatch", m + 1)));
            }
            for (te, ve) in tree.iter().zip(fitted) {
                if te.conditioned != ve.conditioned || te.conditioning != ve.conditioning {
                    return Err(Error::InvalidSpec(format!("tree {} edge labels mismatch", m + 1)));
                }
                ve.copula.validate()?;
                if m >= self.truncation_level && !ve.copula.is_independence() {
                    return Err(Error::InvalidSpec(format!(
                        "tree {} lies above truncation level {} but is not independence",
                        m + 1,
                        self.truncation_level
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: VineModel = serde_json::from_str(s)?;
        model.validate()?;
        Ok(model)
    }

    pub(crate) fn evaluators(&self) -> Result<Vec<Vec<PairEval>>> {
        self.edges
            .iter()
            .map(|tree| tree.iter().map(|e| PairEval::new(&e.copula)).collect())
            .collect()
    }
}

/// Copula-scale log density `sum_e ln c_e(F(j|D), F(k|D))` of one row.
pub fn vine_log_density(model: &VineModel, u: &[f64]) -> Result<f64> {
    let evals = model.evaluators()?;
    log_density_with(model, &evals, u)
}

/// [`vine_log_density`] for every row of `u`.
pub fn vine_log_density_rows(model: &VineModel, u: &Matrix) -> Result<Vec<f64>> {
    let evals = model.evaluators()?;
    u.rows_iter().map(|row| log_density_with(model, &evals, row)).collect()
}

fn log_density_with(model: &VineModel, evals: &[Vec<PairEval>], u: &[f64]) -> Result<f64> {
    let d = model.dimension();
    if u.len() != d {
        return Err(Error::invalid(format!("row has {} entries, vine has dimension {d}", u.len())));
    }
    if u.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("vine density argument must be finite"));
    }
    let clamp = |x: f64| x.clamp(crate::pair_copula::CLAMP_EPS, 1.0 - crate::pair_copula::CLAMP_EPS);
    let mut total = 0.0;
    // conditional values (F(j | D), F(k | D ∪ ...)) emitted by each edge of the previous tree
    let mut prev: Vec<[f64; 2]> = Vec::new();
    for (m, tree) in model.structure.trees.iter().enumerate() {
        let mut next = Vec::with_capacity(tree.len());
        for (i, e) in tree.iter().enumerate() {
            let (u1, u2) = if m == 0 {
                (clamp(u[e.nodes.0]), clamp(u[e.nodes.1]))
            } else {
                let ta = &model.structure.trees[m - 1][e.nodes.0];
                let tb = &model.structure.trees[m - 1][e.nodes.1];
                let sa = ta.side_of(e.conditioned.0).expect("validated structure");
                let sb = tb.side_of(e.conditioned.1).expect("validated structure");
                (prev[e.nodes.0][sa], prev[e.nodes.1][sb])
            };
            let ev = &evals[m][i];
            if ev.is_independence() {
                next.push([u1, u2]);
                continue;
            }
            let ld = ev.log_pdf(u1, u2);
            if ld.is_nan() {
                return Err(Error::NumericFailure(format!(
                    "log density undefined at tree {} edge {i}",
                    m + 1
                )));
            }
            total += ld;
            next.push([clamp(ev.h(u1, u2)), clamp(ev.h_given_u(u1, u2))]);
        }
        prev = next;
    }
    Ok(total)
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when `a` and `b` were already connected.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}
