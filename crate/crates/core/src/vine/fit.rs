//! Sequential (tree-by-tree) Dissmann selection and estimation.

use std::collections::BTreeSet;

use rayon::prelude::*;

use super::{EdgeDiagnostic, TreeEdge, UnionFind, VineEdge, VineFlag, VineModel, VineStructure};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::pair_copula::{
    default_library, empirical_kendall_tau, fit_pair_copula, CopulaFamily, PairCopulaSpec, PairEval,
    PairFit, Rotation, CLAMP_EPS, MIN_OBS,
};

/// Full (untruncated) structure chosen by maximum spanning trees on
/// `|tau|` with the default family library.
pub fn select_structure(u: &Matrix) -> Result<VineStructure> {
    let d = u.ncols();
    check_input(u)?;
    Ok(fit_truncated_vine(u, d.saturating_sub(1).max(1), &default_library())?.structure)
}

/// Vine whose every pair copula is independence. The structure is the one
/// the selection procedure produces when all weights tie.
pub fn independence_vine(d: usize, truncation_level: usize) -> Result<VineModel> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!("a vine needs at least 2 variables, got {d}")));
    }
    if truncation_level == 0 {
        return Err(Error::invalid("truncation level must be at least 1"));
    }
    let mut trees: Vec<Vec<TreeEdge>> = Vec::with_capacity(d - 1);
    for m in 0..d - 1 {
        let cands = candidates(m, d, trees.last().map(Vec::as_slice));
        let weighted = cands.into_iter().map(|c| (c, 0.0)).collect();
        let tree = spanning_tree(weighted, node_count(m, d, &trees));
        trees.push(tree.into_iter().map(|(e, _)| e).collect());
    }
    let edges = trees
        .iter()
        .map(|t| {
            t.iter()
                .map(|e| VineEdge {
                    conditioned: e.conditioned,
                    conditioning: e.conditioning.clone(),
                    copula: PairCopulaSpec::independence(),
                })
                .collect()
        })
        .collect();
    Ok(VineModel {
        structure: VineStructure { dimension: d, trees },
        truncation_level: truncation_level.min(d - 1),
        edges,
        fit_diagnostics: Vec::new(),
        flag: None,
    })
}

/// Fits trees `1..=truncation_level` on the pseudo-observations `u` and sets
/// every deeper pair copula to independence.
///
/// Conditional pseudo-observations for tree `m + 1` come from the
/// h-functions of the fitted tree-`m` copulas. Inputs with fewer than ten
/// rows or a constant column yield [`independence_vine`] flagged
/// [`VineFlag::DegenerateInput`].
pub fn fit_truncated_vine(
    u: &Matrix,
    truncation_level: usize,
    library: &[(CopulaFamily, Rotation)],
) -> Result<VineModel> {
    check_input(u)?;
    if truncation_level == 0 {
        return Err(Error::invalid("truncation level must be at least 1"));
    }
    let (n, d) = (u.nrows(), u.ncols());
    let trunc = truncation_level.min(d - 1);
    let columns: Vec<Vec<f64>> =
        u.columns().into_iter().map(|c| c.into_iter().map(clamp).collect()).collect();
    if n < MIN_OBS || columns.iter().any(|c| c.iter().all(|&x| x == c[0])) {
        let mut model = independence_vine(d, trunc)?;
        model.flag = Some(VineFlag::DegenerateInput);
        return Ok(model);
    }

    let mut trees: Vec<Vec<TreeEdge>> = Vec::with_capacity(d - 1);
    let mut edges: Vec<Vec<VineEdge>> = Vec::with_capacity(d - 1);
    let mut diagnostics = Vec::new();
    // per node of the current tree: the conditional series of each conditioned variable
    let mut series: Vec<[Vec<f64>; 2]> = Vec::new();

    for m in 0..d - 1 {
        let fitted_level = m < trunc;
        let prev = trees.last().map(Vec::as_slice);
        let pair_data = |c: &TreeEdge| -> (&[f64], &[f64]) {
            if m == 0 {
                (&columns[c.nodes.0], &columns[c.nodes.1])
            } else {
                let p = prev.expect("previous tree");
                let sa = p[c.nodes.0].side_of(c.conditioned.0).expect("proximity");
                let sb = p[c.nodes.1].side_of(c.conditioned.1).expect("proximity");
                (&series[c.nodes.0][sa], &series[c.nodes.1][sb])
            }
        };

        let cands = candidates(m, d, prev);
        let weighted: Vec<(TreeEdge, f64)> = if fitted_level {
            cands
                .into_par_iter()
                .map(|c| {
                    let (a, b) = pair_data(&c);
                    let tau = empirical_kendall_tau(a, b)?;
                    Ok((c, tau.tau))
                })
                .collect::<Result<_>>()?
        } else {
            cands.into_iter().map(|c| (c, 0.0)).collect()
        };
        let (tree, taus): (Vec<TreeEdge>, Vec<f64>) =
            spanning_tree(weighted, node_count(m, d, &trees)).into_iter().unzip();

        let fits: Vec<(PairFit, Option<[Vec<f64>; 2]>)> = if fitted_level {
            let need_next = m + 1 < trunc;
            tree.par_iter()
                .map(|e| {
                    let (a, b) = pair_data(e);
                    let fit = fit_pair_copula(a, b, library)?;
                    let next = if need_next {
                        let ev = PairEval::new(&fit.spec)?;
                        let h1 = a.iter().zip(b).map(|(&x, &y)| clamp(ev.h(x, y))).collect();
                        let h2 = a.iter().zip(b).map(|(&x, &y)| clamp(ev.h_given_u(x, y))).collect();
                        Some([h1, h2])
                    } else {
                        None
                    };
                    Ok((fit, next))
                })
                .collect::<Result<_>>()?
        } else {
            tree.iter()
                .map(|_| (PairFit { spec: PairCopulaSpec::independence(), flag: None }, None))
                .collect()
        };

        let mut level_edges = Vec::with_capacity(tree.len());
        let mut next_series = Vec::new();
        for (i, ((e, (fit, next)), &tau)) in tree.iter().zip(fits).zip(&taus).enumerate() {
            if fitted_level {
                diagnostics.push(EdgeDiagnostic {
                    tree: m + 1,
                    edge: i,
                    conditioned: e.conditioned,
                    conditioning: e.conditioning.clone(),
                    tau,
                    family: fit.spec.family,
                    rotation: fit.spec.rotation,
                    loglik: fit.spec.loglik,
                    bic: fit.spec.bic,
                    flag: fit.flag,
                });
            }
            if let Some(s) = next {
                next_series.push(s);
            }
            level_edges.push(VineEdge {
                conditioned: e.conditioned,
                conditioning: e.conditioning.clone(),
                copula: fit.spec,
            });
        }
        series = next_series;
        trees.push(tree);
        edges.push(level_edges);
    }

    Ok(VineModel {
        structure: VineStructure { dimension: d, trees },
        truncation_level: trunc,
        edges,
        fit_diagnostics: diagnostics,
        flag: None,
    })
}

fn check_input(u: &Matrix) -> Result<()> {
    let d = u.ncols();
    if d < 2 {
        return Err(Error::InvalidDimension(format!("a vine needs at least 2 variables, got {d}")));
    }
    if u.as_slice().iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::invalid("pseudo-observations must lie in [0, 1]"));
    }
    Ok(())
}

#[inline]
fn clamp(x: f64) -> f64 {
    x.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS)
}

fn node_count(m: usize, d: usize, trees: &[Vec<TreeEdge>]) -> usize {
    if m == 0 {
        d
    } else {
        trees[m - 1].len()
    }
}

/// Admissible edges of tree `m + 1`, in lexicographic node order.
fn candidates(m: usize, d: usize, prev: Option<&[TreeEdge]>) -> Vec<TreeEdge> {
    let mut out = Vec::new();
    if m == 0 {
        for a in 0..d {
            for b in a + 1..d {
                out.push(TreeEdge { conditioned: (a, b), conditioning: Vec::new(), nodes: (a, b) });
            }
        }
        return out;
    }
    let prev = prev.expect("previous tree");
    let complete: Vec<BTreeSet<usize>> = prev.iter().map(TreeEdge::complete_set).collect();
    for a in 0..prev.len() {
        for b in a + 1..prev.len() {
            let (na, nb) = (prev[a].nodes, prev[b].nodes);
            if !(na.0 == nb.0 || na.0 == nb.1 || na.1 == nb.0 || na.1 == nb.1) {
                continue;
            }
            let only_a: Vec<usize> = complete[a].difference(&complete[b]).copied().collect();
            let only_b: Vec<usize> = complete[b].difference(&complete[a]).copied().collect();
            if only_a.len() != 1 || only_b.len() != 1 {
                continue;
            }
            let conditioning = complete[a].intersection(&complete[b]).copied().collect();
            out.push(TreeEdge { conditioned: (only_a[0], only_b[0]), conditioning, nodes: (a, b) });
        }
    }
    out
}

/// Kruskal maximum spanning tree on `|w|`; equal weights keep lexicographic
/// node order. The signed weight is carried along.
fn spanning_tree(mut weighted: Vec<(TreeEdge, f64)>, n_nodes: usize) -> Vec<(TreeEdge, f64)> {
    weighted.sort_by(|(ea, wa), (eb, wb)| wb.abs().total_cmp(&wa.abs()).then(ea.nodes.cmp(&eb.nodes)));
    let mut uf = UnionFind::new(n_nodes);
    let mut tree = Vec::with_capacity(n_nodes.saturating_sub(1));
    for (e, w) in weighted {
        if uf.union(e.nodes.0, e.nodes.1) {
            tree.push((e, w));
            if tree.len() + 1 == n_nodes {
                break;
            }
        }
    }
    tree.sort_by_key(|a| a.0.nodes);
    tree
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spanning_tree_on_three_variables() {
        let weights = [((0, 1), 0.8), ((0, 2), 0.7), ((1, 2), 0.1)];
        let cands = candidates(0, 3, None);
        let weighted = cands
            .into_iter()
            .map(|c| {
                let w = weights.iter().find(|(n, _)| *n == c.nodes).unwrap().1;
                (c, w)
            })
            .collect();
        let t1: Vec<TreeEdge> = spanning_tree(weighted, 3).into_iter().map(|(e, _)| e).collect();
        let pairs: Vec<_> = t1.iter().map(|e| e.conditioned).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2)]);
        let t2 = candidates(1, 3, Some(&t1));
        assert_eq!(t2.len(), 1);
        assert_eq!(t2[0].conditioned, (1, 2));
        assert_eq!(t2[0].conditioning, vec![0]);
    }

    #[test]
    fn ties_resolve_lexicographically() {
        let weighted = candidates(0, 4, None).into_iter().map(|c| (c, 0.0)).collect();
        let t1: Vec<_> = spanning_tree(weighted, 4).into_iter().map(|(e, _)| e.nodes).collect();
        assert_eq!(t1, vec![(0, 1), (0, 2), (0, 3)]);
        let weighted = candidates(0, 3, None).into_iter().map(|c| (c, -0.5)).collect();
        let t1: Vec<_> = spanning_tree(weighted, 3).into_iter().map(|(e, _)| e.nodes).collect();
        assert_eq!(t1, vec![(0, 1), (0, 2)]);
    }
}
