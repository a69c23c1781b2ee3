//! Inverse-Rosenblatt simulation.

use rand::distr::Open01;
use rand::Rng;
use rayon::prelude::*;

use super::{TreeEdge, VineModel};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::pair_copula::{PairEval, CLAMP_EPS};

/// A variable and the edges (level, index) whose conditioned pair contains
/// it, from the deepest tree down to the first.
struct Column {
    var: usize,
    steps: Vec<(usize, usize)>,
}

/// Draws `n` rows from the vine copula.
///
/// All uniforms are drawn from `rng` up front, row by row, so the result
/// depends only on the model and the stream state, not on thread count.
pub fn sample_vine<R: Rng + ?Sized>(model: &VineModel, n: usize, rng: &mut R) -> Result<Matrix> {
    if n == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    model.validate()?;
    let d = model.dimension();
    let evals = model.evaluators()?;
    let order = sampling_order(&model.structure.trees, d)?;
    let uniforms: Vec<f64> = (0..n * d).map(|_| rng.sample(Open01)).collect();

    let mut offsets = Vec::with_capacity(d);
    let mut total = 0;
    for tree in &model.structure.trees {
        offsets.push(total);
        total += 2 * tree.len();
    }
    let ctx = Ctx { trees: &model.structure.trees, evals: &evals, offsets: &offsets };

    let rows: Vec<Vec<f64>> = uniforms
        .par_chunks(d)
        .map(|w| ctx.sample_row(&order, w, total))
        .collect::<Result<_>>()?;
    let mut out = Matrix::zeros(n, d);
    for (i, r) in rows.into_iter().enumerate() {
        out.row_mut(i).copy_from_slice(&r);
    }
    Ok(out)
}

/// Peels off one conditioned variable of the deepest remaining edge at a
/// time; sampling runs in the reverse of peeling order.
fn sampling_order(trees: &[Vec<TreeEdge>], d: usize) -> Result<Vec<Column>> {
    let mut alive: Vec<Vec<bool>> = trees.iter().map(|t| vec![true; t.len()]).collect();
    let mut remaining: Vec<bool> = vec![true; d];
    let mut peeled = Vec::with_capacity(d);
    for step in 0..d - 1 {
        let top = d - 2 - step;
        let live: Vec<usize> = (0..trees[top].len()).filter(|&i| alive[top][i]).collect();
        if live.len() != 1 {
            return Err(Error::InvalidSpec(format!("tree {} does not reduce to one edge", top + 1)));
        }
        let e = &trees[top][live[0]];
        let var = e.conditioned.0.max(e.conditioned.1);
        let mut steps = Vec::with_capacity(top + 1);
        for m in (0..=top).rev() {
            let hits: Vec<usize> = (0..trees[m].len())
                .filter(|&i| alive[m][i] && trees[m][i].contains_conditioned(var))
                .collect();
            if hits.len() != 1 {
                return Err(Error::InvalidSpec(format!(
                    "variable {var} is not a leaf of tree {} in the reduced vine",
                    m + 1
                )));
            }
            alive[m][hits[0]] = false;
            steps.push((m, hits[0]));
        }
        remaining[var] = false;
        peeled.push(Column { var, steps });
    }
    let last = remaining.iter().position(|&r| r).expect("one variable left");
    peeled.push(Column { var: last, steps: Vec::new() });
    peeled.reverse();
    Ok(peeled)
}

struct Ctx<'a> {
    trees: &'a [Vec<TreeEdge>],
    evals: &'a [Vec<PairEval>],
    offsets: &'a [usize],
}

impl Ctx<'_> {
    fn sample_row(&self, order: &[Column], w: &[f64], memo_len: usize) -> Result<Vec<f64>> {
        let mut u = vec![f64::NAN; w.len()];
        let mut memo = vec![f64::NAN; memo_len];
        for col in order {
            let mut p = w[col.var];
            for &(m, i) in &col.steps {
                let ev = &self.evals[m][i];
                if ev.is_independence() {
                    continue;
                }
                let e = &self.trees[m][i];
                let own_side = e.side_of(col.var).expect("column edge holds its variable");
                let (node, var) = if own_side == 0 {
                    (e.nodes.1, e.conditioned.1)
                } else {
                    (e.nodes.0, e.conditioned.0)
                };
                let partner = self.conditional(m, node, var, &u, &mut memo)?;
                let inv = if own_side == 0 {
                    ev.h_inverse(p, partner)
                } else {
                    ev.h_given_u_inverse(p, partner)
                };
                p = inv.map_err(|err| {
                    Error::NumericFailure(format!("tree {} edge {i} {:?}: {err}", m + 1, e.conditioned))
                })?;
            }
            u[col.var] = p.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS);
        }
        Ok(u)
    }

    /// `F(var | D)` carried by `node` of level `m - 1` (a raw variable when
    /// `m == 0`).
    fn conditional(&self, m: usize, node: usize, var: usize, u: &[f64], memo: &mut [f64]) -> Result<f64> {
        if m == 0 {
            let x = u[node];
            if x.is_nan() {
                return Err(Error::InvalidSpec(format!("variable {node} needed before it is sampled")));
            }
            return Ok(x);
        }
        let level = m - 1;
        let e = &self.trees[level][node];
        let side = e.side_of(var).expect("proximity");
        let slot = self.offsets[level] + 2 * node + side;
        if !memo[slot].is_nan() {
            return Ok(memo[slot]);
        }
        let u1 = self.conditional(level, e.nodes.0, e.conditioned.0, u, memo)?;
        let u2 = self.conditional(level, e.nodes.1, e.conditioned.1, u, memo)?;
        let ev = &self.evals[level][node];
        let value = match (ev.is_independence(), side) {
            (true, 0) => u1,
            (true, _) => u2,
            (false, 0) => ev.h(u1, u2),
            (false, _) => ev.h_given_u(u1, u2),
        }
        .clamp(CLAMP_EPS, 1.0 - CLAMP_EPS);
        memo[slot] = value;
        Ok(value)
    }
}
