//! The `r -> 0+` end of the energy scan.
//!
//! When the sojourn time `∫ dy / |G_i(r - V)|` diverges only like
//! `log(1/r)`, reaching an endpoint at distance `d` needs `r ~ exp(-1/d)`,
//! far below any scanned energy. In the limit the running cost is
//! `|H_i^{-1}(-V)|` per unit length and every endpoint between the first
//! zero line and `c_{i, r_floor}` is attained, so the infimum over those
//! energies is the minimum of `∫_{x0}^{X} |H_i^{-1}(-V)| + u0(X)` over `X`.

use crate::ergodic::{panel_opts, PanelGrid};
use crate::error::Result;
use crate::model::{Branch, Models};
use crate::numerics::minimize::golden_section;
use crate::numerics::quadrature::{integrate, integrate_vec_with_breaks, QuadOptions};
use crate::trajectories::Query;

/// Minimizes `cum(X) + u0(X)` over the nodes at or beyond `from`, then
/// refines inside the two segments adjacent to the best node.
/// `seg(a, b)` is the running cost from node `a` to a point `b`.
fn minimize_over_nodes<S>(models: &Models, nodes: &[f64], from: f64, dir: f64, seg: S) -> Result<Option<(f64, f64)>>
where
    S: Fn(f64, f64) -> Result<f64>,
{
    let mut cum = Vec::with_capacity(nodes.len());
    let mut acc = 0.0;
    cum.push(0.0);
    for w in nodes.windows(2) {
        acc += seg(w[0], w[1])?;
        cum.push(acc);
    }
    let allowed = |x: f64| dir * (x - from) >= -1e-15;
    let mut best: Option<(usize, f64)> = None;
    for (k, &x) in nodes.iter().enumerate() {
        if !allowed(x) {
            continue;
        }
        let f = cum[k] + models.u0.value(x);
        if best.map_or(true, |(_, b)| f < b) {
            best = Some((k, f));
        }
    }
    let Some((k, f_best)) = best else {
        return Ok(None);
    };
    let mut out = (f_best, nodes[k]);
    let mut refine = |j: usize| -> Result<()> {
        let (a, b) = (nodes[j], nodes[j + 1]);
        if !allowed(a) {
            return Ok(());
        }
        let m = golden_section(|x| Ok(cum[j] + seg(a, x)? + models.u0.value(x)), a, b, 1e-12)?;
        if m.value < out.0 {
            out = (m.value, m.x);
        }
        Ok(())
    };
    if k > 0 {
        refine(k - 1)?;
    }
    if k + 1 < nodes.len() {
        refine(k)?;
    }
    Ok(Some(out))
}

/// Inserts `extra` points strictly between the first and last node.
fn with_points(mut nodes: Vec<f64>, extra: impl IntoIterator<Item = f64>, dir: f64) -> Vec<f64> {
    let (first, last) = (nodes[0], *nodes.last().unwrap());
    nodes.extend(extra.into_iter().filter(|&p| dir * (p - first) > 0.0 && dir * (last - p) > 0.0));
    nodes.sort_by(|a, b| (dir * a).total_cmp(&(dir * b)));
    nodes.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    nodes
}

/// Limit of `A^eps` on branch `i` as `r -> 0+`, with endpoints between the
/// zero line at `from` and `x_far`. Returns `(value, endpoint)`.
pub(crate) fn oscillatory_closure(
    models: &Models,
    q: &Query,
    branch: Branch,
    from: f64,
    x_far: f64,
) -> Result<Option<(f64, f64)>> {
    let dir = branch.sign();
    if dir * (x_far - from) <= 0.0 {
        return Ok(None);
    }
    let eps = q.eps;
    let pot = &models.potential;
    let ham = &models.hamiltonian;
    let grid = PanelGrid::new(eps, &pot.cell_breaks());
    let mut nodes = vec![q.x0];
    let mut x = q.x0;
    while dir * (x_far - x) > 0.0 {
        x = grid.next_edge(x, dir);
        nodes.push(if dir * (x - x_far) > 0.0 { x_far } else { x });
    }
    let nodes = with_points(nodes, models.u0.kinks().into_iter().chain([from]), dir);
    let rate = |x: f64| ham.inverse(branch, -pot.v(x, x / eps)).abs();
    minimize_over_nodes(models, &nodes, from, dir, |a, b| {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if hi <= lo {
            return Ok(0.0);
        }
        integrate(rate, lo, hi, &panel_opts(hi - lo))
    })
}

/// `∫_0^1 |H_i^{-1}(-V(x, y))| dy`, the edge of the flat piece at `x`.
pub(crate) fn flat_edge(models: &Models, x: f64, branch: Branch) -> Result<f64> {
    let pot = &models.potential;
    let ham = &models.hamiltonian;
    let opts = QuadOptions::default().with_abs_tol(1e-14).with_rel_tol(1e-13);
    integrate_vec_with_breaks(|y| [ham.inverse(branch, -pot.v(x, y)).abs()], 0.0, 1.0, &pot.cell_breaks(), &opts)
        .map(|v| v[0])
}

/// Limit of `I_i(r)` as `r -> 0+`: slow motion across the flat piece costs
/// `|p̄_i(x, 0)|` per unit length, for endpoints between `x0` and `x_far`.
pub(crate) fn effective_closure(models: &Models, q: &Query, branch: Branch, x_far: f64) -> Result<Option<(f64, f64)>> {
    let dir = branch.sign();
    if dir * (x_far - q.x0) <= 0.0 {
        return Ok(None);
    }
    const NODES: usize = 256;
    let nodes: Vec<f64> = (0..=NODES)
        .map(|k| q.x0 + (x_far - q.x0) * k as f64 / NODES as f64)
        .collect();
    let nodes = with_points(nodes, models.u0.kinks(), dir);
    if models.potential.is_x_independent() {
        let rate = flat_edge(models, q.x0, branch)?;
        return minimize_over_nodes(models, &nodes, q.x0, dir, |a, b| Ok(rate * (b - a).abs()));
    }
    let opts = QuadOptions::default().with_abs_tol(1e-13).with_rel_tol(1e-13);
    minimize_over_nodes(models, &nodes, q.x0, dir, |a, b| {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if hi <= lo {
            return Ok(0.0);
        }
        let mut failure = None;
        let v = integrate(
            |x| match flat_edge(models, x, branch) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            lo,
            hi,
            &opts,
        )?;
        match failure {
            Some(e) => Err(e),
            None => Ok(v),
        }
    })
}
