//! Oscillatory integrals `∫ F(x, x/eps) dx`, their cell averages
//! `∫∫ F(x, y) dy dx`, and the explicit O(eps) bound between the two.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::minimize::golden_section;
use crate::numerics::quadrature::{integrate_vec, integrate_vec_with_breaks, QuadOptions};

/// A function `F(x, y)`, 1-periodic in `y`, with its `x`-derivative.
pub trait Oscilland: Sync {
    fn f(&self, x: f64, y: f64) -> f64;
    fn fx(&self, x: f64, y: f64) -> f64;

    /// Points of `[0, 1)` where `y -> F(x, y)` is not smooth or changes sign.
    fn y_breaks(&self) -> Vec<f64> {
        Vec::new()
    }
}

type Field = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Closure-backed [`Oscilland`].
#[derive(Clone)]
pub struct FnOscilland {
    f: Field,
    fx: Field,
    breaks: Vec<f64>,
}

impl FnOscilland {
    pub fn new<F, G>(f: F, fx: G) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            f: Arc::new(f),
            fx: Arc::new(fx),
            breaks: Vec::new(),
        }
    }

    pub fn with_breaks(mut self, breaks: Vec<f64>) -> Self {
        self.breaks = breaks;
        self
    }
}

impl Oscilland for FnOscilland {
    fn f(&self, x: f64, y: f64) -> f64 {
        (self.f)(x, y)
    }

    fn fx(&self, x: f64, y: f64) -> f64 {
        (self.fx)(x, y)
    }

    fn y_breaks(&self) -> Vec<f64> {
        self.breaks.clone()
    }
}

/// Cuts an `x`-line into panels aligned with the fast scale: every point
/// `x = eps (k + o)` for a cell offset `o` is a panel edge, and no panel is
/// wider than `eps / 8`.
#[derive(Clone, Debug)]
pub struct PanelGrid {
    eps: f64,
    /// Sorted cell offsets in `[0, 1)`, always including `k / 8`.
    offsets: Vec<f64>,
}

impl PanelGrid {
    pub fn new(eps: f64, breaks: &[f64]) -> Self {
        let mut offsets: Vec<f64> = (0..8).map(|k| k as f64 / 8.0).collect();
        offsets.extend(breaks.iter().map(|b| b.rem_euclid(1.0)).filter(|b| *b < 1.0));
        offsets.sort_by(f64::total_cmp);
        offsets.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        Self { eps, offsets }
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// First grid point strictly beyond `x` in direction `dir` (`±1`).
    /// Edges closer than `1e-9` cells are skipped so panels never collapse.
    pub fn next_edge(&self, x: f64, dir: f64) -> f64 {
        let y = x / self.eps;
        let gap = 1e-9;
        let mut cell = y.floor();
        loop {
            let found = if dir > 0.0 {
                self.offsets.iter().map(|&q| cell + q).find(|&c| c - y > gap)
            } else {
                self.offsets.iter().rev().map(|&q| cell + q).find(|&c| y - c > gap)
            };
            if let Some(c) = found {
                return self.eps * c;
            }
            cell += dir.signum();
        }
    }

    /// Panels covering `[a, b]` (`a < b`).
    pub fn panels(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut x = a;
        while x < b {
            let next = self.next_edge(x, 1.0).min(b);
            if next <= x {
                break;
            }
            out.push((x, next));
            x = next;
        }
        out
    }
}

/// Absolute tolerance per unit length used by the oscillatory and averaged
/// integrals.
pub const TOL_PER_LENGTH: f64 = 1e-10;

pub(crate) fn panel_opts(len: f64) -> QuadOptions {
    QuadOptions::default()
        .with_abs_tol((0.5 * TOL_PER_LENGTH * len).max(1e-16))
        .with_rel_tol(1e-13)
}

/// `∫_a^b g(x) dx` for an integrand with fast-scale structure, integrated
/// panel by panel on `grid`.
pub fn panel_integral<const N: usize, F>(mut g: F, a: f64, b: f64, grid: &PanelGrid) -> Result<[f64; N]>
where
    F: FnMut(f64) -> [f64; N],
{
    let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut total = [0.0; N];
    for (p, q) in grid.panels(lo, hi) {
        let est = integrate_vec(&mut g, p, q, &panel_opts(q - p))?;
        for c in 0..N {
            total[c] += est.value[c];
        }
    }
    for t in total.iter_mut() {
        *t *= sign;
    }
    Ok(total)
}

/// `∫_a^b F(x, x/eps) dx`.
pub fn oscillatory_integral<O: Oscilland + ?Sized>(f: &O, a: f64, b: f64, eps: f64) -> Result<f64> {
    if !(a < b) || !(eps > 0.0) {
        return Err(Error::Domain(format!("oscillatory integral needs a < b and eps > 0, got [{a}, {b}], eps = {eps}")));
    }
    let grid = PanelGrid::new(eps, &f.y_breaks());
    panel_integral(|x| [f.f(x, x / eps)], a, b, &grid).map(|v| v[0])
}

/// `∫_0^1 g(y) dy` split at `breaks`.
pub fn cell_integral<F>(g: F, breaks: &[f64], tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut g = g;
    let opts = QuadOptions::default().with_abs_tol(tol).with_rel_tol(1e-13);
    integrate_vec_with_breaks(|y| [g(y)], 0.0, 1.0, breaks, &opts).map(|v| v[0])
}

/// `∫_a^b ∫_0^1 F(x, y) dy dx`.
pub fn cell_average_integral<O: Oscilland + ?Sized>(f: &O, a: f64, b: f64) -> Result<f64> {
    if !(a < b) {
        return Err(Error::Domain(format!("cell average needs a < b, got [{a}, {b}]")));
    }
    let breaks = f.y_breaks();
    let mut inner_err = None;
    let opts = QuadOptions::default()
        .with_abs_tol(0.5 * TOL_PER_LENGTH * (b - a))
        .with_rel_tol(1e-13);
    let est = integrate_vec(
        |x| match cell_integral(|y| f.f(x, y), &breaks, 1e-13) {
            Ok(v) => [v],
            Err(e) => {
                inner_err.get_or_insert(e);
                [0.0]
            }
        },
        a,
        b,
        &opts,
    )?;
    if let Some(e) = inner_err {
        return Err(e);
    }
    Ok(est.value[0])
}

/// Raw constant and the value inflated by 1% to absorb the grid error of
/// the `x`-maxima.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErgodicConstant {
    pub raw: f64,
    pub certified: f64,
}

/// `max_{x in [a, b]} phi(x)` on a 512-point grid refined around the argmax.
fn grid_max<F>(phi: F, a: f64, b: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let n = 512;
    let xs: Vec<f64> = (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect();
    let vals: Vec<f64> = xs.par_iter().map(|&x| phi(x)).collect::<Result<Vec<_>>>()?;
    let (k, &best) = vals
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |acc, cur| if *cur.1 > *acc.1 { cur } else { acc });
    let lo = xs[k.saturating_sub(1)];
    let hi = xs[(k + 1).min(n - 1)];
    let refined = golden_section(|x| phi(x).map(|v| -v), lo, hi, 1e-10 * (b - a))?;
    Ok(best.max(-refined.value))
}

/// `C = 2 max_x ∫|F| dy + (b - a) max_x ∫|F_x| dy`.
pub fn ergodic_constant<O: Oscilland + ?Sized>(f: &O, a: f64, b: f64) -> Result<ErgodicConstant> {
    let breaks = f.y_breaks();
    let m0 = grid_max(|x| cell_integral(|y| f.f(x, y).abs(), &breaks, 1e-13), a, b)?;
    let m1 = grid_max(|x| cell_integral(|y| f.fx(x, y).abs(), &breaks, 1e-13), a, b)?;
    let raw = 2.0 * m0 + (b - a) * m1;
    Ok(ErgodicConstant {
        raw,
        certified: 1.01 * raw,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErgodicRow {
    pub eps: f64,
    pub oscillatory: f64,
    pub averaged: f64,
    pub error: f64,
    pub bound: f64,
    /// `error / eps`.
    pub ratio: f64,
    pub passed: bool,
}

/// Compares oscillatory and averaged integrals for each `eps` against
/// `C eps + 2 tol`, with `tol` the quadrature tolerance.
pub fn verify_ergodic_bound<O: Oscilland + ?Sized>(f: &O, a: f64, b: f64, eps_list: &[f64]) -> Result<Vec<ErgodicRow>> {
    let c = ergodic_constant(f, a, b)?;
    let averaged = cell_average_integral(f, a, b)?;
    let tol = TOL_PER_LENGTH * (b - a);
    eps_list
        .par_iter()
        .map(|&eps| {
            let oscillatory = oscillatory_integral(f, a, b, eps)?;
            let error = (oscillatory - averaged).abs();
            let bound = c.certified * eps + 2.0 * tol;
            Ok(ErgodicRow {
                eps,
                oscillatory,
                averaged,
                error,
                bound,
                ratio: error / eps,
                passed: error <= bound,
            })
        })
        .collect()
}
