//! Scalar minimization: golden-section search and a log-spaced multistart.

use rayon::prelude::*;

use crate::error::Result;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// A located minimum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
}

/// Golden-section search on `[a, b]` down to bracket width `x_tol`.
/// The best point ever evaluated (including `a` and `b`) is returned.
pub fn golden_section<F>(mut f: F, a: f64, b: f64, x_tol: f64) -> Result<Minimum>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut best = Minimum { x: lo, value: f(lo)? };
    let fb = f(hi)?;
    if fb < best.value {
        best = Minimum { x: hi, value: fb };
    }
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for (x, v) in [(x1, f1), (x2, f2)] {
        if v < best.value {
            best = Minimum { x, value: v };
        }
    }
    while hi - lo > x_tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
            if f1 < best.value {
                best = Minimum { x: x1, value: f1 };
            }
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
            if f2 < best.value {
                best = Minimum { x: x2, value: f2 };
            }
        }
    }
    Ok(best)
}

/// Geometric grid of `count` points from `lo` to `hi` inclusive (`0 < lo < hi`).
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..count)
        .map(|k| {
            if k + 1 == count {
                hi
            } else {
                (llo + (lhi - llo) * k as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

/// Minimizes `f` over `[lo, hi]` by evaluating a log-spaced seed grid in
/// parallel and refining around the best seed with golden-section search.
/// Ties between seeds resolve to the smaller abscissa.
pub fn multistart_log<F>(f: F, lo: f64, hi: f64, seeds: usize, x_tol: f64) -> Result<Minimum>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let grid = log_grid(lo, hi, seeds);
    let values: Vec<f64> = grid.par_iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    let mut k_best = 0;
    for (k, &v) in values.iter().enumerate() {
        if v < values[k_best] {
            k_best = k;
        }
    }
    let a = grid[k_best.saturating_sub(1)];
    let b = grid[(k_best + 1).min(grid.len() - 1)];
    let refined = golden_section(&f, a, b, x_tol)?;
    let seed = Minimum {
        x: grid[k_best],
        value: values[k_best],
    };
    Ok(if refined.value < seed.value { refined } else { seed })
}
