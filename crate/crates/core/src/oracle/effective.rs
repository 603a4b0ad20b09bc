//! The effective Hamiltonian of `H(p) + V(x, y)` in one space dimension.
//!
//! With `max_y V(x, .) = 0` the cell problem at level `r >= 0` is solved by
//! the momenta `p̄_±(x, r) = ∫_0^1 H_{1,2}^{-1}(r - V(x, y)) dy`, so `H̄(x, .)`
//! is the inverse of `r -> p̄_±(x, r)` outside `[p̄_-(x, 0), p̄_+(x, 0)]` and
//! vanishes inside it.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Branch, Models};
use crate::numerics::quadrature::{integrate_vec_with_breaks, QuadOptions};
use crate::numerics::roots::newton_bisect;

/// `(p̄_+(x, r), p̄_-(x, r), ∂_r p̄_+, ∂_r p̄_-)` for `r >= 0`.
pub fn cell_momenta(models: &Models, x: f64, r: f64) -> Result<[f64; 4]> {
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("cell momenta need r >= 0, got {r}")));
    }
    let ham = &models.hamiltonian;
    let pot = &models.potential;
    let opts = QuadOptions::default().with_abs_tol(1e-14).with_rel_tol(1e-13);
    integrate_vec_with_breaks(
        |y| {
            let w = r - pot.v(x, y);
            let (gr, gl) = (ham.g(Branch::Right, w), ham.g(Branch::Left, w));
            [
                ham.inverse(Branch::Right, w),
                ham.inverse(Branch::Left, w),
                if gr > 0.0 { 1.0 / gr } else { 0.0 },
                if gl < 0.0 { 1.0 / gl } else { 0.0 },
            ]
        },
        0.0,
        1.0,
        &pot.cell_breaks(),
        &opts,
    )
}

/// Edges `[p̄_-(x, 0), p̄_+(x, 0)]` of the flat piece at `x`.
pub fn flat_piece(models: &Models, x: f64) -> Result<(f64, f64)> {
    let m = cell_momenta(models, x, 0.0)?;
    Ok((m[1], m[0]))
}

/// `H̄(x, p)` by direct inversion of the cell momenta.
pub fn effective_hamiltonian(models: &Models, x: f64, p: f64) -> Result<f64> {
    let (lo, hi) = flat_piece(models, x)?;
    if p >= lo && p <= hi {
        return Ok(0.0);
    }
    let (branch, k) = if p > hi { (Branch::Right, 0) } else { (Branch::Left, 1) };
    // p̄ grows at least like H_i^{-1}(r), so r = H(p) + ||V|| is past the root.
    let r_hi = models.hamiltonian.h(p) + models.sup_v() + 1.0;
    let mut failure = None;
    let r = newton_bisect(
        |r| match cell_momenta(models, x, r) {
            Ok(m) => (branch.sign() * (m[k] - p), branch.sign() * m[k + 2]),
            Err(e) => {
                failure.get_or_insert(e);
                (f64::NAN, f64::NAN)
            }
        },
        0.0,
        r_hi,
        1e-15,
        1e-14,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(r),
    }
}

/// `H̄` tabulated on an `x` grid and the energy grid `r_k = r_max (k / K)^2`.
/// Evaluation inverts `p̄_±` at the two neighbouring nodes by binary search
/// with linear interpolation in `r`, then interpolates linearly in `x`.
#[derive(Clone, Debug)]
pub struct EffectiveTable {
    xs: Vec<f64>,
    rs: Vec<f64>,
    /// `plus[i][k] = p̄_+(xs[i], rs[k])`, increasing in `k`.
    plus: Vec<Vec<f64>>,
    /// `minus[i][k] = p̄_-(xs[i], rs[k])`, decreasing in `k`.
    minus: Vec<Vec<f64>>,
}

impl EffectiveTable {
    /// Covers `x in [lo, hi]` with spacing at most `dx` and momenta up to
    /// `|p| <= p_max`.
    pub fn build(models: &Models, lo: f64, hi: f64, dx: f64, p_max: f64, levels: usize) -> Result<Self> {
        if !(hi >= lo) || !(dx > 0.0) || levels < 2 {
            return Err(Error::InvalidParameter(format!(
                "effective table needs lo <= hi, dx > 0 and >= 2 levels, got [{lo}, {hi}], {dx}, {levels}"
            )));
        }
        let xs: Vec<f64> = if models.potential.is_x_independent() {
            vec![lo]
        } else {
            let n = ((hi - lo) / dx).ceil().max(1.0) as usize;
            (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
        };
        let ham = &models.hamiltonian;
        let r_max = ham.h(p_max).max(ham.h(-p_max)) + models.sup_v() + 1.0;
        let rs: Vec<f64> = (0..=levels)
            .map(|k| r_max * (k as f64 / levels as f64).powi(2))
            .collect();
        let rows: Vec<(Vec<f64>, Vec<f64>)> = xs
            .par_iter()
            .map(|&x| {
                let mut plus = Vec::with_capacity(rs.len());
                let mut minus = Vec::with_capacity(rs.len());
                for &r in &rs {
                    let m = cell_momenta(models, x, r)?;
                    plus.push(m[0]);
                    minus.push(m[1]);
                }
                Ok((plus, minus))
            })
            .collect::<Result<Vec<_>>>()?;
        let (plus, minus) = rows.into_iter().unzip();
        Ok(Self { xs, rs, plus, minus })
    }

    fn invert(&self, row: usize, p: f64) -> f64 {
        let (pp, sign) = if p >= self.plus[row][0] {
            (&self.plus[row], 1.0)
        } else if p <= self.minus[row][0] {
            (&self.minus[row], -1.0)
        } else {
            return 0.0;
        };
        let target = sign * p;
        let n = pp.len();
        // Largest k with sign * pp[k] <= target.
        let k = pp.partition_point(|&v| sign * v <= target).saturating_sub(1).min(n - 2);
        let (a, b) = (sign * pp[k], sign * pp[k + 1]);
        let t = (target - a) / (b - a);
        self.rs[k] + t * (self.rs[k + 1] - self.rs[k])
    }

    pub fn eval(&self, x: f64, p: f64) -> f64 {
        if self.xs.len() == 1 {
            return self.invert(0, p);
        }
        let h = self.xs[1] - self.xs[0];
        let s = ((x - self.xs[0]) / h).clamp(0.0, (self.xs.len() - 1) as f64);
        let i = (s.floor() as usize).min(self.xs.len() - 2);
        let t = s - i as f64;
        (1.0 - t) * self.invert(i, p) + t * self.invert(i + 1, p)
    }

    /// `[p̄_-(x, 0), p̄_+(x, 0)]`, interpolated.
    pub fn flat_piece(&self, x: f64) -> (f64, f64) {
        if self.xs.len() == 1 {
            return (self.minus[0][0], self.plus[0][0]);
        }
        let h = self.xs[1] - self.xs[0];
        let s = ((x - self.xs[0]) / h).clamp(0.0, (self.xs.len() - 1) as f64);
        let i = (s.floor() as usize).min(self.xs.len() - 2);
        let t = s - i as f64;
        (
            (1.0 - t) * self.minus[i][0] + t * self.minus[i + 1][0],
            (1.0 - t) * self.plus[i][0] + t * self.plus[i + 1][0],
        )
    }

    pub fn r_max(&self) -> f64 {
        *self.rs.last().unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CellProfile, HamiltonianKind, InitialData, Potential, XProfile};
    use std::f64::consts::PI;

    fn models(kind: HamiltonianKind, v: Potential) -> Models {
        Models::new(kind, v, InitialData::Clamp, 0.0, None).unwrap()
    }

    #[test]
    fn free_effective_hamiltonian_is_h() {
        let m = models(HamiltonianKind::Power { gamma: 4.0 }, Potential::zero());
        for p in [-1.7, -0.2, 0.0, 0.4, 2.0] {
            let hb = effective_hamiltonian(&m, 0.3, p).unwrap();
            assert!((hb - m.hamiltonian.h(p)).abs() < 1e-12, "{p}: {hb}");
        }
    }

    #[test]
    fn flat_piece_edge_closed_form() {
        let v = Potential::separable(XProfile::Constant(1.0), CellProfile::Cos2PiMinus1 { scale: 1.0 });
        let m = models(HamiltonianKind::Quadratic, v);
        let (lo, hi) = flat_piece(&m, 0.0).unwrap();
        assert!((hi - 4.0 / PI).abs() < 1e-12);
        assert!((lo + 4.0 / PI).abs() < 1e-12);
        assert_eq!(effective_hamiltonian(&m, 0.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn inversion_round_trip() {
        let v = Potential::separable(XProfile::TwoPlusSin, CellProfile::Cos2PiMinus1 { scale: 1.0 });
        let m = models(HamiltonianKind::Quadratic, v);
        for r in [1e-6, 0.01, 0.7, 3.0] {
            let p = cell_momenta(&m, 0.4, r).unwrap();
            assert!((effective_hamiltonian(&m, 0.4, p[0]).unwrap() - r).abs() < 1e-8);
            assert!((effective_hamiltonian(&m, 0.4, p[1]).unwrap() - r).abs() < 1e-8);
        }
    }

    #[test]
    fn table_tracks_direct_inversion() {
        let v = Potential::separable(XProfile::TwoPlusSin, CellProfile::Cos2PiMinus1 { scale: 1.0 });
        let m = models(HamiltonianKind::Quadratic, v);
        let table = EffectiveTable::build(&m, -1.0, 1.0, 0.02, 4.0, 400).unwrap();
        for &x in &[-0.95, -0.3, 0.0, 0.51] {
            for &p in &[-3.5, -2.0, -1.0, 0.0, 1.5, 2.2, 3.9] {
                let exact = effective_hamiltonian(&m, x, p).unwrap();
                let approx = table.eval(x, p);
                assert!((exact - approx).abs() < 2e-3 * exact.max(1.0), "({x}, {p}): {exact} vs {approx}");
            }
        }
    }

    #[test]
    fn effective_hamiltonian_is_convex_and_nonnegative() {
        let v = Potential::separable(XProfile::Constant(1.0), CellProfile::TentProp43);
        let m = models(HamiltonianKind::Quadratic, v);
        let ps: Vec<f64> = (0..=60).map(|k| -3.0 + 0.1 * k as f64).collect();
        let hs: Vec<f64> = ps.iter().map(|&p| effective_hamiltonian(&m, 0.0, p).unwrap()).collect();
        assert!(hs.iter().all(|&h| h >= 0.0));
        for w in hs.windows(3) {
            assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-9);
        }
    }
}
