//! Library values against references computed here from first principles.

use std::f64::consts::PI;

use hjhomog::model::{Branch, CellProfile, HamiltonianKind, InitialData, Models, Potential, XProfile};
use hjhomog::oracle::{cell_momenta, effective_hamiltonian};
use hjhomog::trajectories::{effective_endpoint, oscillatory_endpoint, Query};
use hjhomog::values::{u_eps, u_effective};

fn gauss5<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    const X: [f64; 5] = [0.0, 0.538_469_310_105_683, -0.538_469_310_105_683, 0.906_179_845_938_664, -0.906_179_845_938_664];
    const W: [f64; 5] = [
        0.568_888_888_888_889,
        0.478_628_670_499_366,
        0.478_628_670_499_366,
        0.236_926_885_056_189,
        0.236_926_885_056_189,
    ];
    let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
    X.iter().zip(W).map(|(&x, w)| w * f(m + h * x)).sum::<f64>() * h
}

fn composite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    (0..n).map(|k| gauss5(&f, a + k as f64 * h, a + (k + 1) as f64 * h)).sum()
}

fn cell_models(u0: InitialData) -> Models {
    let v = Potential::separable(XProfile::Constant(1.0), CellProfile::Cos2PiMinus1 { scale: 1.0 });
    Models::new(HamiltonianKind::Quadratic, v, u0, 0.0, None).unwrap()
}

#[test]
fn cell_momentum_matches_direct_quadrature() {
    let m = cell_models(InitialData::Clamp);
    for r in [0.05, 0.5, 2.0] {
        let direct = composite(|y| (2.0 * (r + 1.0 - (2.0 * PI * y).cos())).sqrt(), 0.0, 1.0, 200);
        let p = cell_momenta(&m, 0.0, r).unwrap();
        assert!((p[0] - direct).abs() < 1e-10, "r = {r}: {} vs {direct}", p[0]);
        assert!((p[1] + direct).abs() < 1e-10);
        assert!((effective_hamiltonian(&m, 0.0, direct).unwrap() - r).abs() < 1e-9);
    }
}

/// For `V = V(y)`, `u(x, t) = min_y u0(y) + t L̄((x - y) / t)` with `L̄` the
/// convex conjugate of `H̄`, both evaluated by brute force on grids.
#[test]
fn effective_value_matches_hopf_lax_on_effective_hamiltonian() {
    let m = cell_models(InitialData::cone(2.5, 1.0).unwrap());
    let ps: Vec<f64> = (0..=1200).map(|k| -6.0 + 12.0 * k as f64 / 1200.0).collect();
    let hbar: Vec<f64> = ps.iter().map(|&p| effective_hamiltonian(&m, 0.0, p).unwrap()).collect();
    let lbar = |v: f64| {
        ps.iter()
            .zip(&hbar)
            .map(|(p, h)| p * v - h)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    for (x, t) in [(0.0, 0.5), (0.4, 1.0), (-0.9, 0.7), (0.95, 0.3)] {
        let n = 4000;
        let oracle = (0..=n)
            .map(|k| {
                let y = x - 4.0 * t + 8.0 * t * k as f64 / n as f64;
                m.u0.value(y) + t * lbar((x - y) / t)
            })
            .fold(f64::INFINITY, f64::min);
        let q = Query::new(x, t, 0.125, 1.0, 1.0).unwrap();
        let u = u_effective(&m, &q).unwrap().value;
        assert!((u - oracle).abs() < 2e-3, "({x}, {t}): {u} vs {oracle}");
    }
}

/// The effective endpoint spends exactly `t0` in averaged sojourn time.
#[test]
fn effective_endpoint_sojourn_is_t0() {
    let v = Potential::separable(XProfile::TwoPlusSin, CellProfile::Cos2PiMinus1 { scale: 1.0 });
    let m = Models::new(HamiltonianKind::Quadratic, v, InitialData::Clamp, 0.0, None).unwrap();
    let q = Query::new(0.2, 0.8, 0.125, 1.0, 1.0).unwrap();
    for r in [0.3, 2.0] {
        for b in Branch::BOTH {
            let c = effective_endpoint(&m, &q, r, b).unwrap().c;
            let density = |x: f64| {
                composite(
                    |y| 1.0 / (2.0 * (r - m.potential.v(x, y))).sqrt(),
                    0.0,
                    1.0,
                    64,
                )
            };
            let (lo, hi) = if c > q.x0 { (q.x0, c) } else { (c, q.x0) };
            let t = composite(density, lo, hi, 64);
            assert!((t - q.t0).abs() < 1e-9, "r = {r}, branch {}: {t}", b.index());
        }
    }
}

/// `eta' = sqrt(2 (r - V))` reaches `x_end / eps` after `t0 / eps`.
#[test]
fn oscillatory_endpoint_matches_sojourn_integral() {
    let m = cell_models(InitialData::Clamp);
    let q = Query::new(-0.3, 0.6, 0.0625, 1.0, 1.0).unwrap();
    let r = 0.4;
    let e = oscillatory_endpoint(&m, &q, r, Branch::Right).unwrap();
    let cells = ((e.x_end - q.x0) / q.eps * 64.0).ceil() as usize;
    let t = composite(
        |x| 1.0 / (2.0 * (r - m.potential.v(x, x / q.eps))).sqrt(),
        q.x0,
        e.x_end,
        cells,
    );
    assert!((t - q.t0).abs() < 1e-9, "{t}");
}

/// With `V = 0` both values reduce to the Hopf-Lax formula for `|p|^4`.
#[test]
fn free_power_hamiltonian_is_hopf_lax() {
    let m = Models::new(HamiltonianKind::Power { gamma: 4.0 }, Potential::zero(), InitialData::Clamp, 0.0, None).unwrap();
    // L(v) = 3 (|v| / 4)^{4/3}
    let l = |v: f64| 3.0 * (v.abs() / 4.0).powf(4.0 / 3.0);
    for (x, t) in [(0.0, 1.0), (0.5, 0.3), (-0.7, 0.8)] {
        let n = 200_000;
        let oracle = (0..=n)
            .map(|k| {
                let y = -4.0 + 8.0 * k as f64 / n as f64;
                -y.clamp(-1.0, 1.0) + t * l((x - y) / t)
            })
            .fold(f64::INFINITY, f64::min);
        let q = Query::new(x, t, 0.125, 1.0, 1.0).unwrap();
        let u = u_effective(&m, &q).unwrap().value;
        let ue = u_eps(&m, &q).unwrap().value;
        assert!((u - oracle).abs() < 1e-6, "({x}, {t}): {u} vs {oracle}");
        assert!((ue - u).abs() < 1e-9);
    }
}
