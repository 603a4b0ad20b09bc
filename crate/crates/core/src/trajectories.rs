//! Minimizing trajectories of the cell control problem: constant-energy
//! paths, the two separatrices of the zero-energy level, and the endpoints
//! `eps * eta(t0 / eps)` and `c_{i,r}` reached at time `t0`.

use crate::ergodic::{panel_opts, PanelGrid};
use crate::error::{Error, Result};
use crate::model::{Branch, Models};
use crate::numerics::ode::{rk4_adaptive, Flow, StepControl};
use crate::numerics::quadrature::{integrate_vec, integrate_vec_with_breaks, QuadOptions};
use crate::numerics::roots::newton_bisect;

/// Largest energy drift accepted from [`integrate_el`].
pub const DRIFT_TOL: f64 = 1e-6;

/// Separatrices stop once they are this close to their limit.
pub const SEPARATRIX_GAP: f64 = 1e-9;

/// A point `(x0, t0)` at scale `eps`, inside the window `[-R, R] x [0, T]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Query {
    pub x0: f64,
    pub t0: f64,
    pub eps: f64,
    pub half_width: f64,
    pub horizon: f64,
}

impl Query {
    pub fn new(x0: f64, t0: f64, eps: f64, half_width: f64, horizon: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {eps}")));
        }
        if !(half_width > 0.0 && horizon > 0.0) || !half_width.is_finite() || !horizon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "window needs R, T > 0, got R = {half_width}, T = {horizon}"
            )));
        }
        if !(x0.abs() <= half_width) || !(t0 >= 0.0 && t0 <= horizon) {
            return Err(Error::InvalidParameter(format!(
                "probe ({x0}, {t0}) outside [-{half_width}, {half_width}] x [0, {horizon}]"
            )));
        }
        Ok(Self {
            x0,
            t0,
            eps,
            half_width,
            horizon,
        })
    }

    pub fn with_eps(self, eps: f64) -> Result<Self> {
        Self::new(self.x0, self.t0, eps, self.half_width, self.horizon)
    }

    /// The truncation energy and the spatial window it induces.
    pub fn window(&self, models: &Models) -> Window {
        let r0 = crate::values::r0_threshold(models);
        let speed = Branch::BOTH
            .iter()
            .map(|&b| models.hamiltonian.g(b, r0 + models.sup_v()).abs())
            .fold(0.0, f64::max);
        let c0 = self.horizon * speed;
        Window {
            r0,
            c0,
            lo: -self.half_width - c0,
            hi: self.half_width + c0,
        }
    }
}

/// `r0`, `c0 = T * G(r0 + ||V||)` and the interval `I0 = [lo, hi]` that
/// contains every endpoint reachable with energy below `r0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub r0: f64,
    pub c0: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathSample {
    pub s: f64,
    pub eta: f64,
    pub eta_dot: f64,
    /// `|H(L'(eta_dot)) + V - r|`, also checked on the second-order companion.
    pub drift: f64,
}

/// A solution of the Euler-Lagrange equation with constant energy `r > 0`.
#[derive(Clone, Debug)]
pub struct EnergyPath {
    pub branch: Branch,
    pub r: f64,
    pub eps: f64,
    pub start: f64,
    pub end: f64,
    pub samples: Vec<PathSample>,
    pub drift: f64,
    /// Largest gap between the first-order path and the path of the
    /// second-order (Hamiltonian) system started from the same state.
    pub el_gap: f64,
}

impl EnergyPath {
    /// `eps * eta(t0 / eps)`.
    pub fn x_end(&self) -> f64 {
        self.eps * self.end
    }
}

fn energy(models: &Models, eps: f64, eta: f64, p: f64) -> f64 {
    models.hamiltonian.h(p) + models.potential.v(eps * eta, eta)
}

/// Integrates `eta' = G_i(r - V(eps eta, eta))` over `s in [0, t0 / eps]`
/// with RK4, alongside the Hamiltonian system `eta' = H'(p)`,
/// `p' = -(eps V_x + V_y)` as an independent check.
pub fn integrate_el(models: &Models, q: &Query, r: f64, branch: Branch) -> Result<EnergyPath> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("integrate_el needs r > 0, got {r}")));
    }
    let mut h_max = q.eps.min(1.0) / 64.0;
    let mut last = None;
    for _ in 0..4 {
        let path = integrate_el_with_step(models, q, r, branch, h_max)?;
        if path.drift <= DRIFT_TOL {
            return Ok(path);
        }
        last = Some(path.drift);
        h_max *= 0.5;
    }
    Err(Error::Drift {
        drift: last.unwrap_or(f64::NAN),
        tolerance: DRIFT_TOL,
    })
}

fn integrate_el_with_step(models: &Models, q: &Query, r: f64, branch: Branch, h_max: f64) -> Result<EnergyPath> {
    let ham = &models.hamiltonian;
    let pot = &models.potential;
    let eps = q.eps;
    let start = q.x0 / eps;
    let p_start = ham.branch_inverse(branch, r - pot.v(q.x0, start))?;
    let rhs = |y: &[f64; 3]| {
        let w = r - pot.v(eps * y[0], y[0]);
        [
            ham.g(branch, w),
            ham.dh(y[2]),
            -(eps * pot.vx(eps * y[1], y[1]) + pot.vy(eps * y[1], y[1])),
        ]
    };
    let ctl = StepControl {
        h_max,
        h_min: 1e-12,
        tol: 1e-12,
    };
    let raw = rk4_adaptive(rhs, [start, start, p_start], q.t0 / eps, &ctl, |_, _| Flow::Continue)?;
    let mut samples = Vec::with_capacity(raw.len());
    let mut drift: f64 = 0.0;
    let mut el_gap: f64 = 0.0;
    for smp in &raw {
        let [eta, eta_h, p_h] = smp.y;
        let eta_dot = rhs(&smp.y)[0];
        let p = ham.momentum(eta_dot)?;
        let d = (energy(models, eps, eta, p) - r)
            .abs()
            .max((energy(models, eps, eta_h, p_h) - r).abs());
        drift = drift.max(d);
        el_gap = el_gap.max((eta - eta_h).abs());
        samples.push(PathSample {
            s: smp.t,
            eta,
            eta_dot,
            drift: d,
        });
    }
    let end = samples.last().map(|s| s.eta).unwrap_or(start);
    Ok(EnergyPath {
        branch,
        r,
        eps,
        start,
        end,
        samples,
        drift,
        el_gap,
    })
}

/// Largest `|H(L'(eta_dot)) + V(eps eta, eta) - r|` over the samples, with
/// `L'` evaluated on the recorded velocities.
pub fn energy_drift(models: &Models, path: &EnergyPath) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for s in &path.samples {
        let p = models.hamiltonian.momentum(s.eta_dot)?;
        worst = worst.max((energy(models, path.eps, s.eta, p) - path.r).abs());
    }
    Ok(worst)
}

/// Endpoint of a constant-energy path computed by quadrature, together with
/// the momentum integral `∫ |H_i^{-1}(r - V(x, x/eps))| dx` along it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OscillatoryEndpoint {
    pub x_end: f64,
    pub momentum_integral: f64,
}

/// Solves `t0 = ∫_{x0}^{x_end} dx / |G_i(r - V(x, x/eps))|` for `x_end`
/// by marching over fast-scale panels and refining inside the last one.
pub fn oscillatory_endpoint(models: &Models, q: &Query, r: f64, branch: Branch) -> Result<OscillatoryEndpoint> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("oscillatory endpoint needs r > 0, got {r}")));
    }
    let ham = &models.hamiltonian;
    let pot = &models.potential;
    let eps = q.eps;
    let dir = branch.sign();
    let integrand = |x: f64| {
        let w = r - pot.v(x, x / eps);
        [1.0 / ham.g(branch, w).abs(), ham.inverse(branch, w).abs()]
    };
    let over = |a: f64, b: f64| -> Result<[f64; 2]> {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if hi <= lo {
            return Ok([0.0, 0.0]);
        }
        Ok(integrate_vec(integrand, lo, hi, &panel_opts(hi - lo))?.value)
    };

    let grid = PanelGrid::new(eps, &pot.cell_breaks());
    // The slowest admissible speed bounds the distance travelled.
    let reach = q.t0 * ham.g(branch, r + models.sup_v()).abs() + 2.0 * eps;
    let mut x = q.x0;
    let mut elapsed = 0.0;
    let mut momentum = 0.0;
    if q.t0 == 0.0 {
        return Ok(OscillatoryEndpoint {
            x_end: x,
            momentum_integral: 0.0,
        });
    }
    loop {
        if (x - q.x0).abs() > reach {
            return Err(Error::NoConvergence(format!(
                "oscillatory endpoint for r = {r} ran past the a priori reach {reach}"
            )));
        }
        let next = grid.next_edge(x, dir);
        let [dt, dm] = over(x, next)?;
        if elapsed + dt < q.t0 {
            elapsed += dt;
            momentum += dm;
            x = next;
            continue;
        }
        let width = (next - x).abs();
        let mut failure = None;
        let d = newton_bisect(
            |d| match over(x, x + dir * d) {
                Ok(v) => (elapsed + v[0] - q.t0, integrand(x + dir * d)[0]),
                Err(e) => {
                    failure.get_or_insert(e);
                    (f64::NAN, f64::NAN)
                }
            },
            0.0,
            width,
            1e-15 * width.max(1.0),
            1e-14 * q.t0.max(1.0),
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        let x_end = x + dir * d;
        momentum += over(x, x_end)?[1];
        return Ok(OscillatoryEndpoint {
            x_end,
            momentum_integral: momentum,
        });
    }
}

/// `∫_0^1 dy / |G_i(r - V(x, y))|` and `∫_0^1 |H_i^{-1}(r - V(x, y))| dy`.
pub fn cell_profile(models: &Models, x: f64, r: f64, branch: Branch) -> Result<[f64; 2]> {
    let ham = &models.hamiltonian;
    let pot = &models.potential;
    let opts = QuadOptions::default().with_abs_tol(1e-14).with_rel_tol(1e-13);
    integrate_vec_with_breaks(
        |y| {
            let w = r - pot.v(x, y);
            [1.0 / ham.g(branch, w).abs(), ham.inverse(branch, w).abs()]
        },
        0.0,
        1.0,
        &pot.cell_breaks(),
        &opts,
    )
}

/// `c_{i,r}` together with `∫∫ |H_i^{-1}(r - V)| dy dx` between `x0` and it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveEndpoint {
    pub c: f64,
    pub momentum_integral: f64,
}

fn segment_integral(models: &Models, a: f64, b: f64, r: f64, branch: Branch) -> Result<[f64; 2]> {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if hi <= lo {
        return Ok([0.0, 0.0]);
    }
    if models.potential.is_x_independent() {
        let k = cell_profile(models, lo, r, branch)?;
        return Ok([k[0] * (hi - lo), k[1] * (hi - lo)]);
    }
    let mut failure = None;
    let opts = QuadOptions::default()
        .with_abs_tol(1e-13 * (hi - lo).max(1.0))
        .with_rel_tol(1e-13);
    let est = integrate_vec(
        |x| match cell_profile(models, x, r, branch) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                [0.0, 0.0]
            }
        },
        lo,
        hi,
        &opts,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(est.value),
    }
}

/// Solves `∫_{x0}^{c} ∫_0^1 dy dx / |G_i(r - V(x, y))| = t0`; `c_{1,r}` lies
/// to the right of `x0` and `c_{2,r}` to the left.
pub fn effective_endpoint(models: &Models, q: &Query, r: f64, branch: Branch) -> Result<EffectiveEndpoint> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("effective endpoint needs r > 0, got {r}")));
    }
    if q.t0 == 0.0 {
        return Ok(EffectiveEndpoint {
            c: q.x0,
            momentum_integral: 0.0,
        });
    }
    let dir = branch.sign();
    let width = q.horizon * models.hamiltonian.g(branch, r + models.sup_v()).abs() + 1.0;
    if models.potential.is_x_independent() {
        let k = cell_profile(models, q.x0, r, branch)?;
        let d = q.t0 / k[0];
        return Ok(EffectiveEndpoint {
            c: q.x0 + dir * d,
            momentum_integral: k[1] * d,
        });
    }
    let mut failure = None;
    let d = newton_bisect(
        |d| {
            let x = q.x0 + dir * d;
            match (segment_integral(models, q.x0, x, r, branch), cell_profile(models, x, r, branch)) {
                (Ok(s), Ok(k)) => (s[0] - q.t0, k[0]),
                (Err(e), _) | (_, Err(e)) => {
                    failure.get_or_insert(e);
                    (f64::NAN, f64::NAN)
                }
            }
        },
        0.0,
        width,
        1e-14,
        1e-11,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let c = q.x0 + dir * d;
    Ok(EffectiveEndpoint {
        c,
        momentum_integral: segment_integral(models, q.x0, c, r, branch)?[1],
    })
}

/// A zero-energy path `gamma_+` (branch 1) or `gamma_-` (branch 2),
/// approaching the nearest zero of `V(x0, .)` on its side.
#[derive(Clone, Debug)]
pub struct Separatrix {
    pub branch: Branch,
    /// `ybar_0` for `gamma_+`, `yunder_0` for `gamma_-`.
    pub limit: f64,
    /// `(s, eta)` samples; `s` stops early once the limit is reached.
    pub samples: Vec<(f64, f64)>,
    pub end: f64,
}

impl Separatrix {
    pub fn is_stationary(&self) -> bool {
        self.samples.iter().all(|&(_, e)| e == self.samples[0].1)
    }
}

/// `gamma_+` and `gamma_-` through `x0 / eps`: `eta' = ±|G_i(-V(eps eta, eta))|`
/// on `[0, t0 / eps]`, stopped within [`SEPARATRIX_GAP`] of the limit.
pub fn separatrix_paths(models: &Models, q: &Query) -> Result<(Separatrix, Separatrix)> {
    let start = q.x0 / q.eps;
    let (upper, lower) = models.potential.bracketing_zeros(start)?;
    let plus = separatrix(models, q, Branch::Right, start, upper)?;
    let minus = separatrix(models, q, Branch::Left, start, lower)?;
    Ok((plus, minus))
}

fn separatrix(models: &Models, q: &Query, branch: Branch, start: f64, limit: f64) -> Result<Separatrix> {
    let eps = q.eps;
    let s_end = q.t0 / eps;
    if (limit - start).abs() < SEPARATRIX_GAP || s_end == 0.0 {
        return Ok(Separatrix {
            branch,
            limit,
            samples: vec![(0.0, start), (s_end, start)],
            end: start,
        });
    }
    let ham = &models.hamiltonian;
    let pot = &models.potential;
    let dir = branch.sign();
    let rhs = |y: &[f64; 1]| [dir * ham.g(branch, -pot.v(eps * y[0], y[0])).abs()];
    let ctl = StepControl {
        h_max: eps.min(1.0) / 64.0,
        h_min: 1e-12,
        tol: 1e-12,
    };
    let raw = rk4_adaptive(rhs, [start], s_end, &ctl, |_, next| {
        if dir * (next[0] - limit) >= 0.0 {
            next[0] = limit;
            return Flow::Stop;
        }
        if (limit - next[0]).abs() < SEPARATRIX_GAP {
            Flow::Stop
        } else {
            Flow::Continue
        }
    })?;
    let samples: Vec<(f64, f64)> = raw.iter().map(|s| (s.t, s.y[0])).collect();
    let end = samples.last().map(|s| s.1).unwrap_or(start);
    Ok(Separatrix {
        branch,
        limit,
        samples,
        end,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CellProfile, HamiltonianKind, InitialData, Potential, XProfile};

    fn models(v: Potential) -> Models {
        Models::new(HamiltonianKind::Quadratic, v, InitialData::Constant(0.0), 0.0, None).unwrap()
    }

    fn cos_v(a: XProfile) -> Potential {
        Potential::separable(a, CellProfile::Cos2PiMinus1 { scale: 1.0 })
    }

    #[test]
    fn free_path_is_a_straight_line() {
        let m = models(Potential::zero());
        let q = Query::new(0.0, 1.0, 0.1, 1.0, 1.0).unwrap();
        for (b, target) in [(Branch::Right, 10.0), (Branch::Left, -10.0)] {
            let p = integrate_el(&m, &q, 0.5, b).unwrap();
            assert!((p.end - target).abs() < 1e-9, "{}", p.end);
            assert!(p.drift < 1e-12);
            let e = oscillatory_endpoint(&m, &q, 0.5, b).unwrap();
            assert!((e.x_end - target / 10.0).abs() < 1e-12);
            let c = effective_endpoint(&m, &q, 0.5, b).unwrap();
            assert!((c.c - target / 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn quadrature_endpoint_matches_ode_endpoint() {
        let m = models(cos_v(XProfile::TwoPlusSin));
        let q = Query::new(0.3, 0.8, 1.0 / 16.0, 1.0, 1.0).unwrap();
        for b in Branch::BOTH {
            let p = integrate_el(&m, &q, 0.7, b).unwrap();
            let e = oscillatory_endpoint(&m, &q, 0.7, b).unwrap();
            assert!((p.x_end() - e.x_end).abs() < 1e-6, "{} vs {}", p.x_end(), e.x_end);
            assert!(p.drift < DRIFT_TOL);
            assert!(p.el_gap < 1e-6);
        }
    }

    #[test]
    fn endpoint_sandwich() {
        let m = models(cos_v(XProfile::Constant(1.0)));
        let q = Query::new(0.0, 1.0, 1.0 / 16.0, 1.0, 1.0).unwrap();
        let e = oscillatory_endpoint(&m, &q, 1.0, Branch::Right).unwrap();
        assert!(e.x_end >= 2f64.sqrt() && e.x_end <= 8f64.sqrt(), "{}", e.x_end);
    }

    #[test]
    fn effective_endpoint_inverts_mean_sojourn() {
        let m = models(cos_v(XProfile::Constant(1.0)));
        let q = Query::new(0.0, 1.0, 0.5, 1.0, 1.0).unwrap();
        // Midpoint rule on the smooth periodic sojourn density.
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|k| {
                let y = (k as f64 + 0.5) / n as f64;
                1.0 / (2.0 * (1.0 - ((2.0 * std::f64::consts::PI * y).cos() - 1.0))).sqrt()
            })
            .sum::<f64>()
            / n as f64;
        let c = effective_endpoint(&m, &q, 1.0, Branch::Right).unwrap();
        assert!((c.c - 1.0 / mean).abs() < 1e-9);
        let c_low = effective_endpoint(&m, &q, 0.5, Branch::Right).unwrap();
        assert!(c_low.c < c.c);
        let c2 = effective_endpoint(&m, &q, 1.0, Branch::Left).unwrap();
        assert!((c2.c + c.c).abs() < 1e-12);
    }

    #[test]
    fn x_dependent_effective_endpoint_hits_the_time() {
        let m = models(cos_v(XProfile::TwoPlusSin));
        let q = Query::new(0.2, 0.9, 0.5, 1.0, 1.0).unwrap();
        for b in Branch::BOTH {
            let c = effective_endpoint(&m, &q, 0.4, b).unwrap();
            let t = segment_integral(&m, q.x0, c.c, 0.4, b).unwrap()[0];
            assert!((t - q.t0).abs() < 1e-10);
            assert_eq!((c.c - q.x0).signum(), b.sign());
        }
    }

    #[test]
    fn separatrices_are_confined() {
        let m = models(cos_v(XProfile::Constant(1.0)));
        let q = Query::new(0.25 / 8.0, 1.0, 1.0 / 8.0, 1.0, 1.0).unwrap();
        let (plus, minus) = separatrix_paths(&m, &q).unwrap();
        assert_eq!(plus.limit, 1.0);
        assert_eq!(minus.limit, 0.0);
        for w in plus.samples.windows(2) {
            assert!(w[1].1 >= w[0].1 && w[1].1 <= 1.0);
        }
        for w in minus.samples.windows(2) {
            assert!(w[1].1 <= w[0].1 && w[1].1 >= 0.0);
        }
        assert!(1.0 - plus.end < 1e-6);
    }

    #[test]
    fn separatrix_at_a_zero_is_stationary() {
        let m = models(cos_v(XProfile::Constant(1.0)));
        let q = Query::new(0.25, 1.0, 0.125, 1.0, 1.0).unwrap();
        let (plus, minus) = separatrix_paths(&m, &q).unwrap();
        assert!(plus.is_stationary() && minus.is_stationary());
        assert_eq!(plus.end, 2.0);
    }

    #[test]
    fn smooth_separatrix_time_diverges_logarithmically() {
        // Near a nondegenerate zero |V| ~ 2 pi^2 d^2, so d' = -2 pi d and the
        // time between gaps d1 > d2 tends to ln(d1 / d2) / (2 pi).
        let m = models(cos_v(XProfile::Constant(1.0)));
        let q = Query::new(0.5 * 0.01, 200.0 * 0.01, 0.01, 1.0, 2.0).unwrap();
        let (plus, _) = separatrix_paths(&m, &q).unwrap();
        let time_at = |gap: f64| plus.samples.iter().find(|s| 1.0 - s.1 <= gap).unwrap().0;
        let dt = time_at(1e-8) - time_at(1e-4);
        let expected = (1e4f64).ln() / (2.0 * std::f64::consts::PI);
        assert!((dt - expected).abs() < 1e-3, "{dt} vs {expected}");
    }

    #[test]
    fn corrupted_velocities_are_detected() {
        let m = models(cos_v(XProfile::Constant(1.0)));
        let q = Query::new(0.0, 0.5, 0.25, 1.0, 1.0).unwrap();
        let mut p = integrate_el(&m, &q, 0.6, Branch::Right).unwrap();
        assert!(energy_drift(&m, &p).unwrap() < DRIFT_TOL);
        for s in p.samples.iter_mut() {
            s.eta_dot *= 1.1;
        }
        assert!(energy_drift(&m, &p).unwrap() >= 0.1 * 0.6);
    }
}
