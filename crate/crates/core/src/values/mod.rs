//! Action functionals, the energy truncation `r0`, and the evaluators for
//! `u^eps(x0, t0)` and the homogenized `u(x0, t0)`.

mod closure;
mod constants;

pub use constants::{certified_constants, CertifiedConstants};

use std::fmt;

use crate::ergodic::{panel_integral, PanelGrid};
use crate::error::Result;
use crate::model::{Branch, Models};
use crate::numerics::minimize::{multistart_log, Minimum};
use crate::numerics::quadrature::{integrate_vec, integrate_vec_with_breaks, QuadOptions};
use crate::numerics::roots::bisect;
use crate::trajectories::{effective_endpoint, oscillatory_endpoint, separatrix_paths, Query};

/// Seeds of the logarithmic energy scan.
pub const R_SEEDS: usize = 64;
/// Golden-section tolerance on the minimizing energy.
pub const R_TOL: f64 = 1e-9;
/// The energy scan starts at `r0 * R_FLOOR`.
pub const R_FLOOR: f64 = 1e-8;

/// Smallest energy above which competing paths cost at least `u^eps + t0`.
///
/// Quadratic `H`: smallest `r >= C̄ + 1 + Lip sqrt(2 (r + ||V||))`.
/// Otherwise: smallest `r` with `G_1(r) >= 2 (K0 + Lip)` and
/// `G_1(r) (G_1(r) / 2 - K0 - Lip) >= C̄ + 1`.
pub fn r0_threshold(models: &Models) -> f64 {
    let c_bar = models.c_bar();
    let lip = models.lip();
    let sup_v = models.sup_v();
    let ham = &models.hamiltonian;
    if ham.is_quadratic() {
        // The residual is convex and negative at r = 0: one sign change.
        let phi = |r: f64| r - c_bar - 1.0 - lip * (2.0 * (r + sup_v)).sqrt();
        let mut top = 1.0;
        while phi(top) < 0.0 {
            top *= 2.0;
        }
        return bisect(phi, 0.0, top, 1e-13 * top).unwrap_or(top);
    }
    let k = ham.k0() + lip;
    let speed = (2.0 * k).max(k + (k * k + 2.0 * (c_bar + 1.0)).sqrt());
    // G_1(r) = speed  <=>  r = H((H')^{-1}(speed)).
    match ham.momentum(speed) {
        Ok(p) => ham.h(p),
        Err(_) => f64::INFINITY,
    }
}

/// Which candidate attains the minimum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Winner {
    /// `u0(x0)` itself (the nonpositive-energy part of the homogenized formula,
    /// or `t0 = 0`).
    Initial,
    /// The path resting at `x0 / eps`.
    Stationary,
    /// `gamma_+` (`Right`) or `gamma_-` (`Left`).
    Separatrix(Branch),
    /// A constant-energy path or effective endpoint with energy `r > 0`.
    Energy { branch: Branch, r: f64 },
    /// The `r -> 0+` limit of branch `i`, below the scanned energies.
    Limit(Branch),
}

impl Winner {
    /// The energy of the winning candidate, `0` for the nonpositive ones.
    pub fn energy(&self) -> f64 {
        match self {
            Winner::Energy { r, .. } => *r,
            _ => 0.0,
        }
    }
}

impl fmt::Display for Winner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Winner::Initial => write!(f, "u0"),
            Winner::Stationary => write!(f, "r<=0:stationary"),
            Winner::Separatrix(Branch::Right) => write!(f, "r<=0:gamma+"),
            Winner::Separatrix(Branch::Left) => write!(f, "r<=0:gamma-"),
            Winner::Energy { branch, r } => write!(f, "({}, r={r:.6e})", branch.index()),
            Winner::Limit(branch) => write!(f, "({}, r->0+)", branch.index()),
        }
    }
}

/// A computed value `u^eps(x0, t0)` or `u(x0, t0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValueReport {
    /// Value for the Hamiltonian including `C0`.
    pub value: f64,
    /// Value with `C0 = 0`.
    pub normalized: f64,
    pub winner: Winner,
    /// Where the winning path ends at time `t0` (`x`-units).
    pub endpoint: f64,
}

impl ValueReport {
    fn new(models: &Models, q: &Query, normalized: f64, winner: Winner, endpoint: f64) -> Self {
        Self {
            value: normalized - models.c0_shift * q.t0,
            normalized,
            winner,
            endpoint,
        }
    }
}

/// `A^eps = -r t0 + ∫ |H_i^{-1}(r - V(x, x/eps))| dx + u0(x_end)` along the
/// constant-energy path of branch `i`.
pub fn action_positive(models: &Models, q: &Query, r: f64, branch: Branch) -> Result<f64> {
    action_positive_with_end(models, q, r, branch).map(|(a, _)| a)
}

fn action_positive_with_end(models: &Models, q: &Query, r: f64, branch: Branch) -> Result<(f64, f64)> {
    let e = oscillatory_endpoint(models, q, r, branch)?;
    Ok((-r * q.t0 + e.momentum_integral + models.u0.value(e.x_end), e.x_end))
}

/// Quadratic `H` only: `r t0 + ∫ -2V / sqrt(2 (r - V)) dx + u0(x_end)`,
/// the same action written with `L(v) = v^2 / 2`.
pub fn action_positive_classical(models: &Models, q: &Query, r: f64, branch: Branch) -> Result<f64> {
    let e = oscillatory_endpoint(models, q, r, branch)?;
    let pot = &models.potential;
    let eps = q.eps;
    let grid = PanelGrid::new(eps, &pot.cell_breaks());
    let run = panel_integral(
        |x| {
            let v = pot.v(x, x / eps);
            [-2.0 * v / (2.0 * (r - v)).sqrt()]
        },
        q.x0,
        e.x_end,
        &grid,
    )?[0]
        .abs();
    Ok(r * q.t0 + run + models.u0.value(e.x_end))
}

/// Value of the nonpositive-energy branch and its minimizing surrogate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NonpositiveValue {
    pub value: f64,
    pub winner: Winner,
    pub endpoint: f64,
    /// Limits of `gamma_+` and `gamma_-` in `x`-units.
    pub limits: (f64, f64),
}

/// Minimum of the actions of `gamma_+`, `gamma_-` and the path resting at
/// `x0 / eps`. Along the zero-energy separatrices the running cost is
/// `|H_i^{-1}(-V)|` per unit length.
pub fn action_nonpositive(models: &Models, q: &Query) -> Result<NonpositiveValue> {
    let pot = &models.potential;
    let ham = &models.hamiltonian;
    let eps = q.eps;
    let mut best = NonpositiveValue {
        value: -pot.v(q.x0, q.x0 / eps) * q.t0 + models.u0.value(q.x0),
        winner: Winner::Stationary,
        endpoint: q.x0,
        limits: (q.x0, q.x0),
    };
    let (plus, minus) = separatrix_paths(models, q)?;
    best.limits = (eps * plus.limit, eps * minus.limit);
    let grid = PanelGrid::new(eps, &pot.cell_breaks());
    for sep in [plus, minus] {
        let x_end = eps * sep.end;
        let run = if x_end == q.x0 {
            0.0
        } else {
            panel_integral(
                |x| [ham.inverse(sep.branch, -pot.v(x, x / eps)).abs()],
                q.x0,
                x_end,
                &grid,
            )?[0]
                .abs()
        };
        let value = run + models.u0.value(x_end);
        if value < best.value - tie_tol(best.value) {
            best = NonpositiveValue {
                value,
                winner: Winner::Separatrix(sep.branch),
                endpoint: x_end,
                limits: best.limits,
            };
        }
    }
    Ok(best)
}

fn tie_tol(v: f64) -> f64 {
    1e-12 * v.abs().max(1.0)
}

/// Keeps `cand` only if it is smaller beyond the tie tolerance, or tied with
/// a smaller energy.
fn better(cand: &ValueCandidate, best: &ValueCandidate) -> bool {
    let tol = tie_tol(best.value);
    cand.value < best.value - tol || ((cand.value - best.value).abs() <= tol && cand.winner.energy() < best.winner.energy())
}

#[derive(Clone, Copy, Debug)]
struct ValueCandidate {
    value: f64,
    winner: Winner,
    endpoint: f64,
}

fn minimize_energy<F>(f: F, r0: f64) -> Result<Minimum>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    multistart_log(f, r0 * R_FLOOR, r0, R_SEEDS, R_TOL)
}

/// `u^eps(x0, t0)`: the nonpositive-energy branch against both branches of
/// constant-energy paths with `0 < r < r0`.
pub fn u_eps(models: &Models, q: &Query) -> Result<ValueReport> {
    if q.t0 == 0.0 {
        return Ok(ValueReport::new(models, q, models.u0.value(q.x0), Winner::Initial, q.x0));
    }
    let r0 = r0_threshold(models);
    let neg = action_nonpositive(models, q)?;
    let mut best = ValueCandidate {
        value: neg.value,
        winner: neg.winner,
        endpoint: neg.endpoint,
    };
    let (right, left) = rayon::join(
        || minimize_energy(|r| action_positive(models, q, r, Branch::Right), r0),
        || minimize_energy(|r| action_positive(models, q, r, Branch::Left), r0),
    );
    for (branch, m) in [(Branch::Right, right?), (Branch::Left, left?)] {
        let (value, endpoint) = action_positive_with_end(models, q, m.x, branch)?;
        let cand = ValueCandidate {
            value,
            winner: Winner::Energy { branch, r: m.x },
            endpoint,
        };
        if better(&cand, &best) {
            best = cand;
        }
        let from = match branch {
            Branch::Right => neg.limits.0,
            Branch::Left => neg.limits.1,
        };
        let x_far = oscillatory_endpoint(models, q, r0 * R_FLOOR, branch)?.x_end;
        if let Some((value, endpoint)) = closure::oscillatory_closure(models, q, branch, from, x_far)? {
            let cand = ValueCandidate {
                value,
                winner: Winner::Limit(branch),
                endpoint,
            };
            if better(&cand, &best) {
                best = cand;
            }
        }
    }
    Ok(ValueReport::new(models, q, best.value, best.winner, best.endpoint))
}

/// `I_i(r) = -r t0 + ∫∫ |H_i^{-1}(r - V(x, y))| dy dx + u0(c_{i,r})`, the
/// double integral running between `x0` and `c_{i,r}`.
pub fn effective_i(models: &Models, q: &Query, r: f64, branch: Branch) -> Result<f64> {
    effective_i_with_end(models, q, r, branch).map(|(v, _)| v)
}

fn effective_i_with_end(models: &Models, q: &Query, r: f64, branch: Branch) -> Result<(f64, f64)> {
    let e = effective_endpoint(models, q, r, branch)?;
    Ok((-r * q.t0 + e.momentum_integral + models.u0.value(e.c), e.c))
}

/// Quadratic `H` only: `r t0 + ∫∫ -2V / sqrt(2 (r - V)) dy dx + u0(c_{i,r})`.
pub fn effective_i_classical(models: &Models, q: &Query, r: f64, branch: Branch) -> Result<f64> {
    let c = effective_endpoint(models, q, r, branch)?.c;
    let pot = &models.potential;
    let breaks = pot.cell_breaks();
    let inner = QuadOptions::default().with_abs_tol(1e-14).with_rel_tol(1e-13);
    let cell = |x: f64| {
        integrate_vec_with_breaks(
            |y| {
                let v = pot.v(x, y);
                [-2.0 * v / (2.0 * (r - v)).sqrt()]
            },
            0.0,
            1.0,
            &breaks,
            &inner,
        )
        .map(|v| v[0])
        .unwrap_or(f64::NAN)
    };
    let (lo, hi) = if c < q.x0 { (c, q.x0) } else { (q.x0, c) };
    let run = if hi > lo {
        let outer = QuadOptions::default().with_abs_tol(1e-13).with_rel_tol(1e-13);
        integrate_vec(|x| [cell(x)], lo, hi, &outer)?.value[0]
    } else {
        0.0
    };
    Ok(r * q.t0 + run + models.u0.value(c))
}

/// `u(x0, t0) = min{u0(x0), inf_r I_1(r), inf_r I_2(r)}`.
pub fn u_effective(models: &Models, q: &Query) -> Result<ValueReport> {
    let mut best = ValueCandidate {
        value: models.u0.value(q.x0),
        winner: Winner::Initial,
        endpoint: q.x0,
    };
    if q.t0 == 0.0 {
        return Ok(ValueReport::new(models, q, best.value, best.winner, best.endpoint));
    }
    let r0 = r0_threshold(models);
    let (right, left) = rayon::join(
        || minimize_energy(|r| effective_i(models, q, r, Branch::Right), r0),
        || minimize_energy(|r| effective_i(models, q, r, Branch::Left), r0),
    );
    for (branch, m) in [(Branch::Right, right?), (Branch::Left, left?)] {
        let (value, endpoint) = effective_i_with_end(models, q, m.x, branch)?;
        let cand = ValueCandidate {
            value,
            winner: Winner::Energy { branch, r: m.x },
            endpoint,
        };
        if better(&cand, &best) {
            best = cand;
        }
        let x_far = effective_endpoint(models, q, r0 * R_FLOOR, branch)?.c;
        if let Some((value, endpoint)) = closure::effective_closure(models, q, branch, x_far)? {
            let cand = ValueCandidate {
                value,
                winner: Winner::Limit(branch),
                endpoint,
            };
            if better(&cand, &best) {
                best = cand;
            }
        }
    }
    Ok(ValueReport::new(models, q, best.value, best.winner, best.endpoint))
}
