//! Explicit monotone finite-difference solver for `u_t + H(x, u_x) = 0`.

use rayon::prelude::*;

use super::effective::EffectiveTable;
use crate::error::{Error, Result};
use crate::model::Models;

/// Numerical Hamiltonian of the update `u <- u - dt * flux(p-, p+)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Flux {
    /// `H((p- + p+) / 2) - theta (p+ - p-) / 2`. Its dissipation acts on
    /// `u_xx ~ 1/eps` and smears the cell-scale structure unless `dx << eps`.
    LaxFriedrichs,
    /// `max(H(max(p-, 0)), H(min(p+, 0)))`, the exact Riemann flux for `H`
    /// convex with its minimum at `p = 0`.
    #[default]
    Godunov,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FdSettings {
    pub dx: f64,
    pub flux: Flux,
    /// Extra cells beyond the report window; defaults to `max(c0, T theta) + 1`.
    pub padding: Option<f64>,
    /// Energy levels of the effective table.
    pub levels: usize,
}

impl FdSettings {
    pub fn new(dx: f64) -> Self {
        Self {
            dx,
            flux: Flux::default(),
            padding: None,
            levels: 300,
        }
    }

    pub fn with_flux(mut self, flux: Flux) -> Self {
        self.flux = flux;
        self
    }

    pub fn with_padding(mut self, padding: f64) -> Self {
        self.padding = Some(padding);
        self
    }
}

/// Snapshots of a grid solution at the requested times.
#[derive(Clone, Debug)]
pub struct GridSolution {
    pub x_lo: f64,
    pub dx: f64,
    /// Largest time step used.
    pub dt: f64,
    pub theta: f64,
    pub times: Vec<f64>,
    pub slices: Vec<Vec<f64>>,
    pub steps: usize,
    /// Largest one-sided difference quotient seen during the run.
    pub max_gradient: f64,
}

impl GridSolution {
    pub fn x_hi(&self) -> f64 {
        self.x_lo + self.dx * (self.slices[0].len() - 1) as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_lo + self.dx * j as f64
    }

    /// Linear interpolation in `x` on the snapshot at time `t`.
    pub fn value_at(&self, x: f64, t: f64) -> Result<f64> {
        let n = self
            .times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-12 * t.max(1.0))
            .ok_or_else(|| Error::Domain(format!("no snapshot at t = {t}")))?;
        let u = &self.slices[n];
        let s = (x - self.x_lo) / self.dx;
        if !(s >= 0.0 && s <= (u.len() - 1) as f64) {
            return Err(Error::Domain(format!("x = {x} outside [{}, {}]", self.x_lo, self.x_hi())));
        }
        let j = (s.floor() as usize).min(u.len() - 2);
        let w = s - j as f64;
        Ok((1.0 - w) * u[j] + w * u[j + 1])
    }
}

/// Where and until when the solution is reported.
#[derive(Clone, Debug, PartialEq)]
pub struct FdWindow {
    pub half_width: f64,
    pub horizon: f64,
    pub times: Vec<f64>,
}

impl FdWindow {
    pub fn new(half_width: f64, horizon: f64, times: &[f64]) -> Result<Self> {
        let mut times: Vec<f64> = times.to_vec();
        if times.iter().any(|&t| !(t >= 0.0 && t <= horizon)) {
            return Err(Error::InvalidParameter(format!("snapshot times must lie in [0, {horizon}]")));
        }
        times.sort_by(f64::total_cmp);
        times.dedup();
        Ok(Self {
            half_width,
            horizon,
            times,
        })
    }
}

fn theta_for(models: &Models, bound: f64) -> f64 {
    let h = &models.hamiltonian;
    h.dh(bound).abs().max(h.dh(-bound).abs())
}

/// Physical reach `c0 = T G(r0 + ||V||)` of characteristics over the horizon.
fn reach(models: &Models, horizon: f64) -> f64 {
    let r0 = crate::values::r0_threshold(models);
    crate::model::Branch::BOTH
        .iter()
        .map(|&b| horizon * models.hamiltonian.g(b, r0 + models.sup_v()).abs())
        .fold(0.0, f64::max)
}

struct Layout {
    x_lo: f64,
    n: usize,
    theta: f64,
}

fn layout(models: &Models, window: &FdWindow, settings: &FdSettings) -> Result<Layout> {
    if !(settings.dx > 0.0) {
        return Err(Error::InvalidParameter(format!("dx must be positive, got {}", settings.dx)));
    }
    let theta = theta_for(models, models.hamiltonian.grad_bound() + 1.0);
    let needed = reach(models, window.horizon);
    let padding = settings
        .padding
        .unwrap_or_else(|| needed.max(window.horizon * theta) + 1.0);
    if padding < needed {
        return Err(Error::BoundaryContamination {
            window_lo: -window.half_width,
            window_hi: window.half_width,
            padding,
            needed,
        });
    }
    // Nodes sit on dx Z, so with dx = eps / k every cell is sampled at the
    // same offsets and isolated zeros of V at rational offsets are nodes.
    let cells = ((window.half_width + padding) / settings.dx).ceil();
    let n = 2 * cells as usize + 1;
    Ok(Layout {
        x_lo: -cells * settings.dx,
        n,
        theta,
    })
}

/// Core time loop. `ham(j, p)` is the Hamiltonian at node `j`.
fn march<F>(
    models: &Models,
    window: &FdWindow,
    settings: &FdSettings,
    lay: Layout,
    ham: F,
) -> Result<GridSolution>
where
    F: Fn(usize, f64) -> f64 + Sync,
{
    let dx = settings.dx;
    let n = lay.n;
    let mut theta = lay.theta;
    let mut bound = models.hamiltonian.grad_bound() + 1.0;
    let mut u: Vec<f64> = (0..n).map(|j| models.u0.value(lay.x_lo + dx * j as f64)).collect();
    let mut next = vec![0.0; n];
    let mut slices = Vec::with_capacity(window.times.len());
    let mut t = 0.0;
    let mut steps = 0;
    let mut dt_used: f64 = 0.0;
    let mut max_gradient: f64 = 0.0;
    let flux = settings.flux;
    for &target in &window.times {
        while t < target {
            let dt_max = 0.5 * dx / theta;
            let remaining = target - t;
            let count = (remaining / dt_max).ceil().max(1.0);
            let dt = if count <= 1.0 { remaining } else { remaining / count };
            dt_used = dt_used.max(dt);
            let grad = step(&u, &mut next, dx, dt, theta, flux, &ham);
            max_gradient = max_gradient.max(grad);
            std::mem::swap(&mut u, &mut next);
            t = if count <= 1.0 { target } else { t + dt };
            steps += 1;
            if grad > bound {
                // Keep the scheme monotone: widen the dissipation and shrink dt.
                bound = grad * 1.25;
                theta = theta.max(theta_for(models, bound));
            }
        }
        slices.push(u.clone());
    }
    Ok(GridSolution {
        x_lo: lay.x_lo,
        dx,
        dt: dt_used,
        theta,
        times: window.times.clone(),
        slices,
        steps,
        max_gradient,
    })
}

fn step<F>(u: &[f64], out: &mut [f64], dx: f64, dt: f64, theta: f64, flux: Flux, ham: &F) -> f64
where
    F: Fn(usize, f64) -> f64 + Sync,
{
    let n = u.len();
    const CHUNK: usize = 4096;
    out.par_chunks_mut(CHUNK)
        .enumerate()
        .map(|(c, block)| {
            let mut grad: f64 = 0.0;
            for (k, o) in block.iter_mut().enumerate() {
                let j = c * CHUNK + k;
                // Neumann ghost cells.
                let left = if j == 0 { u[0] } else { u[j - 1] };
                let right = if j + 1 == n { u[n - 1] } else { u[j + 1] };
                let pm = (u[j] - left) / dx;
                let pp = (right - u[j]) / dx;
                grad = grad.max(pm.abs()).max(pp.abs());
                let h = match flux {
                    Flux::LaxFriedrichs => ham(j, 0.5 * (pm + pp)) - 0.5 * theta * (pp - pm),
                    Flux::Godunov => ham(j, pm.max(0.0)).max(ham(j, pp.min(0.0))),
                };
                *o = u[j] - dt * h;
            }
            grad
        })
        .reduce(|| 0.0, f64::max)
}

/// Grid solution of `u_t + H(u_x) + V(x, x/eps) = 0`.
pub fn fd_solve_oscillatory(models: &Models, eps: f64, window: &FdWindow, settings: &FdSettings) -> Result<GridSolution> {
    if settings.dx > eps / 20.0 {
        return Err(Error::InvalidParameter(format!(
            "dx = {} does not resolve the fast scale (needs dx <= eps / 20 = {})",
            settings.dx,
            eps / 20.0
        )));
    }
    let lay = layout(models, window, settings)?;
    let v: Vec<f64> = (0..lay.n)
        .map(|j| {
            let x = lay.x_lo + settings.dx * j as f64;
            models.potential.v(x, x / eps)
        })
        .collect();
    let h = &models.hamiltonian;
    march(models, window, settings, lay, |j, p| h.h(p) + v[j])
}

/// Node spacing of the `x` direction of the effective table.
pub const TABLE_DX: f64 = 0.05;

/// Grid solution of `u_t + H̄(x, u_x) = 0` with `H̄` tabulated over the grid.
pub fn fd_solve_effective(models: &Models, window: &FdWindow, settings: &FdSettings) -> Result<GridSolution> {
    let lay = layout(models, window, settings)?;
    if models.potential.is_zero() && models.potential.shift == 0.0 {
        let h = &models.hamiltonian;
        return march(models, window, settings, lay, |_, p| h.h(p));
    }
    let x_hi = lay.x_lo + settings.dx * (lay.n - 1) as f64;
    let p_max = models.hamiltonian.grad_bound() + 2.0;
    let table = EffectiveTable::build(models, lay.x_lo, x_hi, TABLE_DX.max(settings.dx), p_max, settings.levels)?;
    let xs: Vec<f64> = (0..lay.n).map(|j| lay.x_lo + settings.dx * j as f64).collect();
    march(models, window, settings, lay, |j, p| table.eval(xs[j], p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CellProfile, HamiltonianKind, InitialData, Potential, XProfile};

    fn models(v: Potential, u0: InitialData) -> Models {
        Models::new(HamiltonianKind::Quadratic, v, u0, 0.0, None).unwrap()
    }

    #[test]
    fn constant_data_stays_constant() {
        let m = models(Potential::zero(), InitialData::Constant(1.5));
        let w = FdWindow::new(1.0, 1.0, &[0.5, 1.0]).unwrap();
        let s = fd_solve_oscillatory(&m, 0.25, &w, &FdSettings::new(0.25 / 40.0)).unwrap();
        assert!(s.slices.iter().flatten().all(|&u| u == 1.5));
    }

    #[test]
    fn free_problem_converges_to_hopf_lax() {
        let m = models(Potential::zero(), InitialData::Clamp);
        let w = FdWindow::new(1.0, 1.0, &[1.0]).unwrap();
        for flux in [Flux::LaxFriedrichs, Flux::Godunov] {
            let dx = 1.0 / 320.0;
            let s = fd_solve_oscillatory(&m, 0.125, &w, &FdSettings::new(dx).with_flux(flux)).unwrap();
            let u = s.value_at(0.0, 1.0).unwrap();
            assert!((u + 0.5).abs() < 10.0 * dx, "{flux:?}: {u}");
            let e = fd_solve_effective(&m, &w, &FdSettings::new(dx).with_flux(flux)).unwrap();
            assert!((e.value_at(0.0, 1.0).unwrap() - u).abs() < 1e-9);
        }
    }

    #[test]
    fn short_padding_is_rejected() {
        let m = models(Potential::zero(), InitialData::Clamp);
        let w = FdWindow::new(1.0, 1.0, &[1.0]).unwrap();
        let err = fd_solve_oscillatory(&m, 0.125, &w, &FdSettings::new(0.125 / 40.0).with_padding(0.1)).unwrap_err();
        assert!(matches!(err, Error::BoundaryContamination { .. }));
    }

    #[test]
    fn under_resolved_grid_is_rejected() {
        let m = models(Potential::zero(), InitialData::Clamp);
        let w = FdWindow::new(1.0, 1.0, &[1.0]).unwrap();
        assert!(fd_solve_oscillatory(&m, 0.125, &w, &FdSettings::new(0.125 / 10.0)).is_err());
    }

    #[test]
    fn ordered_data_give_ordered_solutions() {
        let v = Potential::separable(XProfile::TwoPlusSin, CellProfile::Cos2PiMinus1 { scale: 1.0 });
        let lo = models(v.clone(), InitialData::Clamp);
        let mut hi = lo.clone();
        hi.u0 = InitialData::Constant(1.0);
        let w = FdWindow::new(1.0, 0.5, &[0.5]).unwrap();
        let st = FdSettings::new(0.25 / 40.0);
        let a = fd_solve_oscillatory(&lo, 0.25, &w, &st).unwrap();
        let b = fd_solve_oscillatory(&hi, 0.25, &w, &st).unwrap();
        for k in 0..=200 {
            let x = -1.0 + 0.01 * k as f64;
            assert!(a.value_at(x, 0.5).unwrap() <= b.value_at(x, 0.5).unwrap());
        }
    }
}
