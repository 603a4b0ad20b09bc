//! Convergence-rate studies over an `eps` ladder.

use std::fmt::Write as _;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::model::Models;
use crate::oracle::{fd_solve_effective, fd_solve_oscillatory, FdSettings, FdWindow};
use crate::trajectories::Query;
use crate::values::{certified_constants, u_eps, u_effective};

/// Largest allowed gap between the action and grid evaluators, in grid cells.
pub const CROSS_ORACLE_CELLS: f64 = 10.0;

/// Ordinary least squares of `log error` against `log eps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute deviation of a point from the fitted line.
    pub residual: f64,
    pub points: usize,
}

/// Fits `log error = slope log eps + intercept` over rows with positive
/// error. `None` when fewer than four such rows remain.
pub fn fit_slope(rows: &[(f64, f64)]) -> Option<SlopeFit> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|(e, err)| *e > 0.0 && *err > 0.0 && err.is_finite())
        .map(|(e, err)| (e.ln(), err.ln()))
        .collect();
    if pts.len() < 4 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = pts
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).abs())
        .fold(0.0, f64::max);
    Some(SlopeFit {
        slope,
        intercept,
        residual,
        points: pts.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeValue {
    pub x0: f64,
    pub t0: f64,
    pub action: Option<f64>,
    pub fd: Option<f64>,
    pub effective: f64,
    /// `|u^eps - u|`, with `u^eps` from the action evaluator when it ran.
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateRow {
    pub eps: f64,
    pub dx: f64,
    pub probes: Vec<ProbeValue>,
    /// `None` when an evaluator failed; see `failure`.
    pub sup_error: Option<f64>,
    /// `max |u^eps_action - u^eps_fd|` over probes, when both ran.
    pub cross_oracle_gap: Option<f64>,
    /// `C eps` when a certified constant is available.
    pub certificate_bound: Option<f64>,
    pub failure: Option<String>,
}

impl RateRow {
    pub fn within_certificate(&self) -> bool {
        match (self.sup_error, self.certificate_bound) {
            (Some(e), Some(b)) => e <= b + 1e-6 * self.eps,
            _ => true,
        }
    }

    pub fn cross_oracle_ok(&self) -> bool {
        self.cross_oracle_gap
            .map_or(true, |g| g <= CROSS_ORACLE_CELLS * self.dx)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub config_hash: String,
    /// Sorted by decreasing `eps`.
    pub rows: Vec<RateRow>,
    pub fit: Option<SlopeFit>,
    /// The constant `C` in `|u^eps - u| <= C eps`, if certified.
    pub certificate: Option<f64>,
    /// `max |u - u_fd|` for the effective equation and the grid spacing used.
    pub effective_gap: Option<(f64, f64)>,
}

impl ConvergenceReport {
    /// Fewer than four rows with a positive error: no slope.
    pub fn is_complete(&self) -> bool {
        self.fit.is_some()
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for row in &self.rows {
            if let Some(f) = &row.failure {
                out.push(format!("eps = {}: evaluator failed: {f}", row.eps));
            }
            if !row.within_certificate() {
                out.push(format!(
                    "eps = {}: sup error {:e} exceeds the certificate {:e}",
                    row.eps,
                    row.sup_error.unwrap_or(f64::NAN),
                    row.certificate_bound.unwrap_or(f64::NAN)
                ));
            }
            if !row.cross_oracle_ok() {
                out.push(format!(
                    "eps = {}: cross-oracle gap {:e} exceeds {} dx = {:e}",
                    row.eps,
                    row.cross_oracle_gap.unwrap_or(f64::NAN),
                    CROSS_ORACLE_CELLS,
                    CROSS_ORACLE_CELLS * row.dx
                ));
            }
        }
        if let Some((gap, dx)) = self.effective_gap {
            if gap > CROSS_ORACLE_CELLS * dx {
                out.push(format!(
                    "effective equation: grid gap {gap:e} exceeds {CROSS_ORACLE_CELLS} dx = {:e}",
                    CROSS_ORACLE_CELLS * dx
                ));
            }
        }
        out
    }

    pub fn passed(&self) -> bool {
        self.failures().is_empty()
    }

    /// `epsilon,sup_error,slope_running,certificate_bound,cross_oracle_gap,config_hash,status`.
    /// Empty fields mark values that were not computed.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,sup_error,slope_running,certificate_bound,cross_oracle_gap,config_hash,status\n");
        let mut seen = Vec::new();
        for row in &self.rows {
            if let Some(e) = row.sup_error {
                seen.push((row.eps, e));
            }
            let slope = fit_slope(&seen).map(|f| f.slope);
            let status = match &row.failure {
                Some(f) => format!("failed: {}", f.replace([',', '\n'], ";")),
                None if !row.within_certificate() => "above_certificate".into(),
                None if !row.cross_oracle_ok() => "cross_oracle_gap".into(),
                None => "ok".into(),
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                num(row.eps),
                opt(row.sup_error),
                opt(slope),
                opt(row.certificate_bound),
                opt(row.cross_oracle_gap),
                self.config_hash,
                status
            );
        }
        out
    }

    /// One line per `(eps, probe)`:
    /// `epsilon,x0,t0,u_eps_action,u_eps_fd,u_effective,error,config_hash`.
    pub fn probes_csv(&self) -> String {
        let mut out = String::from("epsilon,x0,t0,u_eps_action,u_eps_fd,u_effective,error,config_hash\n");
        for row in &self.rows {
            for p in &row.probes {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    num(row.eps),
                    num(p.x0),
                    num(p.t0),
                    opt(p.action),
                    opt(p.fd),
                    num(p.effective),
                    num(p.error),
                    self.config_hash
                );
            }
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "config {}", self.config_hash);
        for row in &self.rows {
            let _ = writeln!(
                out,
                "eps = {:<12} sup error = {:<24} error/eps = {:<24} bound = {}",
                num(row.eps),
                opt(row.sup_error),
                opt(row.sup_error.map(|e| e / row.eps)),
                opt(row.certificate_bound)
            );
        }
        match self.fit {
            Some(f) => {
                let _ = writeln!(
                    out,
                    "slope = {:.4} intercept = {:.4} residual = {:.3e} ({} points)",
                    f.slope, f.intercept, f.residual, f.points
                );
            }
            None => {
                let _ = writeln!(out, "slope: incomplete (fewer than 4 rows with positive error)");
            }
        }
        if let Some((gap, dx)) = self.effective_gap {
            let _ = writeln!(out, "effective grid gap = {gap:e} ({:.3} dx)", gap / dx);
        }
        for f in self.failures() {
            let _ = writeln!(out, "FAIL {f}");
        }
        out
    }
}

/// Shortest round-trip spelling, in exponent form for very small or large
/// magnitudes.
pub fn num(x: f64) -> String {
    if x != 0.0 && x.is_finite() && (x.abs() < 1e-4 || x.abs() >= 1e6) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Sorted distinct probe times.
fn probe_times(cfg: &ExperimentConfig) -> Vec<f64> {
    let mut ts: Vec<f64> = cfg.probes.iter().map(|p| p.1).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

fn rate_row(cfg: &ExperimentConfig, models: &Models, eps: f64, effective: &[f64], cert: Option<f64>) -> RateRow {
    let dx = cfg.dx(eps);
    let mut row = RateRow {
        eps,
        dx,
        probes: Vec::new(),
        sup_error: None,
        cross_oracle_gap: None,
        certificate_bound: cert.map(|c| c * eps),
        failure: None,
    };
    let result = (|| -> Result<Vec<ProbeValue>> {
        let grid = if cfg.evaluator.uses_fd() {
            let window = FdWindow::new(cfg.half_width, cfg.horizon, &probe_times(cfg))?;
            Some(fd_solve_oscillatory(models, eps, &window, &FdSettings::new(dx))?)
        } else {
            None
        };
        cfg.probes
            .par_iter()
            .zip(effective.par_iter())
            .map(|(&(x0, t0), &u)| {
                let action = if cfg.evaluator.uses_action() {
                    let q = Query::new(x0, t0, eps, cfg.half_width, cfg.horizon)?;
                    Some(u_eps(models, &q)?.value)
                } else {
                    None
                };
                let fd = match &grid {
                    Some(g) => Some(g.value_at(x0, t0)? - models.c0_shift * t0),
                    None => None,
                };
                let ue = action.or(fd).expect("an evaluator ran");
                Ok(ProbeValue {
                    x0,
                    t0,
                    action,
                    fd,
                    effective: u,
                    error: (ue - u).abs(),
                })
            })
            .collect()
    })();
    match result {
        Ok(probes) => {
            row.sup_error = Some(probes.iter().map(|p| p.error).fold(0.0, f64::max));
            if cfg.evaluator == super::config::Evaluator::Both {
                row.cross_oracle_gap = Some(
                    probes
                        .iter()
                        .map(|p| (p.action.unwrap() - p.fd.unwrap()).abs())
                        .fold(0.0, f64::max),
                );
            }
            row.probes = probes;
        }
        Err(e) => row.failure = Some(e.to_string()),
    }
    row
}

/// `C` for the window of `cfg`: the uniform constant when `V` does not
/// depend on `x`, otherwise `C_total`; `None` unless certified.
pub fn certificate_constant(cfg: &ExperimentConfig, models: &Models) -> Result<Option<f64>> {
    let (x0, t0) = cfg.probes[0];
    let q = Query::new(x0, t0, cfg.epsilons[0], cfg.half_width, cfg.horizon)?;
    let c = certified_constants(models, &q);
    if !c.certified {
        return Ok(None);
    }
    Ok(Some(c.c_uniform.map_or(c.c_total, |u| u.min(c.c_total))))
}

/// Runs every `eps` row of `cfg` against the homogenized value `u` at each
/// probe. Evaluator failures are recorded in the affected row.
pub fn run_rate_study(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    let models = cfg.models()?;
    let cert = certificate_constant(cfg, &models)?;
    let effective: Vec<f64> = cfg
        .probes
        .par_iter()
        .map(|&(x0, t0)| {
            let q = Query::new(x0, t0, cfg.epsilons[0], cfg.half_width, cfg.horizon)?;
            Ok(u_effective(&models, &q)?.value)
        })
        .collect::<Result<_>>()?;

    let effective_gap = if cfg.evaluator.uses_fd() {
        let dx = cfg.dx(cfg.epsilons[0]);
        let window = FdWindow::new(cfg.half_width, cfg.horizon, &probe_times(cfg))?;
        let grid = fd_solve_effective(&models, &window, &FdSettings::new(dx))?;
        let mut gap = 0.0f64;
        for (&(x0, t0), &u) in cfg.probes.iter().zip(&effective) {
            gap = gap.max((grid.value_at(x0, t0)? - models.c0_shift * t0 - u).abs());
        }
        Some((gap, dx))
    } else {
        None
    };

    let mut rows: Vec<RateRow> = cfg
        .epsilons
        .par_iter()
        .map(|&eps| rate_row(cfg, &models, eps, &effective, cert))
        .collect();
    rows.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.sup_error.map(|e| (r.eps, e)))
        .collect();
    Ok(ConvergenceReport {
        config_hash: cfg.hash(),
        fit: fit_slope(&points),
        rows,
        certificate: cert,
        effective_gap,
    })
}

/// Writes `rate.csv` and `rate_probes.csv` into `dir`.
pub fn write_report(report: &ConvergenceReport, dir: &std::path::Path) -> Result<()> {
    let io = |path: std::path::PathBuf| move |source| Error::Io { path, source };
    std::fs::create_dir_all(dir).map_err(io(dir.to_path_buf()))?;
    let rate = dir.join("rate.csv");
    std::fs::write(&rate, report.to_csv()).map_err(io(rate.clone()))?;
    let probes = dir.join("rate_probes.csv");
    std::fs::write(&probes, report.probes_csv()).map_err(io(probes.clone()))?;
    Ok(())
}
