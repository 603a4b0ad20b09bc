//! Assumption audit, rate constants and structural spot checks for one config.

use std::fmt::Write as _;

use super::config::ExperimentConfig;
use crate::ergodic::{verify_ergodic_bound, Oscilland};
use crate::model::{audit_assumptions, default_r_grid, AssumptionReport, Branch, Models};
use crate::trajectories::{integrate_el, Query, DRIFT_TOL};
use crate::values::{action_positive, certified_constants, r0_threshold, u_eps};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckRow {
    pub name: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub config_hash: String,
    pub rows: Vec<CheckRow>,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn to_table(&self) -> String {
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(5).max(5);
        let mut out = format!("# config {}\n", self.config_hash);
        let _ = writeln!(out, "{:<width$}  {:<6}  {:<14}  detail", "check", "result", "value");
        for r in &self.rows {
            let value = r.value.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "{:<width$}  {:<6}  {:<14}  {}",
                r.name,
                if r.passed { "PASS" } else { "FAIL" },
                value,
                r.detail
            );
        }
        out
    }
}

fn row(name: &str, passed: bool, value: Option<f64>, detail: impl Into<String>) -> CheckRow {
    CheckRow {
        name: name.into(),
        passed,
        value,
        detail: detail.into(),
    }
}

/// `H_i^{-1}(r - V(x, y))`, or the sojourn density `1 / G_i(r - V(x, y))`.
struct BranchIntegrand<'a> {
    models: &'a Models,
    r: f64,
    branch: Branch,
    sojourn: bool,
}

impl Oscilland for BranchIntegrand<'_> {
    fn f(&self, x: f64, y: f64) -> f64 {
        let s = self.r - self.models.potential.v(x, y);
        let h = &self.models.hamiltonian;
        if self.sojourn {
            1.0 / h.g(self.branch, s)
        } else {
            h.inverse(self.branch, s)
        }
    }

    fn fx(&self, x: f64, y: f64) -> f64 {
        let s = self.r - self.models.potential.v(x, y);
        let vx = self.models.potential.vx(x, y);
        let h = &self.models.hamiltonian;
        let g = h.g(self.branch, s);
        if self.sojourn {
            h.g_prime(self.branch, s) * vx / (g * g)
        } else {
            -vx / g
        }
    }

    fn y_breaks(&self) -> Vec<f64> {
        self.models.potential.cell_breaks()
    }
}

/// `V` itself as an oscillatory integrand.
struct PotentialIntegrand<'a>(&'a Models);

impl Oscilland for PotentialIntegrand<'_> {
    fn f(&self, x: f64, y: f64) -> f64 {
        self.0.potential.v(x, y)
    }

    fn fx(&self, x: f64, y: f64) -> f64 {
        self.0.potential.vx(x, y)
    }

    fn y_breaks(&self) -> Vec<f64> {
        self.0.potential.cell_breaks()
    }
}

fn ergodic_rows(models: &Models, lo: f64, hi: f64, eps: &[f64]) -> Vec<CheckRow> {
    let r0 = r0_threshold(models);
    let cases: Vec<(String, Box<dyn Oscilland + '_>)> = vec![
        ("ergodic V".into(), Box::new(PotentialIntegrand(models))),
        (
            "ergodic momentum(r0)".into(),
            Box::new(BranchIntegrand {
                models,
                r: r0,
                branch: Branch::Right,
                sojourn: false,
            }),
        ),
        (
            "ergodic sojourn(r0)".into(),
            Box::new(BranchIntegrand {
                models,
                r: r0,
                branch: Branch::Right,
                sojourn: true,
            }),
        ),
    ];
    cases
        .into_iter()
        .map(|(name, f)| match verify_ergodic_bound(f.as_ref(), lo, hi, eps) {
            Ok(rows) => {
                let worst = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
                let bound = rows.first().map_or(0.0, |r| r.bound / r.eps);
                let passed = rows.iter().all(|r| r.passed);
                row(&name, passed, Some(worst), format!("max error/eps over the ladder (C = {bound:.6e})"))
            }
            Err(e) => row(&name, false, None, e.to_string()),
        })
        .collect()
}

fn drift_row(models: &Models, q: &Query) -> CheckRow {
    let r0 = r0_threshold(models);
    let mut worst = 0.0f64;
    for k in [0, 4, 8] {
        let r = r0 * 2f64.powi(-k);
        for b in Branch::BOTH {
            match integrate_el(models, q, r, b) {
                Ok(p) => worst = worst.max(p.drift),
                Err(e) => return row("energy drift", false, None, format!("r = {r:e}, branch {}: {e}", b.index())),
            }
        }
    }
    row(
        "energy drift",
        worst < DRIFT_TOL,
        Some(worst),
        format!("max |H + V - r| at r0 2^-k, k = 0, 4, 8, eps = {}", q.eps),
    )
}

fn truncation_row(models: &Models, queries: &[Query]) -> CheckRow {
    let r0 = r0_threshold(models);
    let mut margin = f64::INFINITY;
    for q in queries {
        let u = match u_eps(models, q) {
            Ok(v) => v.normalized,
            Err(e) => return row("truncation r0", false, None, format!("probe ({}, {}): {e}", q.x0, q.t0)),
        };
        for b in Branch::BOTH {
            match action_positive(models, q, r0, b) {
                Ok(a) => margin = margin.min(a - (u + q.t0)),
                Err(e) => return row("truncation r0", false, None, e.to_string()),
            }
        }
    }
    row(
        "truncation r0",
        margin >= -1e-8,
        Some(margin),
        format!("min A^eps(r0) - u^eps - t0 over probes (r0 = {r0:.6e})"),
    )
}

fn probe_queries(cfg: &ExperimentConfig) -> Vec<Query> {
    cfg.probes
        .iter()
        .map(|&(x, t)| Query::new(x, t, cfg.epsilons[0], cfg.half_width, cfg.horizon).expect("probes are validated"))
        .collect()
}

/// (H1)-(H4) and (A0)-(A4) on the interval `I0` of the config window.
pub fn audit(cfg: &ExperimentConfig, models: &Models) -> AssumptionReport {
    let window = probe_queries(cfg)[0].window(models);
    audit_assumptions(models, (window.lo, window.hi), &default_r_grid())
}

/// Audit, constants and spot checks. Never fails: problems become rows.
pub fn run_checks(cfg: &ExperimentConfig) -> CheckReport {
    let mut rows = Vec::new();
    let checked = cfg.models();
    rows.push(match &checked {
        Ok(m) => row("hamiltonian", true, Some(m.hamiltonian.grad_bound()), m.hamiltonian.kind().label()),
        Err(e) => row("hamiltonian", false, None, e.to_string()),
    });
    let models = match cfg.models_unchecked() {
        Ok(m) => m,
        Err(e) => {
            rows.push(row("models", false, None, e.to_string()));
            return CheckReport {
                config_hash: cfg.hash(),
                rows,
            };
        }
    };

    let queries = probe_queries(cfg);
    let window = queries[0].window(&models);
    for c in &audit(cfg, &models).checks {
        let detail = if c.witness.0.is_empty() {
            c.note.clone()
        } else {
            format!("{} [witness {}]", c.note, c.witness)
        };
        rows.push(row(c.name, c.passed, Some(c.statistic), detail));
    }

    let models = match checked {
        Ok(m) => m,
        Err(_) => {
            rows.push(row(
                "numerics",
                false,
                None,
                "not run: the Hamiltonian was rejected",
            ));
            return CheckReport {
                config_hash: cfg.hash(),
                rows,
            };
        }
    };

    let c = certified_constants(&models, &queries[0]);
    let how = if c.sample_based { "sampled" } else { "closed form" };
    rows.push(row("r0", true, Some(c.window.r0), format!("I0 = [{:.6}, {:.6}], c0 = {:.6}", c.window.lo, c.window.hi, c.window.c0)));
    rows.push(row("C_K", c.c_k.is_finite(), Some(c.c_k), how));
    rows.push(row("C_F", c.c_f.is_finite(), Some(c.c_f), how));
    rows.push(row(
        "C_total",
        c.certified,
        Some(c.c_total),
        if c.certified { how.to_string() } else { format!("{how}, a sampled supremum did not settle") },
    ));
    rows.push(match c.c_uniform {
        Some(u) => row("C_uniform", true, Some(u), "2 (Lip(u0) + 4 sqrt(||V||)), V independent of x"),
        None => row("C_uniform", true, None, "not applicable: V depends on x"),
    });

    rows.extend(ergodic_rows(&models, window.lo, window.hi, &cfg.epsilons));
    rows.push(drift_row(&models, &queries[0]));
    rows.push(truncation_row(&models, &queries));

    CheckReport {
        config_hash: cfg.hash(),
        rows,
    }
}
